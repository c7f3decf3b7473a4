#include "cascade/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascade/networks.hpp"

namespace cascade {

EnvelopeContext EnvelopeContext::make(std::shared_ptr<const PosteriorModel<double>> model, double B, double L) {
  if (!model) throw ArgumentError("envelope: missing model");
  if (!(B > 0.0) || !(L >= 0.0)) throw ArgumentError("envelope: need B > 0 and L >= 0");
  EnvelopeContext ctx;
  ctx.B = B;
  ctx.L = L;
  ctx.anchors = model->data().points;
  if (ctx.anchors.rows() > 0) {
    const Prediction<double> p = model->predict(ctx.anchors);
    const Matrix<double> radius = (B * p.std).replicate(1, p.mean.cols());
    ctx.anchor_upper = p.mean + radius;
    ctx.anchor_lower = p.mean - radius;
  } else {
    ctx.anchor_upper = Matrix<double>(0, model->outputs());
    ctx.anchor_lower = Matrix<double>(0, model->outputs());
  }
  ctx.model = std::move(model);
  return ctx;
}

namespace {

// Envelope bounds at every point of `eval`, which also serve as anchors.
struct EnvelopeBlock {
  Matrix<double> upper;
  Matrix<double> lower;
};

void envelope_block(const EnvelopeContext& ctx, const PointSet<double>& eval, const Matrix<double>& mean,
                    const Vector<double>& std, Eigen::Index offset, Eigen::Index count, EnvelopePolicy policy,
                    EnvelopeBlock& out) {
  const Eigen::Index n = mean.cols();
  out.upper.resize(count, n);
  out.lower.resize(count, n);
  for (Eigen::Index q = 0; q < count; ++q) {
    out.upper.row(q) = mean.row(offset + q).array() + ctx.B * std(offset + q);
    out.lower.row(q) = mean.row(offset + q).array() - ctx.B * std(offset + q);
  }
  if (policy == EnvelopePolicy::Plain) return;

  const Matrix<double> self_upper = out.upper;
  const Matrix<double> self_lower = out.lower;
  for (Eigen::Index q = 0; q < count; ++q) {
    const auto z = eval.row(offset + q);
    for (Eigen::Index a = 0; a < count; ++a) {
      if (a == q) continue;
      const double cone = ctx.L * (z - eval.row(offset + a)).norm();
      for (Eigen::Index j = 0; j < n; ++j) {
        out.upper(q, j) = std::min(out.upper(q, j), self_upper(a, j) + cone);
        out.lower(q, j) = std::max(out.lower(q, j), self_lower(a, j) - cone);
      }
    }
    for (Eigen::Index a = 0; a < ctx.anchors.rows(); ++a) {
      const double cone = ctx.L * (z - ctx.anchors.row(a)).norm();
      for (Eigen::Index j = 0; j < n; ++j) {
        out.upper(q, j) = std::min(out.upper(q, j), ctx.anchor_upper(a, j) + cone);
        out.lower(q, j) = std::max(out.lower(q, j), ctx.anchor_lower(a, j) - cone);
      }
    }
  }
}

double single_envelope(const EnvelopeContext& ctx, const Point& z, Eigen::Index output, bool upper) {
  if (z.size() != ctx.dim()) throw ArgumentError("envelope: dimension mismatch");
  if (output < 0 || output >= ctx.outputs()) throw ArgumentError("envelope: output index out of range");
  const PointSet<double> eval = z.transpose();
  const Prediction<double> p = ctx.model->predict(eval);
  EnvelopeBlock block;
  envelope_block(ctx, eval, p.mean, p.std, 0, 1, EnvelopePolicy::Anchored, block);
  return upper ? block.upper(0, output) : block.lower(0, output);
}

}  // namespace

double ucb_env(const EnvelopeContext& ctx, const Point& z, Eigen::Index output) {
  return single_envelope(ctx, z, output, true);
}

double lcb_env(const EnvelopeContext& ctx, const Point& z, Eigen::Index output) {
  return single_envelope(ctx, z, output, false);
}

EvaluationSet evaluation_set(const Box& region, const PointSet<double>& observed, const PropagationOptions& opts) {
  if (opts.G < 1) throw ArgumentError("evaluation_set: G must be positive");
  const Eigen::Index d = region.dim();
  const Point width = region.width();
  std::vector<Point> pts;
  EvaluationSet out;
  if (d == 1) {
    const double lo = region.lo(0), hi = region.hi(0);
    pts.push_back(Point::Constant(1, lo));
    if (hi > lo) {
      for (int k = 0; k < opts.G; ++k) pts.push_back(Point::Constant(1, lo + (hi - lo) * (k + 0.5) / opts.G));
      pts.push_back(Point::Constant(1, hi));
    }
    out.cover = 0.5 * (hi - lo) / opts.G;
  } else {
    int per = std::max(2, std::min(opts.G, int(std::floor(std::pow(double(opts.max_box_points), 1.0 / double(d)) + 1e-9))));
    double sq = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double step = width(k) / double(per - 1);
      sq += step * step;
    }
    out.cover = 0.5 * std::sqrt(sq);
    if (width.maxCoeff() == 0.0) per = 1;
    const PointSet<double> lattice = box_lattice(region, per);
    for (Eigen::Index r = 0; r < lattice.rows(); ++r) pts.push_back(lattice.row(r).transpose());
  }
  for (Eigen::Index r = 0; r < observed.rows(); ++r) {
    const Point o = observed.row(r).transpose();
    if (region.contains(o) && width.maxCoeff() > 0.0) pts.push_back(o);
  }
  out.points.resize(Eigen::Index(pts.size()), d);
  for (std::size_t r = 0; r < pts.size(); ++r) out.points.row(Eigen::Index(r)) = pts[r].transpose();
  return out;
}

std::vector<Propagation> propagate(const std::vector<EnvelopeContext>& layers, const PointSet<double>& xs,
                                   const PropagationOptions& opts) {
  const int m = int(layers.size());
  if (m < 1) throw ArgumentError("propagate: need at least one layer");
  if (xs.cols() != layers[0].dim()) throw ArgumentError("propagate: query dimension mismatch");
  for (int i = 0; i + 1 < m; ++i)
    if (layers[i].outputs() != layers[i + 1].dim()) throw ArgumentError("propagate: layer dimension mismatch");
  if (layers.back().outputs() != 1) throw ArgumentError("propagate: last layer must be scalar");

  const Eigen::Index nq = xs.rows();
  std::vector<Propagation> out(nq);
  for (Eigen::Index c = 0; c < nq; ++c) out[c].regions.push_back(Box::point(xs.row(c).transpose()));

  for (int i = 0; i < m; ++i) {
    const EnvelopeContext& ctx = layers[i];
    const double B = ctx.B;
    std::vector<Eigen::Index> offsets(nq + 1, 0);
    std::vector<double> covers(nq, 0.0);
    PointSet<double> eval;
    if (i == 0) {
      eval = xs;
      for (Eigen::Index c = 0; c <= nq; ++c) offsets[c] = c;
    } else {
      std::vector<EvaluationSet> sets;
      sets.reserve(nq);
      for (Eigen::Index c = 0; c < nq; ++c) {
        sets.push_back(evaluation_set(out[c].regions.back(), ctx.anchors, opts));
        covers[c] = sets.back().cover;
        offsets[c + 1] = offsets[c] + sets.back().points.rows();
      }
      eval.resize(offsets[nq], ctx.dim());
      for (Eigen::Index c = 0; c < nq; ++c) eval.middleRows(offsets[c], sets[c].points.rows()) = sets[c].points;
    }
    const Prediction<double> pred = ctx.model->predict(eval);

    EnvelopeBlock block;
    for (Eigen::Index c = 0; c < nq; ++c) {
      const Eigen::Index count = offsets[c + 1] - offsets[c];
      envelope_block(ctx, eval, pred.mean, pred.std, offsets[c], count, opts.policy, block);
      const double pad = ctx.L * covers[c];
      if (i + 1 < m) {
        Point lo = (block.lower.colwise().minCoeff().array() - pad).max(-B).matrix().transpose();
        Point hi = (block.upper.colwise().maxCoeff().array() + pad).min(B).matrix().transpose();
        lo = lo.cwiseMin(hi);
        out[c].regions.emplace_back(lo, hi);
      } else {
        out[c].ucb = std::min(B, block.upper.col(0).maxCoeff() + pad);
      }
    }
  }
  return out;
}

namespace {

double evaluation_cover(const Box& region, const PropagationOptions& opts) {
  const Eigen::Index d = region.dim();
  if (d == 1) return 0.5 * region.width()(0) / opts.G;
  const int per = std::max(2, std::min(opts.G, int(std::floor(std::pow(double(opts.max_box_points), 1.0 / double(d)) + 1e-9))));
  return 0.5 * region.width().norm() / double(per - 1);
}

// Farthest distance from `o` to any point of `box`.
double farthest(const Box& box, const Eigen::Ref<const Eigen::RowVectorXd>& o) {
  double sq = 0.0;
  for (Eigen::Index k = 0; k < box.dim(); ++k) {
    const double e = std::max(std::abs(o(k) - box.lo(k)), std::abs(o(k) - box.hi(k)));
    sq += e * e;
  }
  return std::sqrt(sq);
}

// Splits a box into pieces along its widest axis.
std::vector<Box> split_widest(const Box& box, int pieces) {
  Eigen::Index axis = 0;
  box.width().maxCoeff(&axis);
  std::vector<Box> out;
  const double lo = box.lo(axis), hi = box.hi(axis);
  if (!(hi > lo)) return {box};
  for (int p = 0; p < pieces; ++p) {
    Box piece = box;
    piece.lo(axis) = lo + (hi - lo) * p / pieces;
    piece.hi(axis) = p + 1 == pieces ? hi : lo + (hi - lo) * (p + 1) / pieces;
    out.push_back(piece);
  }
  return out;
}

}  // namespace

std::vector<double> ucb_upper_bounds(const std::vector<EnvelopeContext>& layers, const PointSet<double>& xs,
                                     const PropagationOptions& opts) {
  const int m = int(layers.size());
  if (m < 1) throw ArgumentError("ucb_upper_bounds: need at least one layer");
  const Eigen::Index nq = xs.rows();
  std::vector<double> out(nq, 0.0);
  if (opts.policy == EnvelopePolicy::Plain) {
    for (auto& v : out) v = layers.back().B;
    return out;
  }
  // Absorbs round-off between this batch and the exact pass.
  const double margin = 1e-9;
  // The first layer's region is the query itself, so it is bounded exactly.
  const EnvelopeContext& first = layers[0];
  const Prediction<double> pred = first.model->predict(xs);
  std::vector<Box> regions;
  regions.reserve(nq);
  EnvelopeBlock block;
  for (Eigen::Index c = 0; c < nq; ++c) {
    envelope_block(first, xs, pred.mean, pred.std, c, 1, opts.policy, block);
    if (m == 1) {
      out[c] = std::min(first.B, block.upper(0, 0) + margin);
    } else {
      Point lo = (block.lower.row(0).array() - margin).max(-first.B).matrix().transpose();
      Point hi = (block.upper.row(0).array() + margin).min(first.B).matrix().transpose();
      regions.emplace_back(lo.cwiseMin(hi), hi);
    }
  }
  if (m == 1) return out;
  for (int i = 1; i < m; ++i) {
    const EnvelopeContext& ctx = layers[i];
    const Eigen::Index n = ctx.outputs();
    for (Eigen::Index c = 0; c < nq; ++c) {
      const Box& region = regions[c];
      const double pad = ctx.L * evaluation_cover(region, opts);
      Point hi = Point::Constant(n, -std::numeric_limits<double>::infinity());
      Point lo = Point::Constant(n, std::numeric_limits<double>::infinity());
      for (const Box& piece : split_widest(region, 8)) {
        Point piece_hi = Point::Constant(n, std::numeric_limits<double>::infinity());
        Point piece_lo = Point::Constant(n, -std::numeric_limits<double>::infinity());
        for (Eigen::Index a = 0; a < ctx.anchors.rows(); ++a) {
          const double cone = ctx.L * farthest(piece, ctx.anchors.row(a));
          piece_hi = piece_hi.cwiseMin((ctx.anchor_upper.row(a).array() + cone).matrix().transpose());
          piece_lo = piece_lo.cwiseMax((ctx.anchor_lower.row(a).array() - cone).matrix().transpose());
        }
        hi = hi.cwiseMax(piece_hi);
        lo = lo.cwiseMin(piece_lo);
      }
      hi = (hi.array() + pad + margin).min(ctx.B).matrix();
      lo = (lo.array() - pad - margin).max(-ctx.B).matrix();
      if (i + 1 < m) {
        regions[c] = Box(lo.cwiseMin(hi), hi);
      } else {
        out[c] = hi(0);
      }
    }
  }
  return out;
}

ChainPropagation propagate_chain(const std::vector<EnvelopeContext>& layers, const Point& x, const PropagationOptions& opts) {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if ((i > 0 && layers[i].dim() != 1) || layers[i].outputs() != 1)
      throw ArgumentError("propagate_chain: chain layers must be scalar");
  const Propagation p = propagate(layers, PointSet<double>(x.transpose()), opts).front();
  ChainPropagation out;
  out.ucb = p.ucb;
  for (std::size_t i = 1; i < p.regions.size(); ++i) out.regions.push_back({p.regions[i].lo(0), p.regions[i].hi(0)});
  return out;
}

Propagation propagate_multi(const std::vector<EnvelopeContext>& layers, const Point& x, const PropagationOptions& opts) {
  return propagate(layers, PointSet<double>(x.transpose()), opts).front();
}

Propagation propagate_ffn(const std::vector<EnvelopeContext>& layers, const Point& x, const PropagationOptions& opts) {
  return propagate(layers, PointSet<double>(x.transpose()), opts).front();
}

}  // namespace cascade
