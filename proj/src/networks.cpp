#include "cascade/networks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "cascade/gp_posterior.hpp"

namespace cascade {

std::string to_string(Structure s) {
  switch (s) {
    case Structure::Chain: return "chain";
    case Structure::MultiOutputChain: return "multi";
    case Structure::FeedForward: return "ffn";
  }
  return "chain";
}

Structure parse_structure(const std::string& name) {
  if (name == "chain") return Structure::Chain;
  if (name == "multi" || name == "multi-output" || name == "mul") return Structure::MultiOutputChain;
  if (name == "ffn" || name == "feedforward" || name == "feed-forward") return Structure::FeedForward;
  throw ArgumentError("unknown structure '" + name + "' (expected chain, multi or ffn)");
}

namespace {

// max_s |d/ds exp(1 − 1/(1−s²))| on [0, 1): the unit-height bump's steepest slope.
double bump_profile_slope() {
  static const double slope = [] {
    double best = 0.0;
    const int n = 1 << 20;
    for (int k = 1; k < n; ++k) {
      const double s = double(k) / n;
      const double q = 1.0 - s * s;
      best = std::max(best, std::exp(1.0 - 1.0 / q) * 2.0 * s / (q * q));
    }
    return best;
  }();
  return slope;
}

}  // namespace

double ScaledBump::operator()(const Point& x) const {
  if (x.size() != center.size()) throw ArgumentError("bump: dimension mismatch");
  const double s2 = (x - center).squaredNorm() / (w * w);
  if (s2 >= 1.0) return 0.0;
  return 2.0 * eps1 * std::exp(1.0 - 1.0 / (1.0 - s2));
}

double ScaledBump::lipschitz() const { return 2.0 * eps1 * bump_profile_slope() / w; }

double evaluate_function(const LayerFunction& fn, const Point& x) {
  return std::visit([&](const auto& f) -> double { return f(x); }, fn);
}

Vector<double> evaluate_function(const LayerFunction& fn, const PointSet<double>& points) {
  if (const auto* e = std::get_if<Expansion<double>>(&fn)) return e->evaluate(points);
  const auto& bump = std::get<ScaledBump>(fn);
  Vector<double> out(points.rows());
  for (Eigen::Index r = 0; r < points.rows(); ++r) out(r) = bump(points.row(r).transpose());
  return out;
}

namespace {

Eigen::Index function_dim(const LayerFunction& fn) {
  return std::visit([](const auto& f) -> Eigen::Index { return f.dim(); }, fn);
}

bool is_zero_expansion(const LayerFunction& fn) {
  const auto* e = std::get_if<Expansion<double>>(&fn);
  return e != nullptr && e->empty();
}

}  // namespace

void NetworkInstance::validate() const {
  const int m = depth();
  if (m < 1) throw ArgumentError("network: needs at least one layer");
  if (int(dims.size()) != m + 1) throw ArgumentError("network: dims must have m+1 entries");
  if (dims.back() != 1) throw ArgumentError("network: last dimension must be 1");
  for (int d : dims)
    if (d < 1) throw ArgumentError("network: dimensions must be positive");
  if (structure == Structure::Chain)
    for (int i = 1; i < m; ++i)
      if (dims[i] != 1) throw ArgumentError("network: chain intermediates must be scalar");
  if (int(layer_domains.size()) != m) throw ArgumentError("network: one domain box per layer");
  for (int i = 0; i < m; ++i) {
    if (int(layers[i].size()) != dims[i + 1]) throw ArgumentError("network: layer output count mismatch");
    if (layer_domains[i].dim() != dims[i]) throw ArgumentError("network: domain dimension mismatch");
    for (const auto& fn : layers[i])
      if (!is_zero_expansion(fn) && function_dim(fn) != dims[i])
        throw ArgumentError("network: layer input dimension mismatch");
  }
  if (!(B > 0.0)) throw ArgumentError("network: B must be positive");
  if (!(L > 0.0)) throw ArgumentError("network: L must be positive");
}

Point Evaluation::layer_output(int i) const {
  if (i + 1 < int(inputs.size())) return inputs[i + 1];
  return Point::Constant(1, y);
}

Point evaluate_layer(const NetworkInstance& net, int i, const Point& z) {
  if (z.size() != net.dims[i]) throw ArgumentError("evaluate: layer input dimension mismatch");
  Point out(net.dims[i + 1]);
  for (int j = 0; j < net.dims[i + 1]; ++j) out(j) = evaluate_function(net.layers[i][j], z);
  return out;
}

PointSet<double> evaluate_layer(const NetworkInstance& net, int i, const PointSet<double>& z) {
  if (z.cols() != net.dims[i]) throw ArgumentError("evaluate: layer input dimension mismatch");
  PointSet<double> out(z.rows(), net.dims[i + 1]);
  for (int j = 0; j < net.dims[i + 1]; ++j) {
    if (is_zero_expansion(net.layers[i][j]))
      out.col(j).setZero();
    else
      out.col(j) = evaluate_function(net.layers[i][j], z);
  }
  return out;
}

Evaluation evaluate(const NetworkInstance& net, const Point& x) {
  if (x.size() != net.input_dim()) throw ArgumentError("evaluate: input dimension mismatch");
  Evaluation ev;
  ev.inputs.reserve(net.depth());
  Point z = x;
  for (int i = 0; i < net.depth(); ++i) {
    ev.inputs.push_back(z);
    z = evaluate_layer(net, i, z);
  }
  ev.y = z(0);
  return ev;
}

Vector<double> evaluate_output(const NetworkInstance& net, const PointSet<double>& x) {
  PointSet<double> z = x;
  for (int i = 0; i < net.depth(); ++i) z = evaluate_layer(net, i, z);
  return z.col(0);
}

PointSet<double> box_lattice(const Box& box, int per_dim) {
  if (per_dim < 1) throw ArgumentError("box_lattice: need at least one point per dimension");
  const Eigen::Index d = box.dim();
  std::vector<std::vector<double>> axes(d);
  Eigen::Index total = 1;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double lo = box.lo(k), hi = box.hi(k);
    if (hi == lo || per_dim == 1) {
      axes[k].push_back(hi == lo ? lo : 0.5 * (lo + hi));
    } else {
      for (int s = 0; s < per_dim; ++s)
        axes[k].push_back(s == per_dim - 1 ? hi : lo + (hi - lo) * double(s) / double(per_dim - 1));
    }
    total *= Eigen::Index(axes[k].size());
  }
  PointSet<double> out(total, d);
  std::vector<std::size_t> idx(d, 0);
  for (Eigen::Index r = 0; r < total; ++r) {
    for (Eigen::Index k = 0; k < d; ++k) out(r, k) = axes[k][idx[k]];
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
  return out;
}

namespace {

// Forward differences on the lattice; values is N × outputs in box_lattice order.
double lattice_gradient_max(const Box& box, int per_dim, const Matrix<double>& values) {
  const Eigen::Index d = box.dim();
  std::vector<Eigen::Index> counts(d), strides(d);
  std::vector<double> step(d);
  Eigen::Index stride = 1;
  for (Eigen::Index k = d - 1; k >= 0; --k) {
    const bool flat = box.hi(k) == box.lo(k) || per_dim == 1;
    counts[k] = flat ? 1 : per_dim;
    step[k] = flat ? 0.0 : (box.hi(k) - box.lo(k)) / double(per_dim - 1);
    strides[k] = stride;
    stride *= counts[k];
  }
  double best = 0.0;
  std::vector<Eigen::Index> idx(d, 0);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    double sq = 0.0;
    bool interior = true;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (counts[k] == 1) continue;
      if (idx[k] + 1 >= counts[k]) {
        interior = false;
        continue;
      }
      const double axis_sq = ((values.row(r + strides[k]) - values.row(r)) / step[k]).squaredNorm();
      best = std::max(best, std::sqrt(axis_sq));
      sq += axis_sq;
    }
    if (interior) best = std::max(best, std::sqrt(sq));
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
  }
  return best;
}

}  // namespace

double estimate_lipschitz(const LayerFunction& fn, const Box& box, int grid_per_dim) {
  return estimate_lipschitz(std::vector<LayerFunction>{fn}, box, grid_per_dim);
}

double estimate_lipschitz(const std::vector<LayerFunction>& fns, const Box& box, int grid_per_dim) {
  if (grid_per_dim < 16) throw ArgumentError("estimate_lipschitz: grid_per_dim must be at least 16");
  const PointSet<double> lattice = box_lattice(box, grid_per_dim);
  Matrix<double> values(lattice.rows(), Eigen::Index(fns.size()));
  for (std::size_t j = 0; j < fns.size(); ++j)
    values.col(j) = is_zero_expansion(fns[j]) ? Vector<double>::Zero(lattice.rows()) : evaluate_function(fns[j], lattice);
  return lattice_gradient_max(box, grid_per_dim, values);
}

Box layer_range_raw(const NetworkInstance& net, int i, int grid_per_dim) {
  const PointSet<double> lattice = box_lattice(net.layer_domains.at(i), grid_per_dim);
  const PointSet<double> out = evaluate_layer(net, i, lattice);
  return Box(out.colwise().minCoeff().transpose(), out.colwise().maxCoeff().transpose());
}

Box layer_range(const NetworkInstance& net, int i, int grid_per_dim) {
  Box raw = layer_range_raw(net, i, grid_per_dim);
  const Point pad = 0.01 * raw.width();
  return Box(raw.lo - pad, raw.hi + pad);
}

int lipschitz_grid(int dim) {
  if (dim <= 2) return 256;
  if (dim == 3) return 64;
  return 32;
}

namespace {

int range_grid(int dim) {
  if (dim == 1) return 4097;
  if (dim == 2) return 257;
  if (dim == 3) return 33;
  return 9;
}

// Box holding the domain and all centers of a layer, widened by 3 lengthscales.
Box lipschitz_box(const Box& domain, const std::vector<LayerFunction>& fns, double lengthscale) {
  Point lo = domain.lo, hi = domain.hi;
  for (const auto& fn : fns) {
    const auto* e = std::get_if<Expansion<double>>(&fn);
    if (e == nullptr || e->empty()) continue;
    lo = lo.cwiseMin(e->centers.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(e->centers.colwise().maxCoeff().transpose());
  }
  const Point margin = Point::Constant(lo.size(), 3.0 * lengthscale);
  return Box(lo - margin, hi + margin);
}

struct DegenerateDraw {};

NetworkInstance synthesize_once(const SynthesisOptions& opts, std::uint64_t stream) {
  std::mt19937_64 rng(stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> scale_draw(0.5, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int m = int(opts.dims.size()) - 1;
  NetworkInstance net;
  net.structure = opts.structure;
  net.dims = opts.dims;
  net.B = opts.B;
  net.kernel = opts.spec;
  net.seed = opts.seed;
  net.layer_domains.push_back(Box::unit(opts.dims[0]));

  double lipschitz = 0.0;
  for (int i = 0; i < m; ++i) {
    const int din = opts.dims[i];
    const int dout = opts.dims[i + 1];
    const Box& domain = net.layer_domains[i];
    std::vector<LayerFunction> layer;
    std::vector<double> norms;
    for (int j = 0; j < dout; ++j) {
      PointSet<double> centers(opts.n_centers, din);
      for (int c = 0; c < opts.n_centers; ++c)
        for (int k = 0; k < din; ++k) centers(c, k) = domain.lo(k) + (domain.hi(k) - domain.lo(k)) * unit(rng);
      Vector<double> coeffs(opts.n_centers);
      for (int c = 0; c < opts.n_centers; ++c) coeffs(c) = normal(rng);
      Expansion<double> f(std::move(centers), std::move(coeffs), opts.spec);
      const double norm = rkhs_norm(f);
      if (!(norm > 1e-12)) throw DegenerateDraw{};
      norms.push_back(norm);
      layer.emplace_back(std::move(f));
    }
    if (opts.structure == Structure::MultiOutputChain) {
      double joint = 0.0;
      for (double n : norms) joint += n * n;
      const double factor = opts.B * scale_draw(rng) / std::sqrt(joint);
      for (auto& fn : layer) std::get<Expansion<double>>(fn).coeffs *= factor;
    } else {
      for (int j = 0; j < dout; ++j)
        std::get<Expansion<double>>(layer[j]).coeffs *= opts.B * scale_draw(rng) / norms[j];
    }

    const Box lbox = lipschitz_box(domain, layer, opts.spec.lengthscale);
    if (opts.structure == Structure::MultiOutputChain) {
      lipschitz = std::max(lipschitz, estimate_lipschitz(layer, lbox, lipschitz_grid(din)));
    } else {
      for (const auto& fn : layer) lipschitz = std::max(lipschitz, estimate_lipschitz(fn, lbox, lipschitz_grid(din)));
    }

    net.layers.push_back(std::move(layer));
    if (i + 1 < m) net.layer_domains.push_back(layer_range(net, i, range_grid(din)));
  }
  net.L = std::max(1.05 * lipschitz, 1.05);
  std::ostringstream label;
  label << to_string(opts.structure) << "-m" << m << "-d" << opts.dims[0] << "-seed" << opts.seed;
  net.label = label.str();
  return net;
}

}  // namespace

NetworkInstance synthesize_network(const SynthesisOptions& opts) {
  opts.spec.validate();
  if (opts.n_centers < 1) throw ArgumentError("synthesize_network: n_centers must be at least 1");
  if (!(opts.B > 0.0)) throw ArgumentError("synthesize_network: B must be positive");
  if (opts.dims.size() < 2) throw ArgumentError("synthesize_network: need at least one layer");
  if (opts.dims.back() != 1) throw ArgumentError("synthesize_network: last dimension must be 1");
  for (int d : opts.dims)
    if (d < 1) throw ArgumentError("synthesize_network: dimensions must be positive");
  if (opts.structure == Structure::Chain)
    for (std::size_t i = 1; i + 1 < opts.dims.size(); ++i)
      if (opts.dims[i] != 1) throw ArgumentError("synthesize_network: chain intermediates must be scalar");

  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    try {
      NetworkInstance net = synthesize_once(opts, opts.seed + attempt * 0x9E3779B97F4A7C15ULL);
      net.validate();
      return net;
    } catch (const DegenerateDraw&) {
    }
  }
  throw NumericalError("synthesize_network: every draw produced a zero-norm layer");
}

std::vector<int> default_dims(Structure s, int m, int d, int inner_dim) {
  if (m < 1 || d < 1 || inner_dim < 1) throw ArgumentError("dims: m, d and inner dimension must be positive");
  std::vector<int> dims{d};
  for (int i = 1; i < m; ++i) dims.push_back(s == Structure::Chain ? 1 : inner_dim);
  dims.push_back(1);
  return dims;
}

double bump_value(const Point& x, double eps1, double w, const Point& center) {
  if (!(w > 0.0)) throw ArgumentError("bump_value: w must be positive");
  return ScaledBump{center, w, eps1}(x);
}

double needle_scale(double u, double B, const KernelSpec& spec) {
  if (!(u > 0.0)) throw ArgumentError("needle: u must be positive");
  return std::sqrt(2.0) * B / std::sqrt(1.0 - matern_of_distance(spec, 2.0 * u));
}

double needle_value(double z, double u, double B, const KernelSpec& spec) {
  const double lt = needle_scale(u, B, spec);
  return 0.5 * lt * (matern_of_distance(spec, std::abs(z - u)) - matern_of_distance(spec, std::abs(z + u)));
}

Expansion<double> needle_expansion(double u, double B, const KernelSpec& spec, Eigen::Index dim) {
  const double lt = needle_scale(u, B, spec);
  PointSet<double> centers = PointSet<double>::Zero(2, dim);
  centers(0, 0) = u;
  centers(1, 0) = -u;
  Vector<double> coeffs(2);
  coeffs << 0.5 * lt, -0.5 * lt;
  return Expansion<double>(std::move(centers), std::move(coeffs), spec);
}

double condition2_margin(const KernelSpec& spec, double B, double u, double u_tilde) {
  const double lhs = matern_of_distance(spec, u - u_tilde) - matern_of_distance(spec, u + u_tilde);
  const double rhs = std::sqrt(2.0) * std::sqrt(1.0 - matern_of_distance(spec, 2.0 * u)) / B;
  return lhs - rhs;
}

NeedleChoice needle_constants(const KernelSpec& spec, double B, double u, double u_tilde) {
  if (!(u_tilde > 0.0 && u_tilde < u)) throw ArgumentError("needle: need 0 < u_tilde < u");
  NeedleChoice c;
  c.u = u;
  c.u_tilde = u_tilde;
  c.L_tilde = needle_scale(u, B, spec);
  c.r_min = std::numeric_limits<double>::infinity();
  c.r_max = 0.0;
  const int n = 8192;
  for (int k = 1; k <= n; ++k) {
    const double z = u_tilde * double(k) / n;
    const double r = (matern_of_distance(spec, u - z) - matern_of_distance(spec, u + z)) / (2.0 * z);
    c.r_min = std::min(c.r_min, r);
    c.r_max = std::max(c.r_max, r);
  }
  c.L_eff = c.r_max * c.L_tilde;
  c.alpha = c.r_min / c.r_max;
  return c;
}

NeedleChoice select_u_utilde(const KernelSpec& spec, double B) {
  spec.validate();
  if (!(B > 0.0)) throw ArgumentError("select_u_utilde: B must be positive");
  const double l = spec.lengthscale;
  bool any_condition2 = false;
  auto feasible = [&](double u, double ut, NeedleChoice& out) {
    if (condition2_margin(spec, B, u, ut) < 0.0) return false;
    any_condition2 = true;
    out = needle_constants(spec, B, u, ut);
    return out.r_min * out.L_tilde > 1.0;
  };
  NeedleChoice choice;
  if (feasible(0.5 * l, 0.3 * l, choice)) return choice;
  for (int k = 1; k <= 40; ++k) {
    const double u = 2.0 * l * double(k) / 40.0;
    for (int f = 9; f >= 1; --f)
      if (feasible(u, u * double(f) / 10.0, choice)) return choice;
  }
  if (!any_condition2)
    throw InfeasibleError("select_u_utilde: condition 2 (k(u-u~) - k(u+u~) >= sqrt2*sqrt(k(0)-k(2u))/B) fails for every scanned (u, u~); increase B");
  throw InfeasibleError("select_u_utilde: slope condition (1 < alpha*L) fails for every scanned (u, u~); increase B or shrink the lengthscale");
}

double solve_eps1(const KernelSpec& spec, double B, double u, double u_tilde, int m, double eps) {
  if (m < 1) throw ArgumentError("solve_eps1: m must be at least 1");
  if (!(eps > 0.0)) throw ArgumentError("solve_eps1: epsilon must be positive");
  const double cap = needle_value(u_tilde, u, B, spec);
  if (2.0 * eps > cap) {
    std::ostringstream msg;
    msg << "solve_eps1: epsilon outside admissible range (2*eps = " << 2.0 * eps << " exceeds g(u~) = " << cap << ")";
    throw InfeasibleError(msg.str());
  }
  if (m == 1) return eps;
  const double lt = needle_scale(u, B, spec);
  auto composed = [&](double e1) {
    double z = 2.0 * e1;
    for (int j = 0; j < m - 1; ++j) {
      if (z > u_tilde) return std::numeric_limits<double>::infinity();
      z = 0.5 * lt * (matern_of_distance(spec, std::abs(z - u)) - matern_of_distance(spec, z + u));
    }
    return z;
  };
  double lo = 0.0, hi = eps;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (composed(mid) < 2.0 * eps ? lo : hi) = mid;
  }
  const double e1 = std::abs(composed(lo) - 2.0 * eps) <= std::abs(composed(hi) - 2.0 * eps) ? lo : hi;
  if (!(std::abs(composed(e1) - 2.0 * eps) <= 1e-10)) throw NumericalError("solve_eps1: bisection residual above 1e-10");
  return e1;
}

double calibrate_bump_width(const KernelSpec& spec, double B, int d, double eps1) {
  if (d < 1) throw ArgumentError("calibrate_bump_width: d must be positive");
  const int per_dim = d == 1 ? 64 : d == 2 ? 8 : d == 3 ? 4 : 2;
  double accepted = 0.0;
  for (int k = 1; k <= 60; ++k) {
    const double w = 0.5 * std::pow(0.8, k);
    const Box support(Point::Constant(d, -w), Point::Constant(d, w));
    const PointSet<double> grid = box_lattice(support, per_dim);
    const ScaledBump bump{Point::Zero(d), w, eps1};
    Vector<double> y(grid.rows());
    for (Eigen::Index r = 0; r < grid.rows(); ++r) y(r) = bump(grid.row(r).transpose());
    double estimate;
    try {
      const auto model = PosteriorModel<double>::fit(spec, Dataset<double>::scalar(grid, y));
      estimate = std::sqrt(std::max(0.0, model.data().values.col(0).dot(model.weights().col(0))));
    } catch (const ConditioningError&) {
      break;
    }
    if (estimate > 0.5 * B) break;
    accepted = w;
  }
  if (accepted == 0.0) throw InfeasibleError("calibrate_bump_width: bump norm estimate exceeds B/2 even at w = 0.4");
  return accepted;
}

HardInstance build_hard_instance(const HardOptions& opts, const NeedleChoice& choice, double eps1, double w) {
  if (opts.m < 1 || opts.d < 1) throw ArgumentError("hard instance: m and d must be positive");
  if (!(2.0 * w < 1.0)) throw InfeasibleError("hard instance: bump support 2w must be below 1; use a smaller epsilon");
  const Point center = opts.center.value_or(Point::Constant(opts.d, 0.5));
  if (center.size() != opts.d) throw ArgumentError("hard instance: center dimension mismatch");

  HardInstance out;
  NetworkInstance& net = out.network;
  net.structure = opts.structure;
  net.dims = default_dims(opts.structure, opts.m, opts.d, opts.inner_dim);
  net.B = opts.B;
  net.kernel = opts.spec;

  const ScaledBump bump{center, w, eps1};
  std::vector<LayerFunction> first{bump};
  for (int j = 1; j < net.dims[1]; ++j) first.emplace_back(Expansion<double>::zero(opts.d, opts.spec));
  net.layers.push_back(std::move(first));
  net.layer_domains.push_back(Box::unit(opts.d));

  double reach = 2.0 * eps1;
  double needle_lipschitz = 0.0;
  for (int i = 1; i < opts.m; ++i) {
    const int din = net.dims[i];
    Expansion<double> needle = needle_expansion(choice.u, opts.B, opts.spec, din);
    if (i == 1 || din != net.dims[i - 1]) {
      const double span = choice.u + 3.0 * opts.spec.lengthscale;
      const Box lbox(Point::Constant(din, -span), Point::Constant(din, span));
      needle_lipschitz = std::max(needle_lipschitz, estimate_lipschitz(LayerFunction{needle}, lbox, lipschitz_grid(din)));
    }
    std::vector<LayerFunction> layer{std::move(needle)};
    for (int j = 1; j < net.dims[i + 1]; ++j) layer.emplace_back(Expansion<double>::zero(din, opts.spec));
    net.layers.push_back(std::move(layer));
    Point hi = Point::Zero(din);
    hi(0) = 1.01 * reach;
    net.layer_domains.emplace_back(Point::Zero(din), hi);
    reach = needle_value(reach, choice.u, opts.B, opts.spec);
  }

  HardMeta& meta = out.meta;
  meta.eps = opts.eps;
  meta.eps1 = eps1;
  meta.w = w;
  meta.u = choice.u;
  meta.u_tilde = choice.u_tilde;
  meta.L_tilde = choice.L_tilde;
  meta.r_min = choice.r_min;
  meta.r_max = choice.r_max;
  meta.bump_slope = bump.lipschitz();
  meta.L_eff = std::max(meta.bump_slope, choice.r_max * choice.L_tilde);
  meta.alpha = choice.r_min * choice.L_tilde / meta.L_eff;
  meta.center = center;

  net.L = std::max({meta.L_eff, 1.05 * needle_lipschitz, 1.05});
  std::ostringstream label;
  label << "hard-" << to_string(opts.structure) << "-m" << opts.m << "-d" << opts.d << "-eps" << opts.eps;
  net.label = label.str();
  net.hard = meta;
  net.validate();
  return out;
}

namespace {

struct HardCalibration {
  NeedleChoice choice;
  double eps1;
  double w;
};

HardCalibration calibrate(const HardOptions& opts) {
  opts.spec.validate();
  if (opts.spec.nu < 1.0) throw ArgumentError("hard instances require nu >= 1");
  if (!(opts.eps > 0.0)) throw ArgumentError("hard instance: epsilon must be positive");
  HardCalibration c;
  c.choice = select_u_utilde(opts.spec, opts.B);
  c.eps1 = solve_eps1(opts.spec, opts.B, c.choice.u, c.choice.u_tilde, opts.m, opts.eps);
  c.w = calibrate_bump_width(opts.spec, opts.B, opts.d, c.eps1);
  return c;
}

}  // namespace

HardInstance build_hard_instance(const HardOptions& opts) {
  const HardCalibration c = calibrate(opts);
  return build_hard_instance(opts, c.choice, c.eps1, c.w);
}

HardFamily hard_family(const HardOptions& opts) {
  const HardCalibration c = calibrate(opts);
  const int n = int(std::floor(1.0 / (2.0 * c.w) + 1e-12));
  long long total = 1;
  for (int k = 0; k < opts.d; ++k) total *= n;
  if (total < 2) throw InfeasibleError("hard_family: M < 2; use a smaller epsilon");
  if (total > 1000000) throw ScaleError("hard_family: M above 1e6 instances");

  HardFamily fam;
  fam.M = int(total);
  fam.w = c.w;
  HardOptions first = opts;
  first.center = Point::Constant(opts.d, 0.5 / n);
  const HardInstance base = build_hard_instance(first, c.choice, c.eps1, c.w);
  const PointSet<double> centers = box_lattice(Box(Point::Constant(opts.d, 0.5 / n), Point::Constant(opts.d, 1.0 - 0.5 / n)), n);
  fam.instances.reserve(fam.M);
  for (Eigen::Index r = 0; r < centers.rows(); ++r) {
    HardInstance inst = base;
    const Point center = centers.row(r).transpose();
    std::get<ScaledBump>(inst.network.layers[0][0]).center = center;
    inst.meta.center = center;
    inst.network.hard = inst.meta;
    inst.network.label = base.network.label + "-" + std::to_string(r);
    fam.instances.push_back(std::move(inst));
  }
  return fam;
}

}  // namespace cascade
