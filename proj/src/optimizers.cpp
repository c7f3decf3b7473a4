#include "cascade/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace cascade {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::GpnUcb: return "gpn-ucb";
    case Algorithm::Nonadaptive: return "nonadaptive";
    case Algorithm::NonadaptiveProjected: return "nonadaptive-projected";
    case Algorithm::BlackboxUcb: return "blackbox-ucb";
  }
  return "gpn-ucb";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "gpn-ucb") return Algorithm::GpnUcb;
  if (name == "nonadaptive") return Algorithm::Nonadaptive;
  if (name == "nonadaptive-projected") return Algorithm::NonadaptiveProjected;
  if (name == "blackbox-ucb") return Algorithm::BlackboxUcb;
  throw ArgumentError("unknown algorithm '" + name + "'");
}

int default_candidate_grid(int d) {
  if (d == 1) return 512;
  if (d == 2) return 64;
  return 16;
}

PointSet<double> candidate_points(int d, int per_dim) {
  if (d < 1) throw ArgumentError("candidate grid: d must be positive");
  if (per_dim < 2) throw ArgumentError("candidate grid: need at least 2 points per dimension");
  return box_lattice(Box::unit(d), per_dim);
}

PointSet<double> grid_points(int d, int T) {
  if (d < 1) throw ArgumentError("grid_points: d must be positive");
  if (T < 1) throw ArgumentError("grid_points: T must be positive");
  int n = std::max(1, int(std::floor(std::pow(double(T), 1.0 / d) + 1e-9)));
  auto power = [d](int base) {
    long long p = 1;
    for (int k = 0; k < d; ++k) p *= base;
    return p;
  };
  while (power(n) > T) --n;
  while (power(n + 1) <= T) ++n;
  const double half = 0.5 / n;
  return box_lattice(Box(Point::Constant(d, half), Point::Constant(d, 1.0 - half)), n);
}

int oracle_grid(int d) {
  if (d == 1) return 8192;
  if (d == 2) return 256;
  return 32;
}

OracleSweep oracle_optimum(const NetworkInstance& net) {
  const PointSet<double> pts = box_lattice(Box::unit(net.input_dim()), oracle_grid(net.input_dim()));
  const Vector<double> g = evaluate_output(net, pts);
  Eigen::Index best = 0;
  for (Eigen::Index r = 1; r < g.size(); ++r)
    if (g(r) > g(best)) best = r;
  return {g(best), pts.row(best).transpose()};
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct CandidateTable {
  PointSet<double> points;
  std::vector<Evaluation> evals;
  Eigen::Index best = 0;
};

CandidateTable tabulate(const NetworkInstance& net, int per_dim) {
  CandidateTable table;
  table.points = candidate_points(net.input_dim(), per_dim);
  table.evals.reserve(table.points.rows());
  for (Eigen::Index r = 0; r < table.points.rows(); ++r) {
    table.evals.push_back(evaluate(net, table.points.row(r).transpose()));
    if (table.evals.back().y > table.evals[table.best].y) table.best = r;
  }
  return table;
}

void record_diagnostics(const ModelStack& models, TraceStep& step) {
  step.max_jitter = 0.0;
  step.min_pivot = 1.0;
  for (const auto& m : models) {
    step.max_jitter = std::max(step.max_jitter, m->jitter());
    step.min_pivot = std::min(step.min_pivot, m->min_pivot());
  }
}

struct Selection {
  Eigen::Index index = 0;
  double ucb = 0.0;
};

// argmax of the network UCB over the candidates, ties to the lowest index. Candidates are
// propagated in chunks, best bound first, and the scan stops once no remaining bound can win.
Selection select_candidate(const std::vector<EnvelopeContext>& contexts, const PointSet<double>& points,
                           const PropagationOptions& opts) {
  constexpr Eigen::Index kChunk = 32;
  const std::vector<double> bound = ucb_upper_bounds(contexts, points, opts);
  std::vector<Eigen::Index> order(bound.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = Eigen::Index(c);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return bound[a] > bound[b]; });

  Selection best{-1, -std::numeric_limits<double>::infinity()};
  std::size_t next = 0;
  while (next < order.size()) {
    const Eigen::Index head = order[next];
    if (best.index >= 0 && (bound[head] < best.ucb || (bound[head] == best.ucb && head > best.index))) break;
    const std::size_t stop = std::min(order.size(), next + std::size_t(kChunk));
    PointSet<double> chunk(Eigen::Index(stop - next), points.cols());
    for (std::size_t k = next; k < stop; ++k) chunk.row(Eigen::Index(k - next)) = points.row(order[k]);
    const std::vector<Propagation> props = propagate(contexts, chunk, opts);
    for (std::size_t k = next; k < stop; ++k) {
      const double u = props[k - next].ucb;
      const Eigen::Index c = order[k];
      if (best.index < 0 || u > best.ucb || (u == best.ucb && c < best.index)) best = {c, u};
    }
    next = stop;
  }
  return best;
}

// Shared UCB loop. Grey-box runs model every layer; black-box runs model x ↦ y only.
RunResult run_ucb(const NetworkInstance& net, const RunConfig& cfg, bool blackbox) {
  net.validate();
  if (cfg.T < 1) throw ArgumentError("run: T must be at least 1");
  if (!(cfg.inflate_B > 0.0)) throw ArgumentError("run: inflate_B must be positive");
  const auto run_start = Clock::now();
  const int m = net.depth();
  const CandidateTable table =
      tabulate(net, cfg.candidate_grid > 0 ? cfg.candidate_grid : default_candidate_grid(net.input_dim()));

  RunResult result;
  Trace& trace = result.trace;
  trace.algo = blackbox ? Algorithm::BlackboxUcb : Algorithm::GpnUcb;
  trace.grid_optimum = table.evals[table.best].y;
  trace.oracle_optimum = oracle_optimum(net).value;

  const double B = net.B * cfg.inflate_B;
  const double L = blackbox ? std::pow(net.L, m) : net.L;
  ModelStack& models = result.models;
  if (blackbox) {
    models.push_back(std::make_shared<const PosteriorModel<double>>(PosteriorModel<double>::prior(net.kernel, net.input_dim(), 1)));
  } else {
    for (int i = 0; i < m; ++i)
      models.push_back(std::make_shared<const PosteriorModel<double>>(PosteriorModel<double>::prior(net.kernel, net.dims[i], net.dims[i + 1])));
  }

  double cumulative = 0.0;
  for (int t = 1; t <= cfg.T; ++t) {
    const auto step_start = Clock::now();
    TraceStep step;
    step.t = t;
    try {
      std::vector<EnvelopeContext> contexts;
      for (const auto& model : models) contexts.push_back(EnvelopeContext::make(model, B, L));
      const Selection sel = select_candidate(contexts, table.points, cfg.region);
      const Eigen::Index pick = sel.index;

      const Evaluation& ev = table.evals[pick];
      step.x = table.points.row(pick).transpose();
      step.intermediates.assign(ev.inputs.begin() + 1, ev.inputs.end());
      step.y = ev.y;
      step.ucb = sel.ucb;
      step.r = trace.grid_optimum - ev.y;
      cumulative += step.r;
      step.R = cumulative;

      if (blackbox) {
        step.sigma.push_back(models[0]->std_dev(step.x));
        models[0] = std::make_shared<const PosteriorModel<double>>(models[0]->add_observation(step.x, Point::Constant(1, ev.y)));
      } else {
        for (int i = 0; i < m; ++i) step.sigma.push_back(models[i]->std_dev(ev.inputs[i]));
        for (int i = 0; i < m; ++i)
          models[i] = std::make_shared<const PosteriorModel<double>>(models[i]->add_observation(ev.inputs[i], ev.layer_output(i)));
      }
      record_diagnostics(models, step);
    } catch (const NumericalError& e) {
      trace.complete = false;
      trace.abort_reason = e.what();
      break;
    }
    step.wall_ms = cfg.wall_clock ? elapsed_ms(step_start) : 0.0;
    trace.steps.push_back(std::move(step));
  }
  trace.T = int(trace.steps.size());
  trace.wall_ms = cfg.wall_clock ? elapsed_ms(run_start) : 0.0;
  return result;
}

}  // namespace

RunResult run_gpn_ucb(const NetworkInstance& net, const RunConfig& cfg) { return run_ucb(net, cfg, false); }

RunResult run_blackbox_ucb(const NetworkInstance& net, const RunConfig& cfg) { return run_ucb(net, cfg, true); }

Vector<double> composite_mean(const ModelStack& models, const PointSet<double>& xs, const std::vector<Box>& layer_domains) {
  if (models.empty()) throw ArgumentError("composite_mean: no models");
  PointSet<double> z = xs;
  for (std::size_t i = 0; i < models.size(); ++i) {
    z = models[i]->predict_mean(z);
    if (!layer_domains.empty() && i + 1 < models.size()) {
      const Box& box = layer_domains.at(i + 1);
      for (Eigen::Index r = 0; r < z.rows(); ++r) z.row(r) = box.clamp(z.row(r).transpose()).transpose();
    }
  }
  return z.col(0);
}

double composite_mean(const ModelStack& models, Structure, const Point& x) {
  return composite_mean(models, PointSet<double>(x.transpose()))(0);
}

double projected_composite_mean(const ModelStack& models, Structure, const Point& x, const std::vector<Box>& layer_domains) {
  if (layer_domains.size() != models.size()) throw ArgumentError("projected_composite_mean: one domain per layer");
  return composite_mean(models, PointSet<double>(x.transpose()), layer_domains)(0);
}

RunResult run_nonadaptive(const NetworkInstance& net, const RunConfig& cfg) {
  net.validate();
  const auto run_start = Clock::now();
  const int m = net.depth();
  const int d = net.input_dim();
  const bool projected = cfg.algo == Algorithm::NonadaptiveProjected;
  // The returned point is searched on the oracle lattice unless a grid is given.
  const CandidateTable table = tabulate(net, cfg.candidate_grid > 0 ? cfg.candidate_grid : oracle_grid(d));

  RunResult result;
  Trace& trace = result.trace;
  trace.algo = projected ? Algorithm::NonadaptiveProjected : Algorithm::Nonadaptive;
  trace.grid_optimum = table.evals[table.best].y;
  trace.oracle_optimum = oracle_optimum(net).value;

  const PointSet<double> samples = grid_points(d, cfg.T);
  const Eigen::Index n = samples.rows();
  std::vector<Dataset<double>> data;
  for (int i = 0; i < m; ++i)
    data.emplace_back(PointSet<double>(n, net.dims[i]), Matrix<double>(n, net.dims[i + 1]));
  double cumulative = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    const Evaluation ev = evaluate(net, samples.row(s).transpose());
    TraceStep step;
    step.t = int(s) + 1;
    step.x = ev.inputs[0];
    step.intermediates.assign(ev.inputs.begin() + 1, ev.inputs.end());
    step.y = ev.y;
    step.r = trace.grid_optimum - ev.y;
    cumulative += step.r;
    step.R = cumulative;
    step.ucb = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < m; ++i) {
      data[i].points.row(s) = ev.inputs[i].transpose();
      data[i].values.row(s) = ev.layer_output(i).transpose();
    }
    trace.steps.push_back(std::move(step));
  }
  trace.T = int(n);

  try {
    for (int i = 0; i < m; ++i)
      result.models.push_back(std::make_shared<const PosteriorModel<double>>(PosteriorModel<double>::fit(net.kernel, data[i], cfg.jitter)));
  } catch (const NumericalError& e) {
    trace.complete = false;
    trace.abort_reason = e.what();
    return result;
  }
  for (auto& step : trace.steps) record_diagnostics(result.models, step);

  const Vector<double> means = composite_mean(result.models, table.points, projected ? net.layer_domains : std::vector<Box>{});
  Eigen::Index best = 0;
  for (Eigen::Index r = 1; r < means.size(); ++r)
    if (means(r) > means(best)) best = r;
  trace.x_star = table.points.row(best).transpose();
  trace.x_star_value = table.evals[best].y;
  trace.simple_regret = std::max(0.0, trace.oracle_optimum - table.evals[best].y);
  trace.wall_ms = cfg.wall_clock ? elapsed_ms(run_start) : 0.0;
  return result;
}

RunResult run(const NetworkInstance& net, const RunConfig& cfg) {
  switch (cfg.algo) {
    case Algorithm::GpnUcb: return run_gpn_ucb(net, cfg);
    case Algorithm::BlackboxUcb: return run_blackbox_ucb(net, cfg);
    case Algorithm::Nonadaptive:
    case Algorithm::NonadaptiveProjected: return run_nonadaptive(net, cfg);
  }
  throw ArgumentError("run: unknown algorithm");
}

}  // namespace cascade
