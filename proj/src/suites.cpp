#include "cascade/suites.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

namespace cascade {

int worker_count() {
  if (const char* env = std::getenv("CASCADE_BANDITS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return int(std::min(v, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(worker_count()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n && !failed.load(); k = next++) {
        try {
          fn(k);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Json SuiteResult::to_json() const {
  Json j;
  j["suite"] = suite;
  j["passed"] = passed;
  j["max_violation"] = max_violation;
  j["tolerance"] = tolerance;
  j["seed"] = seed;
  j["property"] = property;
  j["checks"] = checks;
  j["failures"] = failures;
  return j;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lemma1",       "lemma2",     "kronecker",       "perstep-chain",
                                              "perstep-mul",  "perstep-ffn", "hard-invariants", "fill-scaling"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, bool corrupt) {
  if (name == "lemma1") return suite_lemma1(seed);
  if (name == "lemma2") return suite_lemma2(seed);
  if (name == "kronecker") return suite_kronecker(seed);
  if (name == "perstep-chain") return suite_perstep(Structure::Chain, seed, corrupt);
  if (name == "perstep-mul") return suite_perstep(Structure::MultiOutputChain, seed, corrupt);
  if (name == "perstep-ffn") return suite_perstep(Structure::FeedForward, seed, corrupt);
  if (name == "hard-invariants") return suite_hard_invariants(seed);
  if (name == "fill-scaling") return suite_fill_scaling(seed);
  throw ArgumentError("unknown suite '" + name + "'");
}

namespace {

PointSet<double> uniform_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  PointSet<double> p(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) p(r, c) = unif(rng);
  return p;
}

Expansion<double> random_expansion(std::mt19937_64& rng, const KernelSpec& spec, Eigen::Index d, int max_centers) {
  std::uniform_int_distribution<int> count(1, max_centers);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (true) {
    const int n = count(rng);
    PointSet<double> centers = uniform_points(rng, n, d);
    Vector<double> coeffs(n);
    for (int k = 0; k < n; ++k) coeffs(k) = normal(rng);
    Expansion<double> f(std::move(centers), std::move(coeffs), spec);
    if (rkhs_norm(f) > 1e-6) return f;
  }
}

void scale_to(Expansion<double>& f, double from, double to) { f.coeffs *= to / from; }

SuiteResult start(const std::string& suite, const std::string& property, double tolerance, std::uint64_t seed) {
  SuiteResult r;
  r.suite = suite;
  r.property = property;
  r.tolerance = tolerance;
  r.seed = seed;
  r.max_violation = -std::numeric_limits<double>::infinity();
  return r;
}

void finish(SuiteResult& r) {
  if (!std::isfinite(r.max_violation)) r.max_violation = 0.0;
  if (r.max_violation > r.tolerance) {
    std::ostringstream msg;
    msg << "max violation " << r.max_violation << " above tolerance " << r.tolerance;
    r.failures.insert(r.failures.begin(), msg.str());
  }
  r.passed = r.failures.empty();
}

}  // namespace

SuiteResult suite_lemma1(std::uint64_t seed) {
  SuiteResult res = start("lemma1", "scalar confidence interval contains f", 1e-6, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  std::uniform_int_distribution<int> n_obs(1, 10);
  const double B = 3.0;
  const PointSet<double> queries = box_lattice(Box::unit(1), 1000);
  for (int k = 0; k < 100; ++k) {
    KernelSpec spec;
    spec.nu = k % 2 ? 2.5 : 1.5;
    spec.lengthscale = 0.2;
    Expansion<double> f = random_expansion(rng, spec, 1, 30);
    scale_to(f, rkhs_norm(f), B * unif(rng));
    const PointSet<double> obs = uniform_points(rng, n_obs(rng), 1);
    const auto model = PosteriorModel<double>::fit(spec, Dataset<double>::scalar(obs, f.evaluate(obs)));
    const Prediction<double> pred = model.predict(queries);
    const Vector<double> truth = f.evaluate(queries);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const double v = std::abs(truth(q) - pred.mean(q, 0)) - B * pred.std(q);
      res.max_violation = std::max(res.max_violation, v);
      ++res.checks;
    }
  }
  finish(res);
  return res;
}

SuiteResult suite_lemma2(std::uint64_t seed) {
  SuiteResult res = start("lemma2", "vector confidence ball contains f", 1e-6, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  std::uniform_int_distribution<int> n_obs(1, 10);
  const double B = 3.0;
  const int n = 3;
  const int d = 2;
  KernelSpec spec;
  spec.nu = 1.5;
  spec.lengthscale = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Expansion<double>> f;
    double joint = 0.0;
    for (int j = 0; j < n; ++j) {
      f.push_back(random_expansion(rng, spec, d, 10));
      joint += std::pow(rkhs_norm(f.back()), 2);
    }
    const double target = B * unif(rng);
    for (auto& fj : f) fj.coeffs *= target / std::sqrt(joint);
    const PointSet<double> obs = uniform_points(rng, n_obs(rng), d);
    Matrix<double> values(obs.rows(), n);
    for (int j = 0; j < n; ++j) values.col(j) = f[j].evaluate(obs);
    const Dataset<double> data(obs, values);
    const PointSet<double> queries = uniform_points(rng, 50, d);  // 500 queries over the ten trials
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Point x = queries.row(q).transpose();
      const MultiPosterior<double> post = multi_posterior(spec, data, x, MultiPath::FullBlock);
      Vector<double> truth(n);
      for (int j = 0; j < n; ++j) truth(j) = f[j](x);
      const double spectral = Eigen::SelfAdjointEigenSolver<Matrix<double>>(post.var).eigenvalues().maxCoeff();
      const double v = (truth - post.mean).norm() - B * std::sqrt(std::max(0.0, spectral));
      res.max_violation = std::max(res.max_violation, v);
      ++res.checks;
    }
  }
  finish(res);
  return res;
}

SuiteResult suite_kronecker(std::uint64_t seed) {
  SuiteResult res = start("kronecker", "shared-factor and block posteriors agree", 1e-8, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  KernelSpec spec;
  spec.nu = 1.5;
  spec.lengthscale = 0.3;
  for (int trial = 0; trial < 10; ++trial) {
    const PointSet<double> obs = uniform_points(rng, 4, 2);
    Matrix<double> values(4, 3);
    for (Eigen::Index r = 0; r < values.rows(); ++r)
      for (Eigen::Index c = 0; c < values.cols(); ++c) values(r, c) = normal(rng);
    const Dataset<double> data(obs, values);
    const PointSet<double> queries = uniform_points(rng, 50, 2);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      const Point x = queries.row(q).transpose();
      const auto kron = multi_posterior(spec, data, x, MultiPath::Kronecker);
      const auto full = multi_posterior(spec, data, x, MultiPath::FullBlock);
      const double diff = std::max((kron.mean - full.mean).cwiseAbs().maxCoeff(), (kron.var - full.var).cwiseAbs().maxCoeff());
      res.max_violation = std::max(res.max_violation, diff);
      ++res.checks;
    }
  }
  finish(res);
  return res;
}

PerstepSetup perstep_setup(Structure s) {
  PerstepSetup p;
  p.structure = s;
  p.spec.nu = 1.5;
  p.spec.lengthscale = 0.2;
  switch (s) {
    case Structure::Chain:
      p.dims = {1, 1, 1};
      break;
    case Structure::MultiOutputChain:
      p.dims = {2, 2, 1};
      p.grid = 16;
      p.G = 8;
      p.runs = 5;
      break;
    case Structure::FeedForward:
      p.dims = {1, 2, 1};
      p.grid = 128;
      p.G = 8;
      p.runs = 5;
      break;
  }
  return p;
}

void corrupt_trace(Trace& trace, double factor) {
  double cumulative = 0.0;
  for (auto& step : trace.steps) {
    step.r *= factor;
    cumulative += step.r;
    step.R = cumulative;
  }
}

std::vector<PerstepRun> perstep_runs(const PerstepSetup& setup, std::uint64_t seed_base, bool corrupt) {
  std::vector<PerstepRun> runs(std::size_t(setup.runs));
  parallel_for(runs.size(), [&](std::size_t k) {
    SynthesisOptions so;
    so.seed = seed_base + k;
    so.structure = setup.structure;
    so.dims = setup.dims;
    so.spec = setup.spec;
    so.B = setup.B;
    so.n_centers = setup.n_centers;
    PerstepRun& run = runs[k];
    run.net = synthesize_network(so);
    RunConfig cfg;
    cfg.T = setup.T;
    cfg.candidate_grid = setup.grid;
    cfg.region.G = setup.G;
    cfg.seed = so.seed;
    run.result = run_gpn_ucb(run.net, cfg);
    if (corrupt) corrupt_trace(run.result.trace, 10.0);
    run.report = verify_bounds(run.result.trace, run.net, setup.structure);
  });
  return runs;
}

SuiteResult suite_perstep(Structure s, std::uint64_t seed, bool corrupt) {
  const std::string name = s == Structure::Chain ? "perstep-chain" : s == Structure::MultiOutputChain ? "perstep-mul" : "perstep-ffn";
  SuiteResult res = start(name, "per-step regret bounded by weighted posterior deviations", 1e-3, seed);
  const PerstepSetup setup = perstep_setup(s);
  const auto runs = perstep_runs(setup, seed, corrupt);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& run = runs[k];
    const std::string tag = "seed " + std::to_string(seed + k) + ": ";
    if (!run.result.trace.complete) res.failures.push_back(tag + "run aborted: " + run.result.trace.abort_reason);
    res.max_violation = std::max(res.max_violation, run.report.max_violation);
    res.checks += static_cast<long long>(run.report.step_pass.size()) + 1;
    if (!run.report.aggregate_pass) {
      std::ostringstream msg;
      msg << tag << "cumulative regret " << run.report.aggregate_lhs << " above " << run.report.aggregate_rhs;
      res.failures.push_back(msg.str());
    }
  }
  finish(res);
  return res;
}

double returned_regret(const Trace& trace) {
  if (trace.x_star) return trace.simple_regret;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& step : trace.steps) best = std::max(best, step.y);
  return trace.steps.empty() ? trace.oracle_optimum : std::max(0.0, trace.oracle_optimum - best);
}

HardCheck check_hard_config(const HardOptions& opts) {
  HardCheck out;
  auto fail = [&](const std::string& what) { out.failures.push_back(what); };
  const HardFamily fam = hard_family(opts);
  out.M = fam.M;
  out.w = fam.w;
  const HardInstance& inst = fam.instances[std::size_t(fam.M / 2)];
  const NetworkInstance& net = inst.network;
  const HardMeta& meta = inst.meta;
  const int d = opts.d;
  const double w = meta.w;

  // Dense sweep plus the bump center itself.
  const PointSet<double> sweep = box_lattice(Box::unit(d), oracle_grid(d));
  out.max_value = std::max(evaluate_output(net, sweep).maxCoeff(), evaluate(net, meta.center).y);
  out.max_error = std::abs(out.max_value - 2.0 * opts.eps);
  if (out.max_error > 1e-3) fail("max of g differs from 2*eps by " + std::to_string(out.max_error));

  // Ring w ≤ ‖x − c‖ ≤ 1.5w.
  const int radii = 64;
  const int directions = d == 1 ? 2 : 32;
  for (int k = 0; k < radii; ++k) {
    const double rho = w * (1.0 + 0.5 * k / (radii - 1));
    for (int a = 0; a < directions; ++a) {
      Point dir = Point::Zero(d);
      if (d == 1) {
        dir(0) = a == 0 ? 1.0 : -1.0;
      } else {
        const double theta = 2.0 * M_PI * a / directions;
        dir(0) = std::cos(theta);
        dir(1) = std::sin(theta);
      }
      out.ring_max = std::max(out.ring_max, std::abs(evaluate(net, Point(meta.center + rho * dir)).y));
    }
  }
  if (out.ring_max > 1e-12) fail("g nonzero on the ring around the bump: " + std::to_string(out.ring_max));

  // Needle norms, and every coordinate beyond the first is the zero function.
  for (int i = 0; i < net.depth(); ++i) {
    for (std::size_t j = 0; j < net.layers[i].size(); ++j) {
      const auto& fn = net.layers[i][j];
      if (j > 0) {
        const auto* e = std::get_if<Expansion<double>>(&fn);
        if (!e || !e->empty()) fail("layer " + std::to_string(i + 1) + " coordinate " + std::to_string(j + 1) + " is not zero");
        continue;
      }
      if (i == 0) continue;
      const auto* e = std::get_if<Expansion<double>>(&fn);
      if (!e) {
        fail("layer " + std::to_string(i + 1) + " is not a kernel expansion");
        continue;
      }
      out.norm_error = std::max(out.norm_error, std::abs(rkhs_norm(*e) - net.B));
    }
  }
  if (out.norm_error > 1e-9) fail("needle norm differs from B by " + std::to_string(out.norm_error));

  // Slope sandwich on (0, ũ].
  const double L = meta.L_eff;
  const double lower = meta.alpha * L;
  out.slope_low = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 1024; ++k) {
    const double z = meta.u_tilde * k / 1024.0;
    const double q = needle_value(z, meta.u, net.B, net.kernel) / z;
    out.slope_low = std::min(out.slope_low, q);
    out.slope_high = std::max(out.slope_high, q);
  }
  if (!(lower > 1.0)) fail("alpha*L = " + std::to_string(lower) + " is not above 1");
  if (out.slope_low < lower * (1.0 - 1e-9)) fail("needle slope below alpha*L");
  if (out.slope_high > L * (1.0 + 1e-9)) fail("needle slope above L");
  if (L > net.L) fail("network L below the needle slope bound");

  // Family geometry.
  const int n = int(std::floor(1.0 / (2.0 * w)));
  long long expected = 1;
  for (int k = 0; k < d; ++k) expected *= n;
  if (fam.M != expected || fam.instances.size() != std::size_t(expected))
    fail("family size " + std::to_string(fam.M) + " differs from floor(1/2w)^d = " + std::to_string(expected));
  std::vector<Point> centers;
  for (const auto& member : fam.instances) {
    const auto& bump = std::get<ScaledBump>(member.network.layers[0][0]);
    if ((bump.center - member.meta.center).norm() != 0.0) fail("family member center out of sync");
    if ((bump.center.array() - w < -1e-12).any() || (bump.center.array() + w > 1.0 + 1e-12).any())
      fail("family support leaves the unit box");
    centers.push_back(bump.center);
  }
  out.min_center_gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < centers.size(); ++a)
    for (std::size_t b = a + 1; b < centers.size(); ++b) out.min_center_gap = std::min(out.min_center_gap, (centers[a] - centers[b]).norm());
  if (out.min_center_gap < 2.0 * w - 1e-12) fail("family supports overlap");
  return out;
}

SuiteResult suite_hard_invariants(std::uint64_t seed) {
  SuiteResult res = start("hard-invariants", "hard instances: peak 2*eps, disjoint supports, needle norms and slopes", 1e-3, seed);
  const std::vector<std::tuple<int, int, double>> configs{{2, 1, 0.05}, {3, 1, 0.05}, {2, 2, 0.1}};
  for (Structure s : {Structure::Chain, Structure::MultiOutputChain, Structure::FeedForward}) {
    for (const auto& [m, d, eps] : configs) {
      HardOptions opts;
      opts.structure = s;
      opts.m = m;
      opts.d = d;
      opts.eps = eps;
      const std::string tag = to_string(s) + " m=" + std::to_string(m) + " d=" + std::to_string(d) + ": ";
      try {
        const HardCheck check = check_hard_config(opts);
        res.max_violation = std::max(res.max_violation, check.max_error);
        for (const auto& f : check.failures) res.failures.push_back(tag + f);
      } catch (const std::exception& e) {
        res.failures.push_back(tag + e.what());
      }
      ++res.checks;
    }
  }
  finish(res);
  return res;
}

SuiteResult suite_fill_scaling(std::uint64_t seed) {
  SuiteResult res = start("fill-scaling", "max posterior deviation shrinks like fill distance^nu", 0.0, seed);
  KernelSpec spec;
  spec.nu = 1.5;
  spec.lengthscale = 0.2;
  const FillScaling fs = sigma_fill_scaling(spec, {8, 16, 32, 64});
  res.max_violation = std::max({0.0, 1.2 - fs.slope, fs.slope - 1.8});
  for (std::size_t k = 0; k < fs.sizes.size(); ++k) {
    if (std::abs(fs.fill[k] - 0.5 / fs.sizes[k]) > 1e-12) res.failures.push_back("fill distance off the lattice value at n=" + std::to_string(fs.sizes[k]));
    if (k > 0 && !(fs.max_sigma[k] < fs.max_sigma[k - 1])) res.failures.push_back("max deviation not decreasing at n=" + std::to_string(fs.sizes[k]));
  }
  res.checks = static_cast<long long>(fs.sizes.size());
  std::ostringstream msg;
  msg << "slope " << fs.slope << " outside [1.2, 1.8]";
  if (res.max_violation > 0.0) res.failures.push_back(msg.str());
  res.passed = res.failures.empty();
  return res;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

namespace {

struct Cell {
  int m;
  int T;
  double nu;
  double B;
};

std::vector<Cell> sweep_cells(const SweepOptions& opts) {
  std::vector<Cell> cells;
  for (int m : opts.m_values)
    for (int T : opts.T_values)
      for (double nu : opts.nu_values)
        for (double B : opts.B_values) cells.push_back({m, T, nu, B});
  return cells;
}

std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

std::string prefix(const SweepOptions& opts) { return to_string(opts.structure) + "," + to_string(opts.algo) + "," + std::to_string(opts.d); }

}  // namespace

std::vector<SweepRow> run_sweep(const SweepOptions& opts) {
  if (opts.replications < 1) throw ArgumentError("sweep: replications must be at least 1");
  if (opts.m_values.empty() || opts.T_values.empty() || opts.nu_values.empty() || opts.B_values.empty())
    throw ArgumentError("sweep: every parameter list needs at least one value");
  for (int T : opts.T_values)
    if (T < 1) throw ArgumentError("sweep: horizons must be positive");
  for (int m : opts.m_values)
    if (m < 1) throw ArgumentError("sweep: depths must be positive");
  for (double B : opts.B_values)
    if (!(B > 0.0)) throw ArgumentError("sweep: B values must be positive");
  for (double nu : opts.nu_values)
    if (!(nu > 0.0)) throw ArgumentError("sweep: nu values must be positive");
  const std::vector<Cell> cells = sweep_cells(opts);
  std::vector<SweepRow> rows(cells.size() * std::size_t(opts.replications));
  parallel_for(rows.size(), [&](std::size_t k) {
    const Cell& cell = cells[k / std::size_t(opts.replications)];
    SweepRow& row = rows[k];
    row.m = cell.m;
    row.T = cell.T;
    row.nu = cell.nu;
    row.B = cell.B;
    row.replication = int(k % std::size_t(opts.replications));
    row.seed = opts.seed + std::uint64_t(row.replication);
    row.sigma_max = std::numeric_limits<double>::quiet_NaN();
    try {
      SynthesisOptions so;
      so.seed = row.seed;
      so.structure = opts.structure;
      so.dims = default_dims(opts.structure, cell.m, opts.d, opts.inner_dim);
      so.spec.nu = cell.nu;
      so.spec.lengthscale = opts.lengthscale;
      so.B = cell.B;
      so.n_centers = opts.n_centers;
      const NetworkInstance net = synthesize_network(so);
      RunConfig cfg;
      cfg.algo = opts.algo;
      cfg.T = cell.T;
      cfg.candidate_grid = opts.candidate_grid;
      cfg.region.G = opts.G;
      cfg.seed = row.seed;
      const RunResult result = run(net, cfg);
      const Trace& trace = result.trace;
      row.ok = trace.complete;
      row.steps = trace.T;
      row.R_T = trace.steps.empty() ? 0.0 : trace.steps.back().R;
      row.simple_regret = returned_regret(trace);
      const SigmaSums sums = sigma_trajectory_sums(trace);
      if (!sums.per_layer.empty()) row.sigma_max = sums.max;
      if (!trace.complete) row.error = trace.abort_reason;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });
  return rows;
}

std::string sweep_runs_csv(const SweepOptions& opts, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "structure,algo,d,m,T,nu,B,replication,seed,status,steps,R_T,simple_regret,sigma_max,error\n";
  for (const auto& r : rows) {
    out << prefix(opts) << ',' << r.m << ',' << r.T << ',' << format_double(r.nu) << ',' << format_double(r.B) << ','
        << r.replication << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.steps << ','
        << format_double(r.R_T) << ',' << format_double(r.simple_regret) << ','
        << (std::isnan(r.sigma_max) ? std::string() : format_double(r.sigma_max)) << ',' << csv_field(r.error) << '\n';
  }
  return out.str();
}

std::string sweep_medians_csv(const SweepOptions& opts, const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "structure,algo,d,m,T,nu,B,runs,ok,median_R_T,median_simple_regret,median_sigma_max\n";
  for (const Cell& cell : sweep_cells(opts)) {
    std::vector<double> R, r, s;
    int total = 0;
    for (const auto& row : rows) {
      if (row.m != cell.m || row.T != cell.T || row.nu != cell.nu || row.B != cell.B) continue;
      ++total;
      if (!row.ok) continue;
      R.push_back(row.R_T);
      r.push_back(row.simple_regret);
      if (!std::isnan(row.sigma_max)) s.push_back(row.sigma_max);
    }
    out << prefix(opts) << ',' << cell.m << ',' << cell.T << ',' << format_double(cell.nu) << ',' << format_double(cell.B) << ','
        << total << ',' << R.size() << ',' << format_double(median(R)) << ',' << format_double(median(r)) << ','
        << (s.empty() ? std::string() : format_double(median(s))) << '\n';
  }
  return out.str();
}

}  // namespace cascade
