#include "cascade/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cascade {

namespace fs = std::filesystem;

namespace {

Json point_json(const Point& x) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < x.size(); ++k) a.push_back(x(k));
  return a;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

std::string box_text(const Box& b) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (Eigen::Index k = 0; k < b.dim(); ++k) s << (k ? " x " : "") << '[' << b.lo(k) << ", " << b.hi(k) << ']';
  return s.str();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

KernelSpec kernel_of(double nu, double lengthscale) {
  KernelSpec spec;
  spec.nu = nu;
  spec.lengthscale = lengthscale;
  spec.validate();
  return spec;
}

EnvelopePolicy parse_policy(const std::string& name) {
  if (name == "anchored") return EnvelopePolicy::Anchored;
  if (name == "plain") return EnvelopePolicy::Plain;
  throw ArgumentError("unknown envelope policy '" + name + "'");
}

// Generator flags shared by generate, run and sweep.
struct GeneratorArgs {
  std::string structure = "chain";
  int m = 2;
  int d = 1;
  std::uint64_t seed = 0;
  double B = 2.0;
  double nu = 1.5;
  double lengthscale = 0.2;
  int n_centers = 6;
  int inner_dim = 2;

  void add(CLI::App* app) {
    app->add_option("--structure", structure, "chain | multi | ffn")->capture_default_str();
    app->add_option("--m", m, "number of layers")->capture_default_str();
    app->add_option("--d", d, "input dimension")->capture_default_str();
    app->add_option("--seed", seed, "generator seed")->capture_default_str();
    app->add_option("--B", B, "RKHS norm bound")->capture_default_str();
    app->add_option("--nu", nu, "Matern smoothness")->capture_default_str();
    app->add_option("--lengthscale", lengthscale, "kernel lengthscale")->capture_default_str();
    app->add_option("--n-centers", n_centers, "kernel centers per coordinate")->capture_default_str();
    app->add_option("--inner-dim", inner_dim, "hidden width for multi and ffn")->capture_default_str();
  }

  NetworkInstance build() const {
    if (m < 1 || d < 1) throw ArgumentError("--m and --d must be positive");
    SynthesisOptions so;
    so.seed = seed;
    so.structure = parse_structure(structure);
    so.dims = default_dims(so.structure, m, d, inner_dim);
    so.spec = kernel_of(nu, lengthscale);
    so.B = B;
    so.n_centers = n_centers;
    return synthesize_network(so);
  }
};

int cmd_generate(const GeneratorArgs& gen, const std::string& path, std::ostream& out) {
  const NetworkInstance net = gen.build();
  ensure_parent(path);
  save_instance(path, net);
  out << "wrote " << path << '\n';
  out << "structure " << to_string(net.structure) << "  dims " << join(net.dims) << "  B " << net.B << "  L "
      << std::setprecision(6) << net.L << '\n';
  for (int i = 0; i < net.depth(); ++i) out << "layer " << i + 1 << " domain " << box_text(net.layer_domains[i]) << '\n';
  return kExitOk;
}

struct HardArgs {
  std::string structure = "chain";
  int m = 2;
  int d = 1;
  double eps = 0.05;
  double B = 5.0;
  double nu = 1.5;
  double lengthscale = 0.2;
  int inner_dim = 2;
  bool family = false;
  std::string out;
};

double peak_of(const NetworkInstance& net) {
  return std::max(oracle_optimum(net).value, evaluate(net, net.hard->center).y);
}

void print_meta(const HardMeta& h, int M, double peak, std::ostream& out) {
  out << std::setprecision(10) << "eps " << h.eps << "\neps1 " << h.eps1 << "\nw " << h.w << "\nu " << h.u << "\nu_tilde "
      << h.u_tilde << "\nalpha " << h.alpha << "\nL_eff " << h.L_eff << "\nM " << M << "\nmax_check " << peak
      << " (target " << 2.0 * h.eps << ")\n";
}

int cmd_hard(const HardArgs& a, std::ostream& out) {
  HardOptions opts;
  opts.spec = kernel_of(a.nu, a.lengthscale);
  opts.B = a.B;
  opts.m = a.m;
  opts.d = a.d;
  opts.eps = a.eps;
  opts.structure = parse_structure(a.structure);
  opts.inner_dim = a.inner_dim;
  if (!a.family) {
    const HardInstance inst = build_hard_instance(opts);
    ensure_parent(a.out);
    save_instance(a.out, inst.network);
    const int n = int(std::floor(1.0 / (2.0 * inst.meta.w)));
    out << "wrote " << a.out << '\n';
    print_meta(inst.meta, int(std::pow(n, a.d)), peak_of(inst.network), out);
    return kExitOk;
  }
  const HardFamily fam = hard_family(opts);
  fs::create_directories(a.out);
  const int width = int(std::to_string(fam.M - 1).size());
  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["structure"] = to_string(opts.structure);
  manifest["m"] = a.m;
  manifest["d"] = a.d;
  manifest["eps"] = a.eps;
  manifest["B"] = a.B;
  manifest["kernel"] = to_json(opts.spec);
  manifest["M"] = fam.M;
  manifest["w"] = fam.w;
  manifest["eps1"] = fam.instances.front().meta.eps1;
  Json files = Json::array();
  for (std::size_t k = 0; k < fam.instances.size(); ++k) {
    std::ostringstream name;
    name << "instance_" << std::setw(width) << std::setfill('0') << k << ".json";
    const std::string bytes = dump_instance(fam.instances[k].network);
    write_file((fs::path(a.out) / name.str()).string(), bytes);
    files.push_back(Json{{"file", name.str()}, {"center", point_json(fam.instances[k].meta.center)}, {"hash", content_hash(bytes)}});
  }
  manifest["instances"] = files;
  write_file((fs::path(a.out) / "manifest.json").string(), manifest.dump(2) + "\n");
  out << "wrote " << fam.M << " instances and manifest.json to " << a.out << '\n';
  const HardInstance& mid = fam.instances[std::size_t(fam.M / 2)];
  print_meta(mid.meta, fam.M, peak_of(mid.network), out);
  return kExitOk;
}

struct RunArgs {
  std::string instance;
  std::string algo = "gpn-ucb";
  int T = 50;
  int grid = 0;
  int G = 64;
  int max_box_points = 4096;
  std::string policy = "anchored";
  double jitter = kDefaultJitter;
  double inflate_B = 1.0;
  bool wall_clock = false;
  std::string out;
};

int cmd_run(const GeneratorArgs& gen, const RunArgs& a, std::ostream& out) {
  NetworkInstance net;
  std::string source, hash;
  if (!a.instance.empty()) {
    const std::string bytes = read_file(a.instance);
    net = load_instance(a.instance);
    source = a.instance;
    hash = content_hash(bytes);
  } else {
    net = gen.build();
    source = "generated";
    hash = content_hash(dump_instance(net));
  }
  RunConfig cfg;
  cfg.algo = parse_algorithm(a.algo);
  cfg.T = a.T;
  cfg.candidate_grid = a.grid;
  cfg.region.G = a.G;
  cfg.region.max_box_points = a.max_box_points;
  cfg.region.policy = parse_policy(a.policy);
  cfg.jitter = a.jitter;
  cfg.seed = gen.seed;
  cfg.inflate_B = a.inflate_B;
  cfg.wall_clock = a.wall_clock;
  if (cfg.region.G < 1 || cfg.region.max_box_points < 1) throw ArgumentError("--G and --max-box-points must be positive");

  const RunResult result = run(net, cfg);
  fs::create_directories(a.out);
  std::ostringstream csv;
  write_trace_csv(csv, result.trace, net.depth());
  write_file((fs::path(a.out) / "trace.csv").string(), csv.str());
  const Json summary = run_summary(net, source, hash, cfg, result);
  write_file((fs::path(a.out) / "summary.json").string(), summary.dump(2) + "\n");

  const Trace& tr = result.trace;
  out << to_string(cfg.algo) << "  T " << tr.T << "  R_T " << std::setprecision(8) << summary["R_T"].get<double>()
      << "  r*_T " << summary["simple_regret"].get<double>() << '\n';
  out << "wrote " << (fs::path(a.out) / "trace.csv").string() << " and summary.json\n";
  if (!tr.complete) {
    out << "aborted: " << tr.abort_reason << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, bool corrupt, const std::string& path, std::ostream& out) {
  std::vector<std::string> names;
  if (suite == "all") names = suite_names();
  else names.push_back(suite);
  bool ok = true;
  Json results = Json::array();
  for (const auto& name : names) {
    const SuiteResult r = run_suite(name, seed, corrupt);
    ok = ok && r.passed;
    results.push_back(r.to_json());
  }
  const Json doc = names.size() == 1 ? results[0] : results;
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!path.empty()) {
    ensure_parent(path);
    write_file(path, text);
  }
  return ok ? kExitOk : kExitSuiteFailure;
}

struct SweepArgs {
  std::vector<int> m{2};
  std::vector<int> T;
  std::vector<double> nu{1.5};
  std::vector<double> B{2.0};
  std::string structure = "chain";
  std::string algo = "nonadaptive";
  int d = 1;
  double lengthscale = 0.2;
  int n_centers = 6;
  int inner_dim = 2;
  int replications = 1;
  std::uint64_t seed = 0;
  int grid = 0;
  int G = 64;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  SweepOptions opts;
  opts.structure = parse_structure(a.structure);
  opts.algo = parse_algorithm(a.algo);
  opts.d = a.d;
  opts.m_values = a.m;
  opts.T_values = a.T;
  opts.nu_values = a.nu;
  opts.B_values = a.B;
  opts.lengthscale = a.lengthscale;
  opts.n_centers = a.n_centers;
  opts.inner_dim = a.inner_dim;
  opts.replications = a.replications;
  opts.seed = a.seed;
  opts.candidate_grid = a.grid;
  opts.G = a.G;
  const std::vector<SweepRow> rows = run_sweep(opts);
  fs::create_directories(a.out);
  write_file((fs::path(a.out) / "runs.csv").string(), sweep_runs_csv(opts, rows));
  const std::string medians = sweep_medians_csv(opts, rows);
  write_file((fs::path(a.out) / "medians.csv").string(), medians);
  int failed = 0;
  for (const auto& r : rows) failed += !r.ok;
  out << rows.size() << " runs (" << failed << " failed) written to " << a.out << '\n' << medians;
  return kExitOk;
}

}  // namespace

Json run_summary(const NetworkInstance& net, const std::string& instance_source, const std::string& instance_hash,
                 const RunConfig& cfg, const RunResult& result) {
  const Trace& tr = result.trace;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["algo"] = to_string(cfg.algo);
  j["config"] = Json{{"T", cfg.T},
                     {"candidate_grid", cfg.candidate_grid},
                     {"G", cfg.region.G},
                     {"max_box_points", cfg.region.max_box_points},
                     {"policy", cfg.region.policy == EnvelopePolicy::Anchored ? "anchored" : "plain"},
                     {"jitter", cfg.jitter},
                     {"seed", cfg.seed},
                     {"inflate_B", cfg.inflate_B},
                     {"wall_clock", cfg.wall_clock}};
  j["instance"] = Json{{"source", instance_source},
                       {"hash", instance_hash},
                       {"label", net.label},
                       {"structure", to_string(net.structure)},
                       {"dims", net.dims},
                       {"B", net.B},
                       {"L", net.L},
                       {"kernel", to_json(net.kernel)}};
  if (cfg.algo == Algorithm::BlackboxUcb)
    j["caveat"] = "B and L^m are used for the end-to-end function without a norm guarantee for the composition";
  j["complete"] = tr.complete;
  j["abort_reason"] = tr.abort_reason;
  j["T"] = tr.T;
  j["R_T"] = tr.steps.empty() ? 0.0 : tr.steps.back().R;
  j["simple_regret"] = returned_regret(tr);
  if (tr.x_star) j["x_star"] = point_json(*tr.x_star);
  j["grid_optimum"] = tr.grid_optimum;
  j["oracle_optimum"] = tr.oracle_optimum;
  const SigmaSums sums = sigma_trajectory_sums(tr);
  j["sigma_sums"] = Json{{"per_layer", sums.per_layer}, {"max", sums.max}, {"partial", sums.partial}};
  double max_jitter = 0.0;
  for (const auto& s : tr.steps) max_jitter = std::max(max_jitter, s.max_jitter);
  j["max_jitter"] = max_jitter;
  j["wall_ms"] = tr.wall_ms;
  return j;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grey-box Bayesian optimization of function networks", "cascade-bandits"};
  app.require_subcommand(1);

  GeneratorArgs gen_args;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "synthesize a random network instance");
  gen_args.add(generate);
  generate->add_option("--out", gen_out, "instance JSON path")->required();

  HardArgs hard_args;
  auto* hard = app.add_subcommand("hard", "build a hard instance or a family of them");
  hard->add_option("--structure", hard_args.structure)->capture_default_str();
  hard->add_option("--m", hard_args.m)->capture_default_str();
  hard->add_option("--d", hard_args.d)->capture_default_str();
  hard->add_option("--epsilon", hard_args.eps)->capture_default_str();
  hard->add_option("--B", hard_args.B)->capture_default_str();
  hard->add_option("--nu", hard_args.nu)->capture_default_str();
  hard->add_option("--lengthscale", hard_args.lengthscale)->capture_default_str();
  hard->add_option("--inner-dim", hard_args.inner_dim)->capture_default_str();
  hard->add_flag("--family", hard_args.family, "write every shifted instance plus a manifest");
  hard->add_option("--out", hard_args.out, "instance path, or a directory with --family")->required();

  GeneratorArgs run_gen;
  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run an algorithm and write trace.csv and summary.json");
  run_gen.add(run_cmd);
  run_cmd->add_option("--instance", run_args.instance, "instance JSON; generator flags are used when absent");
  run_cmd->add_option("--algo", run_args.algo, "gpn-ucb | nonadaptive | nonadaptive-projected | blackbox-ucb")->capture_default_str();
  run_cmd->add_option("--T", run_args.T, "number of queries")->capture_default_str();
  run_cmd->add_option("--grid", run_args.grid, "candidate points per axis (0 = default)")->capture_default_str();
  run_cmd->add_option("--G", run_args.G, "region evaluation grid")->capture_default_str();
  run_cmd->add_option("--max-box-points", run_args.max_box_points, "lattice budget for box regions")->capture_default_str();
  run_cmd->add_option("--policy", run_args.policy, "anchored | plain")->capture_default_str();
  run_cmd->add_option("--jitter", run_args.jitter, "initial Cholesky jitter")->capture_default_str();
  run_cmd->add_option("--inflate-B", run_args.inflate_B, "multiplier on B in the confidence bounds")->capture_default_str();
  run_cmd->add_flag("--wall-clock", run_args.wall_clock, "record timings (makes output nondeterministic)");
  run_cmd->add_option("--out", run_args.out, "output directory")->required();

  std::string suite;
  std::uint64_t verify_seed = 0;
  bool corrupt = false;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run a property suite");
  std::vector<std::string> choices = suite_names();
  choices.push_back("all");
  verify->add_option("--suite", suite)->required()->check(CLI::IsMember(choices));
  verify->add_option("--seed", verify_seed)->capture_default_str();
  verify->add_flag("--corrupt", corrupt, "inflate regrets tenfold before checking (negative control)");
  verify->add_option("--out", verify_out, "also write the JSON result here");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "parameter grid with replications");
  sweep->add_option("--T", sweep_args.T, "horizons")->required()->delimiter(',')->expected(1, -1);
  sweep->add_option("--m", sweep_args.m)->delimiter(',')->expected(1, -1)->capture_default_str();
  sweep->add_option("--nu", sweep_args.nu)->delimiter(',')->expected(1, -1)->capture_default_str();
  sweep->add_option("--B", sweep_args.B)->delimiter(',')->expected(1, -1)->capture_default_str();
  sweep->add_option("--structure", sweep_args.structure)->capture_default_str();
  sweep->add_option("--algo", sweep_args.algo)->capture_default_str();
  sweep->add_option("--d", sweep_args.d)->capture_default_str();
  sweep->add_option("--lengthscale", sweep_args.lengthscale)->capture_default_str();
  sweep->add_option("--n-centers", sweep_args.n_centers)->capture_default_str();
  sweep->add_option("--inner-dim", sweep_args.inner_dim)->capture_default_str();
  sweep->add_option("--replications", sweep_args.replications)->capture_default_str();
  sweep->add_option("--seed", sweep_args.seed, "seed base; replication k uses seed + k")->capture_default_str();
  sweep->add_option("--grid", sweep_args.grid)->capture_default_str();
  sweep->add_option("--G", sweep_args.G)->capture_default_str();
  sweep->add_option("--out", sweep_args.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen_args, gen_out, out);
    if (*hard) return cmd_hard(hard_args, out);
    if (*run_cmd) return cmd_run(run_gen, run_args, out);
    if (*verify) return cmd_verify(suite, verify_seed, corrupt, verify_out, out);
    if (*sweep) return cmd_sweep(sweep_args, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cascade
