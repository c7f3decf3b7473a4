// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "cascade/harness.hpp"

using namespace cascade;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << what << " (" << detail << ")" << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string suite_detail(const SuiteResult& r) {
  return r.suite + " max_violation=" + fmt(r.max_violation) + " tol=" + fmt(r.tolerance) + " checks=" + std::to_string(r.checks);
}

struct InterpolationStats {
  double mean_error = 0.0;
  double sd = 0.0;
  long long points = 0;
};

void interpolation(const PosteriorModel<double>& model, InterpolationStats& st) {
  const auto& data = model.data();
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    const Point x = data.points.row(s).transpose();
    const Vector<double> mu = model.mean(x);
    st.mean_error = std::max(st.mean_error, (mu - data.values.row(s).transpose()).cwiseAbs().maxCoeff());
    st.sd = std::max(st.sd, model.std_dev(x));
    ++st.points;
  }
}

bool same_steps(const Trace& a, const Trace& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const TraceStep &s = a.steps[k], &u = b.steps[k];
    if (s.x != u.x || s.y != u.y || s.ucb != u.ucb || s.r != u.r || s.R != u.R) return false;
  }
  return true;
}

// Every regular file under `dir`, keyed by relative path.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), read_file(e.path().string()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  // 1. Single-output containment.
  {
    const SuiteResult r = run_suite("lemma1");
    report(1, r.passed, "scalar posterior containment", suite_detail(r));
  }

  // 2. Kronecker identity and vector containment.
  {
    const SuiteResult k = run_suite("kronecker");
    const SuiteResult l = run_suite("lemma2");
    report(2, k.passed && l.passed, "Kronecker posterior and vector containment", suite_detail(k) + "; " + suite_detail(l));
  }

  // Shared per-step runs for criteria 3, 4, 5.
  std::vector<std::vector<PerstepRun>> perstep;
  for (Structure s : {Structure::Chain, Structure::MultiOutputChain, Structure::FeedForward})
    perstep.push_back(perstep_runs(perstep_setup(s), 0));
  std::vector<RunResult> nonadaptive;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthesisOptions so;
    so.seed = seed;
    so.dims = default_dims(Structure::Chain, 2, 1);
    so.spec.nu = 2.5;
    RunConfig cfg;
    cfg.algo = Algorithm::Nonadaptive;
    cfg.T = 1024;
    nonadaptive.push_back(run(synthesize_network(so), cfg));
  }

  // 3. Interpolation of every fitted model.
  {
    InterpolationStats st;
    int models = 0;
    for (const auto& group : perstep)
      for (const auto& r : group)
        for (const auto& m : r.result.models) interpolation(*m, st), ++models;
    for (const auto& r : nonadaptive)
      for (const auto& m : r.models) interpolation(*m, st), ++models;
    report(3, st.mean_error <= 1e-6 && st.sd <= 1e-5, "interpolation at observed inputs",
           std::to_string(models) + " models, " + std::to_string(st.points) + " points, max |mu-y|=" + fmt(st.mean_error) +
               " max sigma=" + fmt(st.sd));
  }

  // 4. Per-step inequalities, plus the corrupted-trace control.
  {
    bool ok = true;
    std::string detail;
    const char* names[] = {"chain", "multi", "ffn"};
    for (std::size_t g = 0; g < perstep.size(); ++g) {
      int pass = 0;
      double worst = -1e300;
      for (const auto& r : perstep[g]) {
        pass += r.report.steps_pass && r.result.trace.complete;
        worst = std::max(worst, r.report.max_violation);
      }
      ok = ok && pass == int(perstep[g].size());
      detail += std::string(names[g]) + " " + std::to_string(pass) + "/" + std::to_string(perstep[g].size()) +
                " max r-rhs=" + fmt(worst) + "; ";
    }
    int corrupted_pass = 0;
    for (const auto& r : perstep[0]) {
      Trace t = r.result.trace;
      corrupt_trace(t, 10.0);
      corrupted_pass += verify_bounds(t, r.net, Structure::Chain).steps_pass;
    }
    const bool control = corrupted_pass < int(perstep[0].size());
    detail += "corrupted chain runs passing " + std::to_string(corrupted_pass) + "/" + std::to_string(perstep[0].size());
    report(4, ok && control, "per-step regret inequalities", detail);
  }

  // 5. Aggregate bound on the chain suite.
  {
    int pass = 0;
    double slack = 1e300;
    for (const auto& r : perstep[0]) {
      pass += r.report.aggregate_pass;
      slack = std::min(slack, r.report.aggregate_rhs - r.report.aggregate_lhs);
    }
    report(5, pass == int(perstep[0].size()), "aggregate regret bound",
           std::to_string(pass) + "/" + std::to_string(perstep[0].size()) + " min slack=" + fmt(slack));
  }

  // 6. Hard-instance invariants.
  {
    const SuiteResult r = run_suite("hard-invariants");
    std::string detail = suite_detail(r);
    if (!r.failures.empty()) detail += " first failure: " + r.failures.front();
    report(6, r.passed, "hard-instance invariants", detail);
  }

  // 7. Needle feasibility at ν=1.5, l=1, B=5.
  {
    KernelSpec spec;
    spec.nu = 1.5;
    spec.lengthscale = 1.0;
    const double margin = condition2_margin(spec, 5.0, 0.5, 0.3);
    const NeedleChoice c = select_u_utilde(spec, 5.0);
    report(7, margin >= 0.0, "needle feasibility at (u, u~) = (0.5, 0.3)",
           "margin=" + fmt(margin) + " selected u=" + fmt(c.u) + " u~=" + fmt(c.u_tilde));
  }

  // 8. Non-adaptive simple-regret trend.
  {
    SweepOptions o;
    o.algo = Algorithm::Nonadaptive;
    o.m_values = {2};
    o.nu_values = {2.5};
    o.T_values = {16, 64, 256, 1024};
    o.replications = 10;
    const std::vector<SweepRow> rows = run_sweep(o);
    std::vector<double> med;
    bool all_ok = true;
    for (int T : o.T_values) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.T == T) v.push_back(r.simple_regret), all_ok = all_ok && r.ok;
      med.push_back(median(v));
    }
    bool monotone = true;
    for (std::size_t k = 1; k < med.size(); ++k) monotone = monotone && med[k] <= med[k - 1];
    const bool drop = med.back() <= 0.25 * med.front();
    std::string detail = "medians";
    for (double v : med) detail += " " + fmt(v);
    report(8, all_ok && monotone && drop, "non-adaptive simple regret decreases with T", detail);
  }

  // 9. Fill-distance scaling.
  {
    const SuiteResult r = run_suite("fill-scaling");
    const FillScaling f = sigma_fill_scaling(KernelSpec{}, {8, 16, 32, 64});
    report(9, r.passed && f.slope >= 1.2 && f.slope <= 1.8, "posterior deviation against fill distance",
           "slope=" + fmt(f.slope) + " " + suite_detail(r));
  }

  // 10. Structural degenerations.
  {
    bool ffn_ok = true, box_ok = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthesisOptions so;
      so.seed = seed;
      so.dims = {1, 1, 1};
      const NetworkInstance chain = synthesize_network(so);
      NetworkInstance ffn = chain;
      ffn.structure = Structure::FeedForward;
      ffn.validate();
      RunConfig cfg;
      cfg.T = 30;
      ffn_ok = ffn_ok && same_steps(run_gpn_ucb(chain, cfg).trace, run_gpn_ucb(ffn, cfg).trace);
      box_ok = box_ok && bound_coefficients(chain) == bound_coefficients(ffn);

      so.dims = {1, 1};
      const NetworkInstance single = synthesize_network(so);
      cfg.T = 40;
      const Trace grey = run_gpn_ucb(single, cfg).trace;
      cfg.algo = Algorithm::BlackboxUcb;
      ffn_ok = ffn_ok && same_steps(grey, run_blackbox_ucb(single, cfg).trace);
    }
    report(10, ffn_ok && box_ok, "unit-width feed-forward equals chain; one layer equals black-box",
           std::string("traces ") + (ffn_ok ? "identical" : "differ") + ", coefficients " + (box_ok ? "identical" : "differ"));
  }

  // 11. Byte-identical reruns of the CLI.
  {
    const fs::path root = fs::temp_directory_path() / ("cascade_acceptance_" + std::to_string(::getpid()));
    const std::vector<std::vector<std::string>> commands{
        {"generate", "--structure", "multi", "--m", "3", "--seed", "7", "--out", "@/multi.json"},
        {"generate", "--seed", "7", "--out", "@/gen.json"},
        {"hard", "--m", "3", "--out", "@/hard.json"},
        {"hard", "--m", "2", "--family", "--out", "@/family"},
        {"run", "--instance", "@/gen.json", "--algo", "gpn-ucb", "--T", "20", "--out", "@/gpn"},
        {"run", "--instance", "@/gen.json", "--algo", "blackbox-ucb", "--T", "20", "--out", "@/bb"},
        {"run", "--instance", "@/gen.json", "--algo", "nonadaptive", "--T", "64", "--out", "@/na"},
        {"verify", "--suite", "kronecker", "--out", "@/kronecker.json"},
        {"verify", "--suite", "fill-scaling", "--out", "@/fill.json"},
        {"sweep", "--T", "16,64", "--m", "2,3", "--replications", "2", "--out", "@/sweep"},
    };
    std::vector<std::vector<std::pair<std::string, std::string>>> snaps;
    std::vector<std::string> stdouts;
    bool codes_ok = true;
    for (int pass = 0; pass < 2; ++pass) {
      // Same paths both times: summaries echo the instance path.
      const fs::path dir = root / "work";
      fs::remove_all(dir);
      fs::create_directories(dir);
      std::string all_out;
      for (auto cmd : commands) {
        for (auto& a : cmd)
          if (a.rfind("@/", 0) == 0) a = (dir / a.substr(2)).string();
        std::ostringstream out, err;
        codes_ok = codes_ok && cli_main(cmd, out, err) == kExitOk;
        all_out += out.str();
      }
      snaps.push_back(snapshot(dir));
      stdouts.push_back(all_out);
    }
    fs::remove_all(root);
    const bool same = snaps[0] == snaps[1] && stdouts[0] == stdouts[1];
    report(11, codes_ok && same && !snaps[0].empty(), "deterministic reruns",
           std::to_string(snaps[0].size()) + " files compared, " + (same ? "identical" : "differ") +
               (codes_ok ? "" : ", a command failed"));
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in " << fmt(secs)
            << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
