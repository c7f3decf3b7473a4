#ifndef CASCADE_SUITES_HPP
#define CASCADE_SUITES_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cascade/metrics.hpp"
#include "cascade/serialization.hpp"

namespace cascade {

/// Worker count: CASCADE_BANDITS_THREADS if set and positive, else the hardware concurrency.
int worker_count();

/// Runs fn(0..n-1) across worker_count() threads. Work items must write disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

struct SuiteResult {
  std::string suite;
  std::string property;
  bool passed = true;
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  long long checks = 0;
  std::vector<std::string> failures;

  Json to_json() const;
};

const std::vector<std::string>& suite_names();
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 0, bool corrupt = false);

SuiteResult suite_lemma1(std::uint64_t seed);
SuiteResult suite_lemma2(std::uint64_t seed);
SuiteResult suite_kronecker(std::uint64_t seed);
SuiteResult suite_perstep(Structure s, std::uint64_t seed, bool corrupt);
SuiteResult suite_hard_invariants(std::uint64_t seed);
SuiteResult suite_fill_scaling(std::uint64_t seed);

struct PerstepSetup {
  Structure structure = Structure::Chain;
  std::vector<int> dims;
  KernelSpec spec;
  double B = 2.0;
  int n_centers = 6;
  int T = 100;
  int grid = 512;
  int G = 64;
  int runs = 20;
};
PerstepSetup perstep_setup(Structure s);

struct PerstepRun {
  NetworkInstance net;
  RunResult result;
  BoundReport report;
};
/// One synthesized instance and GPN-UCB run per seed seed_base, seed_base+1, …
std::vector<PerstepRun> perstep_runs(const PerstepSetup& setup, std::uint64_t seed_base, bool corrupt = false);

/// Multiplies every r_t by `factor` and recomputes R_t.
void corrupt_trace(Trace& trace, double factor);

/// r*_T: the non-adaptive simple regret, or for UCB runs the gap of the best queried point.
double returned_regret(const Trace& trace);

/// Hard-instance checks on one configuration; each failure is described in `failures`.
struct HardCheck {
  double max_value = 0.0;   ///< dense-sweep max of g
  double max_error = 0.0;   ///< |max_value − 2ε|
  double ring_max = 0.0;    ///< max |g| on the ring w ≤ ‖x − c‖ ≤ 1.5w
  double norm_error = 0.0;  ///< max |‖needle‖ − B|
  double slope_low = 0.0;   ///< min g̃(z)/z on the slope grid
  double slope_high = 0.0;
  int M = 0;
  double w = 0.0;
  double min_center_gap = 0.0;
  std::vector<std::string> failures;
};
HardCheck check_hard_config(const HardOptions& opts);

struct SweepOptions {
  Structure structure = Structure::Chain;
  Algorithm algo = Algorithm::Nonadaptive;
  int d = 1;
  std::vector<int> m_values{2};
  std::vector<int> T_values;
  std::vector<double> nu_values{1.5};
  std::vector<double> B_values{2.0};
  double lengthscale = 0.2;
  int n_centers = 6;
  int inner_dim = 2;
  int replications = 1;
  std::uint64_t seed = 0;
  int candidate_grid = 0;
  int G = 64;
};

struct SweepRow {
  int m = 0;
  int T = 0;
  double nu = 0.0;
  double B = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  int steps = 0;
  double R_T = 0.0;
  double simple_regret = 0.0;
  double sigma_max = 0.0;
  std::string error;
};

std::vector<SweepRow> run_sweep(const SweepOptions& opts);
std::string sweep_runs_csv(const SweepOptions& opts, const std::vector<SweepRow>& rows);
/// One row per (m, T, ν, B) cell with medians over successful replications.
std::string sweep_medians_csv(const SweepOptions& opts, const std::vector<SweepRow>& rows);

double median(std::vector<double> v);

}  // namespace cascade

#endif  // CASCADE_SUITES_HPP
