#ifndef CASCADE_OPTIMIZERS_HPP
#define CASCADE_OPTIMIZERS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cascade/confidence.hpp"
#include "cascade/networks.hpp"

namespace cascade {

enum class Algorithm { GpnUcb, Nonadaptive, NonadaptiveProjected, BlackboxUcb };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct RunConfig {
  Algorithm algo = Algorithm::GpnUcb;
  int T = 50;
  int candidate_grid = 0;  ///< points per input dimension; 0 picks default_candidate_grid (UCB) or oracle_grid (non-adaptive)
  PropagationOptions region;
  double jitter = kDefaultJitter;
  std::uint64_t seed = 0;
  double inflate_B = 1.0;
  bool wall_clock = false;  ///< record timings; off keeps traces byte-stable
};

/// 512 / 64 / 16 points per axis for d = 1 / 2 / 3+.
int default_candidate_grid(int d);
/// 8192 / 256 / 32 points per axis for d = 1 / 2 / 3+.
int oracle_grid(int d);

struct TraceStep {
  int t = 0;
  Point x;
  std::vector<Point> intermediates;  ///< x^(2..m)
  double y = 0.0;
  double r = 0.0;
  double R = 0.0;
  double ucb = 0.0;
  std::vector<double> sigma;  ///< σ^{(i)}_{t−1}(x^{(i)}_t), one per modelled layer
  double wall_ms = 0.0;
  double max_jitter = 0.0;
  double min_pivot = 1.0;
};

struct Trace {
  Algorithm algo = Algorithm::GpnUcb;
  std::vector<TraceStep> steps;
  bool complete = true;
  std::string abort_reason;
  int T = 0;                   ///< actual number of queries
  double grid_optimum = 0.0;   ///< max of g over the candidate grid
  double oracle_optimum = 0.0; ///< max of g over the dense sweep
  std::optional<Point> x_star;
  double x_star_value = 0.0;   ///< g(x_star)
  double simple_regret = 0.0;  ///< against oracle_optimum; meaningful when x_star is set
  double wall_ms = 0.0;
};

struct RunResult {
  Trace trace;
  std::vector<std::shared_ptr<const PosteriorModel<double>>> models;
};

/// Dense sweep of g over the oracle lattice.
struct OracleSweep {
  double value = 0.0;
  Point argmax;
};
OracleSweep oracle_optimum(const NetworkInstance& net);

/// Endpoint-inclusive candidate lattice on [0,1]^d in lexicographic order.
PointSet<double> candidate_points(int d, int per_dim);

/// ⌊T^{1/d}⌋ cell-centred points per axis.
PointSet<double> grid_points(int d, int T);

RunResult run_gpn_ucb(const NetworkInstance& net, const RunConfig& cfg);
RunResult run_blackbox_ucb(const NetworkInstance& net, const RunConfig& cfg);
RunResult run_nonadaptive(const NetworkInstance& net, const RunConfig& cfg);
RunResult run(const NetworkInstance& net, const RunConfig& cfg);

using ModelStack = std::vector<std::shared_ptr<const PosteriorModel<double>>>;

double composite_mean(const ModelStack& models, Structure structure, const Point& x);
double projected_composite_mean(const ModelStack& models, Structure structure, const Point& x,
                                const std::vector<Box>& layer_domains);
/// Batch form; `layer_domains` empty means no projection.
Vector<double> composite_mean(const ModelStack& models, const PointSet<double>& xs,
                              const std::vector<Box>& layer_domains = {});

}  // namespace cascade

#endif  // CASCADE_OPTIMIZERS_HPP
