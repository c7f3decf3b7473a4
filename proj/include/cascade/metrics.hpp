#ifndef CASCADE_METRICS_HPP
#define CASCADE_METRICS_HPP

#include <string>
#include <vector>

#include "cascade/optimizers.hpp"

namespace cascade {

std::size_t negative_regret_warning_count();

/// grid_optimum_value − g(x), clamped at 0 (counted as a warning when below −1e−9).
double simple_regret(const NetworkInstance& net, const Point& x_returned, double grid_optimum_value);

std::vector<double> cumulative_regret(const std::vector<double>& r);

/// max over probes of the distance to the nearest sample.
double fill_distance(const PointSet<double>& samples, const PointSet<double>& probes);

struct SigmaSums {
  std::vector<double> per_layer;
  double max = 0.0;  ///< trajectory surrogate of Σ_T
  bool partial = false;
};
SigmaSums sigma_trajectory_sums(const Trace& trace);

/// ½ log det(I + λ⁻¹ K).
double info_gain(const PointSet<double>& points, const KernelSpec& spec, double lambda = 1.0);

struct BoundReport {
  std::string structure;
  std::vector<bool> step_pass;
  std::vector<double> step_violation;  ///< r_t − rhs_t
  std::vector<double> coefficients;    ///< per layer multiplier of σ^{(i)}
  double max_violation = 0.0;          ///< max over steps of r_t − rhs_t (negative when slack)
  double tolerance = 1e-3;
  bool steps_pass = true;
  double aggregate_lhs = 0.0;          ///< R_T
  double aggregate_rhs = 0.0;          ///< Σ_t rhs_t + T·tolerance
  bool aggregate_pass = true;
  bool passed() const { return steps_pass && aggregate_pass; }
};

/// Per-layer multipliers of the per-step inequality for the instance's structure.
std::vector<double> bound_coefficients(const NetworkInstance& net);
BoundReport verify_bounds(const Trace& trace, const NetworkInstance& net, Structure structure, double tolerance = 1e-3);

struct FillScaling {
  std::vector<int> sizes;
  std::vector<double> fill;       ///< δ per size
  std::vector<double> max_sigma;  ///< σ̄ per size
  std::vector<double> slopes;     ///< between consecutive sizes
  double slope = 0.0;             ///< least-squares slope of log σ̄ against log δ
};
FillScaling sigma_fill_scaling(const KernelSpec& spec, const std::vector<int>& sample_sizes);

}  // namespace cascade

#endif  // CASCADE_METRICS_HPP
