#include "cascade/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace cascade {

namespace {
std::atomic<std::size_t> negative_regret_warnings{0};
}

std::size_t negative_regret_warning_count() { return negative_regret_warnings.load(); }

double simple_regret(const NetworkInstance& net, const Point& x_returned, double grid_optimum_value) {
  const double r = grid_optimum_value - evaluate(net, x_returned).y;
  if (r < -1e-9) negative_regret_warnings.fetch_add(1, std::memory_order_relaxed);
  return std::max(0.0, r);
}

std::vector<double> cumulative_regret(const std::vector<double>& r) {
  std::vector<double> out(r.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) out[t] = acc += r[t];
  return out;
}

double fill_distance(const PointSet<double>& samples, const PointSet<double>& probes) {
  if (samples.rows() == 0) throw ArgumentError("fill_distance: no samples");
  if (samples.cols() != probes.cols()) throw ArgumentError("fill_distance: dimension mismatch");
  double worst = 0.0;
  for (Eigen::Index p = 0; p < probes.rows(); ++p) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < samples.rows(); ++s) nearest = std::min(nearest, (probes.row(p) - samples.row(s)).squaredNorm());
    worst = std::max(worst, nearest);
  }
  return std::sqrt(worst);
}

SigmaSums sigma_trajectory_sums(const Trace& trace) {
  SigmaSums out;
  out.partial = !trace.complete;
  for (const auto& step : trace.steps) {
    if (out.per_layer.size() < step.sigma.size()) out.per_layer.resize(step.sigma.size(), 0.0);
    for (std::size_t i = 0; i < step.sigma.size(); ++i) out.per_layer[i] += step.sigma[i];
  }
  for (double s : out.per_layer) out.max = std::max(out.max, s);
  return out;
}

double info_gain(const PointSet<double>& points, const KernelSpec& spec, double lambda) {
  if (!(lambda > 0.0)) throw ArgumentError("info_gain: lambda must be positive");
  if (points.rows() == 0) return 0.0;
  Matrix<double> A = gram_matrix(spec, points) / lambda;
  A.diagonal().array() += 1.0;
  Eigen::LLT<Matrix<double>> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("info_gain: factorization failed");
  return Matrix<double>(llt.matrixL()).diagonal().array().log().sum();
}

std::vector<double> bound_coefficients(const NetworkInstance& net) {
  const int m = net.depth();
  const double B = net.B, L = net.L;
  std::vector<double> c(m);
  for (int i = 1; i <= m; ++i) {
    switch (net.structure) {
      case Structure::Chain:
        c[i - 1] = 2.0 * B * std::pow(2.0 * L, m - i);
        break;
      case Structure::MultiOutputChain:
        c[i - 1] = i == m ? 2.0 * B : 2.0 * L * std::pow(5.0 * L, m - 1 - i) * 4.0 * B;
        break;
      case Structure::FeedForward: {
        double width = 1.0;
        for (int s = i + 1; s <= m; ++s) width *= std::sqrt(double(net.dims[s - 1]));
        c[i - 1] = std::pow(2.0, m - i + 1) * B * std::pow(L, m - i) * width;
        break;
      }
    }
  }
  return c;
}

BoundReport verify_bounds(const Trace& trace, const NetworkInstance& net, Structure structure, double tolerance) {
  if (structure != net.structure) throw ArgumentError("verify_bounds: structure does not match the instance");
  if (trace.algo != Algorithm::GpnUcb) throw ArgumentError("verify_bounds: needs a GPN-UCB trace");
  BoundReport report;
  report.structure = to_string(structure);
  report.coefficients = bound_coefficients(net);
  report.tolerance = tolerance;
  report.max_violation = -std::numeric_limits<double>::infinity();
  double rhs_sum = 0.0;
  for (const auto& step : trace.steps) {
    if (step.sigma.size() != report.coefficients.size()) throw ArgumentError("verify_bounds: trace layer count mismatch");
    double rhs = 0.0;
    for (std::size_t i = 0; i < step.sigma.size(); ++i) rhs += report.coefficients[i] * step.sigma[i];
    const double violation = step.r - rhs;
    report.step_violation.push_back(violation);
    report.step_pass.push_back(violation <= tolerance);
    report.steps_pass = report.steps_pass && violation <= tolerance;
    report.max_violation = std::max(report.max_violation, violation);
    rhs_sum += rhs;
    report.aggregate_lhs = step.R;
  }
  if (trace.steps.empty()) report.max_violation = 0.0;
  report.aggregate_rhs = rhs_sum + double(trace.steps.size()) * tolerance;
  report.aggregate_pass = report.aggregate_lhs <= report.aggregate_rhs;
  return report;
}

FillScaling sigma_fill_scaling(const KernelSpec& spec, const std::vector<int>& sample_sizes) {
  if (sample_sizes.size() < 2) throw ArgumentError("sigma_fill_scaling: need at least two sizes");
  for (std::size_t k = 0; k < sample_sizes.size(); ++k) {
    if (sample_sizes[k] < 1) throw ArgumentError("sigma_fill_scaling: sizes must be positive");
    if (k > 0 && sample_sizes[k] <= sample_sizes[k - 1]) throw ArgumentError("sigma_fill_scaling: sizes must ascend");
  }
  FillScaling out;
  out.sizes = sample_sizes;
  const int probe_count = std::max(8193, 32 * sample_sizes.back() + 1);
  const PointSet<double> probes = box_lattice(Box::unit(1), probe_count);
  for (int n : sample_sizes) {
    const PointSet<double> samples = grid_points(1, n);
    const auto model = PosteriorModel<double>::fit(spec, Dataset<double>::scalar(samples, Vector<double>::Zero(n)));
    out.fill.push_back(fill_distance(samples, probes));
    out.max_sigma.push_back(model.predict(probes).std.maxCoeff());
  }
  const std::size_t k = sample_sizes.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(out.fill[i]);
    my += std::log(out.max_sigma[i]);
  }
  mx /= double(k);
  my /= double(k);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(out.fill[i]) - mx;
    sxy += dx * (std::log(out.max_sigma[i]) - my);
    sxx += dx * dx;
  }
  out.slope = sxy / sxx;
  for (std::size_t i = 1; i < k; ++i)
    out.slopes.push_back((std::log(out.max_sigma[i]) - std::log(out.max_sigma[i - 1])) / (std::log(out.fill[i]) - std::log(out.fill[i - 1])));
  return out;
}

}  // namespace cascade
