#ifndef CASCADE_NETWORKS_HPP
#define CASCADE_NETWORKS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cascade/kernels.hpp"

namespace cascade {

enum class Structure { Chain, MultiOutputChain, FeedForward };

std::string to_string(Structure s);
Structure parse_structure(const std::string& name);

/// (2ε₁/h(0))·h((x−c)/w) with h(z) = exp(−1/(1−‖z‖²)) on the open unit ball.
struct ScaledBump {
  Point center;
  double w = 0.0;
  double eps1 = 0.0;

  double operator()(const Point& x) const;
  Eigen::Index dim() const { return center.size(); }
  /// Exact Lipschitz constant of the radial profile.
  double lipschitz() const;
};

using LayerFunction = std::variant<Expansion<double>, ScaledBump>;

double evaluate_function(const LayerFunction& fn, const Point& x);
Vector<double> evaluate_function(const LayerFunction& fn, const PointSet<double>& points);

/// Extras carried by hard instances.
struct HardMeta {
  double eps = 0.0;
  double eps1 = 0.0;
  double w = 0.0;
  double u = 0.0;
  double u_tilde = 0.0;
  double alpha = 0.0;
  double L_tilde = 0.0;
  double L_eff = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double bump_slope = 0.0;
  Point center;
};

struct NetworkInstance {
  Structure structure = Structure::Chain;
  std::vector<int> dims;                         ///< d_1..d_{m+1}, last is 1
  std::vector<std::vector<LayerFunction>> layers;  ///< layers[i][j]: coordinate j of layer i
  double B = 1.0;
  double L = 1.0;
  KernelSpec kernel;
  std::vector<Box> layer_domains;  ///< input box of each layer
  std::string label;
  std::uint64_t seed = 0;
  std::optional<HardMeta> hard;

  int depth() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return dims.empty() ? 0 : dims.front(); }
  void validate() const;
};

/// inputs[i] is x^(i+1); inputs[0] is the query.
struct Evaluation {
  std::vector<Point> inputs;
  double y = 0.0;

  /// Output of layer i, i.e. inputs[i+1] or the scalar y for the last layer.
  Point layer_output(int i) const;
};

Point evaluate_layer(const NetworkInstance& net, int i, const Point& z);
PointSet<double> evaluate_layer(const NetworkInstance& net, int i, const PointSet<double>& z);
Evaluation evaluate(const NetworkInstance& net, const Point& x);
Vector<double> evaluate_output(const NetworkInstance& net, const PointSet<double>& x);

/// Endpoint-inclusive lattice with `per_dim` points along each axis, in lexicographic order.
PointSet<double> box_lattice(const Box& box, int per_dim);

/// Largest forward-difference gradient norm over a lattice of `box`; a lower-bound estimator.
double estimate_lipschitz(const LayerFunction& fn, const Box& box, int grid_per_dim);
/// Same, for the vector map z ↦ (f_j(z))_j, using the Frobenius norm of the difference Jacobian.
double estimate_lipschitz(const std::vector<LayerFunction>& fns, const Box& box, int grid_per_dim);

/// Coordinatewise range of layer i over a lattice of its domain, padded by 1% of the width.
Box layer_range(const NetworkInstance& net, int i, int grid_per_dim);
/// Unpadded variant.
Box layer_range_raw(const NetworkInstance& net, int i, int grid_per_dim);

/// Lipschitz grid size used by synthesis: 256 for d ≤ 2, 64 for d = 3, 32 beyond.
int lipschitz_grid(int dim);

struct SynthesisOptions {
  std::uint64_t seed = 0;
  Structure structure = Structure::Chain;
  std::vector<int> dims;
  KernelSpec spec;
  double B = 1.0;
  int n_centers = 6;
};

NetworkInstance synthesize_network(const SynthesisOptions& opts);

/// Dims for a structure: chains are [d,1,…,1], others [d,k,…,k,1].
std::vector<int> default_dims(Structure s, int m, int d, int inner_dim = 2);

double bump_value(const Point& x, double eps1, double w, const Point& center);
double needle_value(double z, double u, double B, const KernelSpec& spec);
double needle_scale(double u, double B, const KernelSpec& spec);  ///< L̃
/// Two-center expansion (L̃/2)(k(·,u·e₁) − k(·,−u·e₁)) on R^dim.
Expansion<double> needle_expansion(double u, double B, const KernelSpec& spec, Eigen::Index dim = 1);

struct NeedleChoice {
  double u = 0.0;
  double u_tilde = 0.0;
  double L_tilde = 0.0;
  double r_min = 0.0;  ///< inf of g̃(z)/(L̃z) on (0, ũ]
  double r_max = 0.0;
  double L_eff = 0.0;  ///< r_max·L̃ here; raised to the bump slope by build_hard_instance
  double alpha = 0.0;
};

/// k(u−ũ) − k(u+ũ) − √2·√(k(0) − k(2u))/B.
double condition2_margin(const KernelSpec& spec, double B, double u, double u_tilde);
NeedleChoice needle_constants(const KernelSpec& spec, double B, double u, double u_tilde);
NeedleChoice select_u_utilde(const KernelSpec& spec, double B);

/// ε₁ with g̃^{∘(m−1)}(2ε₁) = 2ε.
double solve_eps1(const KernelSpec& spec, double B, double u, double u_tilde, int m, double eps);
/// Interpolation-norm search for the bump support radius.
double calibrate_bump_width(const KernelSpec& spec, double B, int d, double eps1);

struct HardOptions {
  KernelSpec spec;
  double B = 5.0;
  int m = 2;
  int d = 1;
  double eps = 0.05;
  Structure structure = Structure::Chain;
  std::optional<Point> center;  ///< defaults to the middle of [0,1]^d
  int inner_dim = 2;
};

struct HardInstance {
  NetworkInstance network;
  HardMeta meta;
};

struct HardFamily {
  std::vector<HardInstance> instances;
  int M = 0;
  double w = 0.0;
};

HardInstance build_hard_instance(const HardOptions& opts);
/// Instance on a precomputed (choice, ε₁, w); used to share calibration across a family.
HardInstance build_hard_instance(const HardOptions& opts, const NeedleChoice& choice, double eps1, double w);
HardFamily hard_family(const HardOptions& opts);

}  // namespace cascade

#endif  // CASCADE_NETWORKS_HPP
