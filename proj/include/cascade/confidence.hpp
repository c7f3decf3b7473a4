#ifndef CASCADE_CONFIDENCE_HPP
#define CASCADE_CONFIDENCE_HPP

#include <memory>
#include <vector>

#include "cascade/gp_posterior.hpp"

namespace cascade {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

enum class EnvelopePolicy { Anchored, Plain };

/// One layer's posterior with its B, L and cached bounds at the observed inputs.
struct EnvelopeContext {
  std::shared_ptr<const PosteriorModel<double>> model;
  double B = 1.0;
  double L = 1.0;
  PointSet<double> anchors;    ///< observed inputs
  Matrix<double> anchor_upper; ///< μ + Bσ at anchors, one column per output
  Matrix<double> anchor_lower;

  static EnvelopeContext make(std::shared_ptr<const PosteriorModel<double>> model, double B, double L);
  Eigen::Index outputs() const { return model->outputs(); }
  Eigen::Index dim() const { return model->dim(); }
};

/// min over anchors (observed inputs and z) of μ(z′) + Bσ(z′) + L‖z − z′‖.
double ucb_env(const EnvelopeContext& ctx, const Point& z, Eigen::Index output = 0);
double lcb_env(const EnvelopeContext& ctx, const Point& z, Eigen::Index output = 0);

struct PropagationOptions {
  int G = 64;                   ///< interval grid size; box lattices use min(G, ⌊max_box_points^{1/d}⌋) per axis
  int max_box_points = 4096;
  EnvelopePolicy policy = EnvelopePolicy::Anchored;
};

struct Propagation {
  std::vector<Box> regions;  ///< regions[i] = Δ^(i+1); regions[0] is the query itself
  double ucb = 0.0;
};

/// Evaluation set of a region: a uniform grid (cell-centred plus endpoints for intervals, an
/// endpoint-inclusive lattice for boxes) joined with the observed inputs inside it. `cover` is
/// a radius within which every point of the region has an evaluation point.
struct EvaluationSet {
  PointSet<double> points;
  double cover = 0.0;
};
EvaluationSet evaluation_set(const Box& region, const PointSet<double>& observed, const PropagationOptions& opts);

/// Region propagation for a batch of queries, one result per row of `xs`. Envelopes are
/// evaluated with the region's evaluation points as extra anchors; regions and the final bound
/// are widened by L·cover and clipped to [−B, B].
std::vector<Propagation> propagate(const std::vector<EnvelopeContext>& layers, const PointSet<double>& xs,
                                   const PropagationOptions& opts = {});

/// Cheap bounds with ucb_upper_bounds(..)[c] ≥ propagate(..)[c].ucb for every query, built from
/// the observed anchors alone. Lets a caller skip exact propagation for dominated candidates.
std::vector<double> ucb_upper_bounds(const std::vector<EnvelopeContext>& layers, const PointSet<double>& xs,
                                     const PropagationOptions& opts = {});

struct ChainPropagation {
  std::vector<Interval> regions;
  double ucb = 0.0;
};

ChainPropagation propagate_chain(const std::vector<EnvelopeContext>& layers, const Point& x,
                                 const PropagationOptions& opts = {});
/// Vector layers: each coordinate is bounded by the box Bσ(z′) + L‖z − z′‖ around μ(z′), which
/// over-approximates the ball union and is also the product region of a feed-forward network.
Propagation propagate_multi(const std::vector<EnvelopeContext>& layers, const Point& x,
                            const PropagationOptions& opts = {});
Propagation propagate_ffn(const std::vector<EnvelopeContext>& layers, const Point& x,
                          const PropagationOptions& opts = {});

}  // namespace cascade

#endif  // CASCADE_CONFIDENCE_HPP
