#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cascade/confidence.hpp"
#include "cascade/optimizers.hpp"

using namespace cascade;

namespace {

using Model = PosteriorModel<double>;

std::shared_ptr<const Model> shared(Model m) { return std::make_shared<const Model>(std::move(m)); }

NetworkInstance small_network(Structure st, std::uint64_t seed) {
  SynthesisOptions so;
  so.seed = seed;
  so.structure = st;
  so.dims = default_dims(st, 2, 1);
  so.B = 2.0;
  return synthesize_network(so);
}

// Layer posteriors refit from the first t steps of a trace.
std::vector<EnvelopeContext> contexts_from_prefix(const NetworkInstance& net, const Trace& trace, int t) {
  std::vector<EnvelopeContext> out;
  for (int i = 0; i < net.depth(); ++i) {
    const Eigen::Index din = net.dims[i], dout = net.dims[i + 1];
    Dataset<double> data(PointSet<double>(t, din), Matrix<double>(t, dout));
    for (int s = 0; s < t; ++s) {
      const TraceStep& st = trace.steps[s];
      data.points.row(s) = (i == 0 ? st.x : st.intermediates[i - 1]).transpose();
      if (i + 1 < net.depth())
        data.values.row(s) = st.intermediates[i].transpose();
      else
        data.values(s, 0) = st.y;
    }
    out.push_back(EnvelopeContext::make(shared(Model::fit(net.kernel, data)), net.B, net.L));
  }
  return out;
}

}  // namespace

TEST_CASE("envelopes against direct anchor minima") {
  KernelSpec s;
  PointSet<double> X(4, 1);
  X << 0.1, 0.35, 0.6, 0.9;
  // 0.8·k(·, 0.4): norm 0.8 ≤ B, slope 0.8·√3/(e·l) ≈ 2.55 ≤ L.
  Vector<double> y(4);
  for (int j = 0; j < 4; ++j) y(j) = 0.8 * matern_of_distance(s, std::abs(X(j, 0) - 0.4));
  const auto model = shared(Model::fit(s, Dataset<double>::scalar(X, y)));
  const double B = 1.5, L = 3.0;
  const EnvelopeContext ctx = EnvelopeContext::make(model, B, L);
  for (int k = 0; k <= 200; ++k) {
    const Point z = Point::Constant(1, -0.2 + 1.4 * k / 200.0);
    double up = posterior_mean(*model, z) + B * posterior_std(*model, z);
    double lo = posterior_mean(*model, z) - B * posterior_std(*model, z);
    for (int j = 0; j < 4; ++j) {
      const Point a = X.row(j).transpose();
      const double sd = posterior_std(*model, a), mu = posterior_mean(*model, a), dist = (z - a).norm();
      up = std::min(up, mu + B * sd + L * dist);
      lo = std::max(lo, mu - B * sd - L * dist);
    }
    CHECK(std::abs(ucb_env(ctx, z) - up) < 1e-12);
    CHECK(std::abs(lcb_env(ctx, z) - lo) < 1e-12);
    CHECK(lcb_env(ctx, z) <= ucb_env(ctx, z));
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(std::abs(ucb_env(ctx, X.row(j).transpose()) - y(j)) < 1e-5);
    CHECK(std::abs(lcb_env(ctx, X.row(j).transpose()) - y(j)) < 1e-5);
  }
  const EnvelopeContext prior = EnvelopeContext::make(shared(Model::prior(s, 1)), B, L);
  CHECK(ucb_env(prior, Point::Constant(1, 0.4)) == B);
  CHECK(lcb_env(prior, Point::Constant(1, 0.4)) == -B);
}

TEST_CASE("single-layer prior bound is B") {
  KernelSpec s;
  const std::vector<EnvelopeContext> layers{EnvelopeContext::make(shared(Model::prior(s, 1)), 2.0, 4.0)};
  for (double x : {0.0, 0.3, 1.0}) CHECK(propagate_chain(layers, Point::Constant(1, x)).ucb == 2.0);
}

TEST_CASE("evaluation sets") {
  PropagationOptions o;
  o.G = 8;
  const Box iv(Point::Constant(1, 0.0), Point::Constant(1, 1.0));
  PointSet<double> obs(2, 1);
  obs << 0.33, 4.0;
  const EvaluationSet es = evaluation_set(iv, obs, o);
  CHECK(es.points.rows() == 8 + 2 + 1);
  CHECK(es.points.col(0).minCoeff() == 0.0);
  CHECK(es.points.col(0).maxCoeff() == 1.0);
  CHECK(std::abs(es.cover - 1.0 / 16.0) < 1e-15);
}

TEST_CASE("feed-forward propagation with unit widths matches the chain") {
  const NetworkInstance net = small_network(Structure::Chain, 5);
  RunConfig cfg;
  cfg.T = 12;
  cfg.candidate_grid = 64;
  const RunResult r = run_gpn_ucb(net, cfg);
  const auto ctx = contexts_from_prefix(net, r.trace, 8);
  for (int k = 0; k <= 20; ++k) {
    const Point x = Point::Constant(1, k / 20.0);
    const ChainPropagation c = propagate_chain(ctx, x);
    const Propagation f = propagate_ffn(ctx, x);
    CHECK(c.ucb == f.ucb);
    for (std::size_t i = 0; i < c.regions.size(); ++i) {
      CHECK(c.regions[i].lo == f.regions[i + 1].lo(0));
      CHECK(c.regions[i].hi == f.regions[i + 1].hi(0));
    }
  }
}

TEST_CASE("bounds contain the network along runs") {
  for (Structure st : {Structure::Chain, Structure::MultiOutputChain, Structure::FeedForward}) {
    const NetworkInstance net = small_network(st, 11);
    RunConfig cfg;
    cfg.T = 15;
    cfg.candidate_grid = st == Structure::Chain ? 128 : 16;
    cfg.region.G = st == Structure::Chain ? 64 : 8;
    const RunResult r = run_gpn_ucb(net, cfg);
    REQUIRE(r.trace.complete);
    std::vector<EnvelopeContext> ctx;
    for (const auto& m : r.models) ctx.push_back(EnvelopeContext::make(m, net.B, net.L));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet<double> xs(60, net.input_dim());
    for (Eigen::Index k = 0; k < xs.size(); ++k) xs(k) = u(rng);
    const std::vector<Propagation> props = propagate(ctx, xs, cfg.region);
    const std::vector<double> cheap = ucb_upper_bounds(ctx, xs, cfg.region);
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
      const Evaluation ev = evaluate(net, xs.row(k).transpose());
      CHECK(props[k].ucb >= ev.y - 1e-9);
      CHECK(cheap[k] >= props[k].ucb);
      for (std::size_t i = 1; i < ev.inputs.size(); ++i) CHECK(props[k].regions[i].contains(ev.inputs[i], 1e-9));
    }
  }
}

TEST_CASE("selected points maximise the unpruned bound") {
  for (Structure st : {Structure::Chain, Structure::FeedForward}) {
    const NetworkInstance net = small_network(st, 23);
    RunConfig cfg;
    cfg.T = 10;
    cfg.candidate_grid = st == Structure::Chain ? 96 : 12;
    cfg.region.G = 16;
    const RunResult r = run_gpn_ucb(net, cfg);
    const PointSet<double> cand = candidate_points(net.input_dim(), cfg.candidate_grid);
    for (int t = 1; t < cfg.T; ++t) {
      const auto ctx = contexts_from_prefix(net, r.trace, t);
      const std::vector<Propagation> props = propagate(ctx, cand, cfg.region);
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& p : props) best = std::max(best, p.ucb);
      CHECK(std::abs(r.trace.steps[t].ucb - best) < 1e-12);
    }
  }
}

TEST_CASE("region grid refinement") {
  // Padding is L·cover, so the coarse/fine gap scales with L; a long lengthscale keeps L small.
  SynthesisOptions so;
  so.seed = 8;
  so.dims = {1, 1, 1};
  so.spec.lengthscale = 1.0;
  so.B = 0.5;
  const NetworkInstance net = synthesize_network(so);
  RunConfig cfg;
  cfg.T = 10;
  cfg.candidate_grid = 64;
  const RunResult r = run_gpn_ucb(net, cfg);
  std::vector<EnvelopeContext> ctx;
  for (const auto& m : r.models) ctx.push_back(EnvelopeContext::make(m, net.B, net.L));
  PropagationOptions coarse, fine;
  coarse.G = 64;
  fine.G = 4096;
  double worst = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const Point x = Point::Constant(1, k / 40.0);
    const double a = propagate_chain(ctx, x, coarse).ucb, b = propagate_chain(ctx, x, fine).ucb;
    CHECK(b <= a + 1e-12);
    worst = std::max(worst, a - b);
  }
  MESSAGE("L = " << net.L << ", max ucb(G=64) - ucb(G=4096) = " << worst);
  CHECK(worst <= 1e-3);
}
