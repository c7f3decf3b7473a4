#include <doctest.h>

#include <cmath>

#include "cascade/optimizers.hpp"

using namespace cascade;

namespace {

NetworkInstance network(Structure st, int m, std::uint64_t seed) {
  SynthesisOptions so;
  so.seed = seed;
  so.structure = st;
  so.dims = default_dims(st, m, 1);
  so.B = 2.0;
  return synthesize_network(so);
}

bool same_trace(const Trace& a, const Trace& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const TraceStep &s = a.steps[k], &u = b.steps[k];
    if (s.x != u.x || s.y != u.y || s.r != u.r || s.R != u.R) return false;
    if (!(s.ucb == u.ucb || (std::isnan(s.ucb) && std::isnan(u.ucb)))) return false;
  }
  return a.grid_optimum == b.grid_optimum && a.oracle_optimum == b.oracle_optimum;
}

}  // namespace

TEST_CASE("cell-centred sample grids") {
  const PointSet<double> g1 = grid_points(1, 4);
  REQUIRE(g1.rows() == 4);
  const double want[] = {0.125, 0.375, 0.625, 0.875};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(g1(k, 0) - want[k]) < 1e-15);
  const PointSet<double> g2 = grid_points(2, 5);
  REQUIRE(g2.rows() == 4);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 2; ++j) CHECK((std::abs(g2(k, j) - 0.25) < 1e-15 || std::abs(g2(k, j) - 0.75) < 1e-15));
  CHECK(grid_points(3, 27).rows() == 27);
  CHECK(grid_points(3, 26).rows() == 8);
  CHECK(grid_points(2, 1).rows() == 1);
  CHECK_THROWS_AS(grid_points(1, 0), ArgumentError);
}

TEST_CASE("candidate lattices") {
  const PointSet<double> c = candidate_points(2, 3);
  REQUIRE(c.rows() == 9);
  CHECK(c.row(0).isZero());
  CHECK(c(8, 0) == 1.0);
  CHECK(c(8, 1) == 1.0);
  CHECK(default_candidate_grid(1) == 512);
  CHECK(oracle_grid(2) == 256);
}

TEST_CASE("first query under the prior is the first candidate") {
  for (Structure st : {Structure::Chain, Structure::FeedForward}) {
    const NetworkInstance net = network(st, 2, 4);
    RunConfig cfg;
    cfg.T = 1;
    cfg.candidate_grid = 32;
    const RunResult r = run_gpn_ucb(net, cfg);
    REQUIRE(r.trace.steps.size() == 1);
    CHECK(r.trace.steps[0].x.isZero());
  }
}

TEST_CASE("single-layer grey-box runs equal black-box runs") {
  const NetworkInstance net = network(Structure::Chain, 1, 9);
  RunConfig cfg;
  cfg.T = 25;
  cfg.candidate_grid = 128;
  const RunResult grey = run_gpn_ucb(net, cfg);
  cfg.algo = Algorithm::BlackboxUcb;
  const RunResult black = run_blackbox_ucb(net, cfg);
  CHECK(same_trace(grey.trace, black.trace));
}

TEST_CASE("runs are deterministic") {
  for (Algorithm a : {Algorithm::GpnUcb, Algorithm::BlackboxUcb, Algorithm::Nonadaptive}) {
    const NetworkInstance net = network(Structure::Chain, 2, 12);
    RunConfig cfg;
    cfg.algo = a;
    cfg.T = 16;
    cfg.candidate_grid = 64;
    CHECK(same_trace(run(net, cfg).trace, run(net, cfg).trace));
  }
}

TEST_CASE("regret bookkeeping") {
  const NetworkInstance net = network(Structure::Chain, 2, 3);
  RunConfig cfg;
  cfg.T = 20;
  cfg.candidate_grid = 64;
  const Trace tr = run_gpn_ucb(net, cfg).trace;
  double R = 0.0;
  for (const auto& s : tr.steps) {
    CHECK(s.y == evaluate(net, s.x).y);
    CHECK(s.r == tr.grid_optimum - s.y);
    CHECK(s.r >= 0.0);
    R += s.r;
    CHECK(s.R == R);
  }
  CHECK(tr.oracle_optimum >= tr.grid_optimum);
}

TEST_CASE("composite means chain layer means") {
  const NetworkInstance net = network(Structure::Chain, 3, 21);
  RunConfig cfg;
  cfg.algo = Algorithm::Nonadaptive;
  cfg.T = 8;
  const RunResult r = run_nonadaptive(net, cfg);
  for (double x : {0.0, 0.37, 0.81, 1.0}) {
    Point z = Point::Constant(1, x);
    Point zp = z;
    for (std::size_t i = 0; i < r.models.size(); ++i) {
      z = Point::Constant(1, posterior_mean(*r.models[i], z));
      zp = Point::Constant(1, posterior_mean(*r.models[i], zp));
      if (i + 1 < r.models.size()) zp = net.layer_domains[i + 1].clamp(zp);
    }
    CHECK(composite_mean(r.models, net.structure, Point::Constant(1, x)) == z(0));
    CHECK(projected_composite_mean(r.models, net.structure, Point::Constant(1, x), net.layer_domains) == zp(0));
  }
}

TEST_CASE("non-adaptive runs return the composite-mean maximiser") {
  const NetworkInstance net = network(Structure::Chain, 2, 6);
  RunConfig cfg;
  cfg.algo = Algorithm::Nonadaptive;
  cfg.T = 16;
  cfg.candidate_grid = 256;
  const RunResult r = run_nonadaptive(net, cfg);
  const Trace& tr = r.trace;
  REQUIRE(tr.x_star);
  CHECK(tr.steps.size() == 16);
  CHECK(tr.steps[0].x(0) == 1.0 / 32.0);
  const PointSet<double> cand = candidate_points(1, 256);
  double best = -1e300;
  Eigen::Index arg = 0;
  for (Eigen::Index k = 0; k < cand.rows(); ++k) {
    const double v = composite_mean(r.models, net.structure, cand.row(k).transpose());
    if (v > best) best = v, arg = k;
  }
  CHECK((*tr.x_star)(0) == cand(arg, 0));
  CHECK(tr.x_star_value == evaluate(net, *tr.x_star).y);
  CHECK(std::abs(tr.simple_regret - std::max(0.0, tr.oracle_optimum - tr.x_star_value)) < 1e-15);
  for (const auto& s : tr.steps) CHECK(std::isnan(s.ucb));
}

TEST_CASE("argument checks") {
  const NetworkInstance net = network(Structure::Chain, 2, 1);
  RunConfig cfg;
  cfg.T = 0;
  CHECK_THROWS_AS(run_gpn_ucb(net, cfg), ArgumentError);
  CHECK_THROWS_AS(parse_algorithm("annealing"), ArgumentError);
  CHECK(parse_algorithm(to_string(Algorithm::NonadaptiveProjected)) == Algorithm::NonadaptiveProjected);
}
