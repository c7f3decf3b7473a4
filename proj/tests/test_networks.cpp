#include <doctest.h>

#include <cmath>
#include <random>

#include "cascade/networks.hpp"

using namespace cascade;

namespace {

KernelSpec matern(double nu, double l) {
  KernelSpec s;
  s.nu = nu;
  s.lengthscale = l;
  return s;
}

Expansion<double> single(double center, double coeff, const KernelSpec& s) {
  PointSet<double> c(1, 1);
  c << center;
  return Expansion<double>(c, Vector<double>::Constant(1, coeff), s);
}

NetworkInstance hand_chain(std::vector<Expansion<double>> fs, const KernelSpec& s) {
  NetworkInstance net;
  net.structure = Structure::Chain;
  net.dims.assign(fs.size() + 1, 1);
  for (auto& f : fs) net.layers.push_back({LayerFunction{f}});
  net.B = 2.0;
  net.L = 5.0;
  net.kernel = s;
  net.layer_domains.push_back(Box::unit(1));
  for (std::size_t i = 1; i < fs.size(); ++i) net.layer_domains.push_back(Box(Point::Constant(1, -1.0), Point::Constant(1, 1.0)));
  return net;
}

}  // namespace

TEST_CASE("evaluation of hand-built chains") {
  const KernelSpec s = matern(1.5, 0.2);
  const NetworkInstance zero = hand_chain({Expansion<double>::zero(1, s), Expansion<double>::zero(1, s)}, s);
  const Evaluation ez = evaluate(zero, Point::Constant(1, 0.7));
  CHECK(ez.y == 0.0);
  CHECK(ez.inputs[1](0) == 0.0);

  const NetworkInstance one = hand_chain({single(0.2, 0.8, s)}, s);
  const Evaluation e1 = evaluate(one, Point::Constant(1, 0.5));
  CHECK(e1.inputs.size() == 1);
  CHECK(e1.y == 0.8 * matern_of_distance(s, 0.3));

  const NetworkInstance two = hand_chain({single(0.5, 1.0, s), single(0.3, 1.0, s)}, s);
  const Evaluation e2 = evaluate(two, Point::Constant(1, 0.5));
  CHECK(e2.inputs[1](0) == 1.0);
  CHECK(std::abs(e2.y - matern_of_distance(s, 0.7)) < 1e-15);
  CHECK_THROWS_AS(evaluate(two, Point::Constant(2, 0.5)), ArgumentError);

  PointSet<double> xs(3, 1);
  xs << 0.0, 0.5, 0.9;
  const Vector<double> batch = evaluate_output(two, xs);
  for (int r = 0; r < 3; ++r) CHECK(std::abs(batch(r) - evaluate(two, Point::Constant(1, xs(r, 0))).y) < 1e-15);
}

TEST_CASE("lipschitz estimates") {
  const KernelSpec s = matern(1.5, 1.0);
  const Box box(Point::Constant(1, -2.0), Point::Constant(1, 2.0));
  CHECK(estimate_lipschitz(LayerFunction{Expansion<double>::zero(1, s)}, box, 256) == 0.0);
  const double coarse = estimate_lipschitz(LayerFunction{single(0.0, 1.0, s)}, box, 256);
  const double fine = estimate_lipschitz(LayerFunction{single(0.0, 1.0, s)}, box, 4096);
  // sup |d/dr (1+√3r)e^{−√3r}| = √3/e at r = 1/√3.
  const double exact = std::sqrt(3.0) / std::exp(1.0);
  CHECK(std::abs(coarse - fine) <= 0.05 * fine);
  CHECK(fine <= exact + 1e-12);
  CHECK(fine >= 0.99 * exact);
  const double scaled = estimate_lipschitz(LayerFunction{single(0.0, -3.0, s)}, box, 256);
  CHECK(std::abs(scaled - 3.0 * coarse) < 1e-12);
}

TEST_CASE("layer ranges") {
  const KernelSpec s = matern(1.5, 0.2);
  const NetworkInstance zero = hand_chain({Expansion<double>::zero(1, s)}, s);
  const Box z = layer_range(zero, 0, 64);
  CHECK(z.lo(0) <= 0.0);
  CHECK(z.hi(0) >= 0.0);
  CHECK(z.width()(0) < 1e-9);

  const NetworkInstance bump = hand_chain({single(0.3, 0.9, s)}, s);
  const Box raw = layer_range_raw(bump, 0, 4097);
  CHECK(std::abs(raw.hi(0) - 0.9) < 1e-6);
  CHECK(std::abs(raw.lo(0) - 0.9 * matern_of_distance(s, 0.7)) < 1e-12);
  const Box padded = layer_range(bump, 0, 4097);
  CHECK(std::abs((padded.hi(0) - raw.hi(0)) - 0.01 * raw.width()(0)) < 1e-12);
  const Box coarse = layer_range_raw(bump, 0, 33);
  CHECK(raw.lo(0) <= coarse.lo(0));
  CHECK(raw.hi(0) >= coarse.hi(0));
}

TEST_CASE("synthesized networks") {
  for (Structure st : {Structure::Chain, Structure::MultiOutputChain, Structure::FeedForward}) {
    SynthesisOptions so;
    so.seed = 17;
    so.structure = st;
    so.dims = default_dims(st, 2, 1);
    so.spec = matern(1.5, 0.2);
    so.B = 2.0;
    const NetworkInstance net = synthesize_network(so);
    const NetworkInstance again = synthesize_network(so);
    CHECK(net.L == again.L);
    CHECK(net.L > 1.0);
    CHECK(net.layer_domains[0] == Box::unit(1));
    for (int i = 0; i < net.depth(); ++i) {
      // Multi-output layers share the budget through the joint norm.
      std::vector<double> norms;
      for (const auto& fn : net.layers[i]) norms.push_back(rkhs_norm(std::get<Expansion<double>>(fn)));
      double joint = 0.0;
      for (double n : norms) joint += n * n;
      joint = std::sqrt(joint);
      if (st == Structure::MultiOutputChain) {
        CHECK(joint <= so.B + 1e-9);
        CHECK(joint >= 0.5 * so.B - 1e-9);
      } else {
        for (double n : norms) {
          CHECK(n <= so.B + 1e-9);
          CHECK(n >= 0.5 * so.B - 1e-9);
        }
      }
      CHECK(estimate_lipschitz(net.layers[i], net.layer_domains[i], 64) <= net.L);
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      const Evaluation ev = evaluate(net, Point::Constant(1, u(rng)));
      CHECK(ev.y == evaluate(again, ev.inputs[0]).y);
      CHECK(net.layer_domains[1].contains(ev.inputs[1], 0.0));
    }
  }
  SynthesisOptions one;
  one.seed = 3;
  one.dims = {1, 1};
  one.spec = matern(2.5, 0.2);
  one.B = 3.0;
  one.n_centers = 1;
  const NetworkInstance net = synthesize_network(one);
  const auto& e = std::get<Expansion<double>>(net.layers[0][0]);
  CHECK(e.size() == 1);
  CHECK(std::abs(std::abs(e.coeffs(0)) - rkhs_norm(e)) < 1e-12);
  CHECK(std::abs(e.coeffs(0)) >= 1.5 - 1e-12);
  CHECK(std::abs(e.coeffs(0)) <= 3.0 + 1e-12);
}

TEST_CASE("bump values") {
  const Point c = Point::Constant(2, 0.5);
  CHECK(std::abs(bump_value(c, 0.05, 0.1, c) - 0.1) < 1e-15);
  Point edge = c;
  edge(0) += 0.1;
  CHECK(bump_value(edge, 0.05, 0.1, c) == 0.0);
  Point mid = c;
  mid(0) += 0.1 / std::sqrt(2.0);
  CHECK(std::abs(bump_value(mid, 1.0, 0.1, c) - 2.0 / std::exp(1.0)) < 1e-12);
  const ScaledBump b{c, 0.1, 0.05};
  CHECK(b(mid) == bump_value(mid, 0.05, 0.1, c));
}

TEST_CASE("needle layer") {
  const KernelSpec s = matern(1.5, 1.0);
  const double B = 5.0, u = 0.5;
  CHECK(needle_value(0.0, u, B, s) == 0.0);
  const Expansion<double> g = needle_expansion(u, B, s);
  CHECK(std::abs(rkhs_norm(g) - B) < 1e-9);
  const double Lt = std::sqrt(2.0) * B / std::sqrt(1.0 - matern_of_distance(s, 2.0 * u));
  CHECK(std::abs(needle_scale(u, B, s) - Lt) < 1e-12);
  double prev = 0.0;
  for (int k = 1; k <= 300; ++k) {
    const double z = 0.3 * k / 300.0;
    const double v = needle_value(z, u, B, s);
    CHECK(v > prev);
    CHECK(std::abs(v - 0.5 * Lt * (matern_of_distance(s, u - z) - matern_of_distance(s, u + z))) < 1e-12);
    prev = v;
  }
  CHECK(std::abs(g(Point::Constant(1, 0.2)) - needle_value(0.2, u, B, s)) < 1e-12);
}

TEST_CASE("needle parameter selection") {
  const KernelSpec s = matern(1.5, 1.0);
  const double k = [&](double r) { return matern_of_distance(s, r); }(0.2);
  const double margin = k - matern_of_distance(s, 0.8) - std::sqrt(2.0) * std::sqrt(1.0 - matern_of_distance(s, 1.0)) / 5.0;
  CHECK(margin >= 0.0);
  CHECK(std::abs(condition2_margin(s, 5.0, 0.5, 0.3) - margin) < 1e-15);
  const NeedleChoice c = select_u_utilde(s, 5.0);
  CHECK(c.u == 0.5);
  CHECK(c.u_tilde == 0.3);
  CHECK(c.alpha * c.L_eff > 1.0);
  CHECK(c.alpha <= 1.0);
  const NeedleChoice doubled = select_u_utilde(s, 10.0);
  CHECK(condition2_margin(s, 10.0, doubled.u, doubled.u_tilde) >= 0.0);
  CHECK(condition2_margin(s, 10.0, 0.5, 0.3) >= 0.0);
  CHECK_THROWS_AS(select_u_utilde(s, 0.01), InfeasibleError);
}

TEST_CASE("amplitude solving") {
  const KernelSpec s = matern(1.5, 0.2);
  const NeedleChoice c = select_u_utilde(s, 5.0);
  CHECK(solve_eps1(s, 5.0, c.u, c.u_tilde, 1, 0.05) == 0.05);
  for (int m : {2, 3}) {
    const double e1 = solve_eps1(s, 5.0, c.u, c.u_tilde, m, 0.05);
    double z = 2.0 * e1;
    for (int j = 1; j < m; ++j) z = needle_value(z, c.u, 5.0, s);
    CHECK(std::abs(z - 0.1) <= 1e-10);
    CHECK(e1 >= 0.05 / std::pow(c.L_eff, m - 1) * (1.0 - 1e-9));
    CHECK(e1 <= 0.05 / std::pow(c.alpha * c.L_eff, m - 1) * (1.0 + 1e-9));
  }
  CHECK_THROWS_AS(solve_eps1(s, 5.0, c.u, c.u_tilde, 2, 5.0), InfeasibleError);
}

TEST_CASE("hard instances") {
  for (Structure st : {Structure::Chain, Structure::MultiOutputChain, Structure::FeedForward}) {
    HardOptions o;
    o.structure = st;
    o.m = 3;
    o.spec = matern(1.5, 0.2);
    const HardInstance h = build_hard_instance(o);
    const HardMeta& m = h.meta;
    CHECK(std::abs(evaluate(h.network, m.center).y - 0.1) < 1e-3);
    CHECK(0.0 < m.eps1);
    CHECK(m.eps1 < m.eps);
    CHECK(0.0 < m.u_tilde);
    CHECK(m.u_tilde < m.u);
    CHECK(m.alpha * m.L_eff > 1.0);
    for (double sign : {-1.0, 1.0}) {
      const Evaluation far = evaluate(h.network, Point(m.center.array() + sign * 1.5 * m.w));
      CHECK(far.y == 0.0);
    }
    for (double off : {0.0, 0.3, 0.7}) {
      const Evaluation ev = evaluate(h.network, Point(m.center.array() + off * m.w));
      for (std::size_t i = 1; i < ev.inputs.size(); ++i)
        for (Eigen::Index j = 1; j < ev.inputs[i].size(); ++j) CHECK(ev.inputs[i](j) == 0.0);
    }
  }
}

TEST_CASE("hard families") {
  HardOptions o;
  o.spec = matern(1.5, 0.2);
  const HardFamily fam = hard_family(o);
  const int n = int(std::floor(1.0 / (2.0 * fam.w)));
  CHECK(fam.M == n);
  REQUIRE(fam.instances.size() == std::size_t(n));
  for (int k = 0; k < n; ++k) CHECK(std::abs(fam.instances[k].meta.center(0) - (k + 0.5) / n) < 1e-12);
  const PointSet<double> probes = box_lattice(Box::unit(1), 20001);
  const Vector<double> a = evaluate_output(fam.instances[3].network, probes);
  const Vector<double> b = evaluate_output(fam.instances[4].network, probes);
  CHECK((a.array() * b.array()).abs().maxCoeff() == 0.0);
  CHECK(a.maxCoeff() > 0.0);
  HardOptions big = o;
  big.eps = 2.0;
  CHECK_THROWS(hard_family(big));
}
