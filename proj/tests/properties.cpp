// Property checks that run standalone: algebra identities, symmetries of the
// collected beliefs, damping, the Q -> v round trip, slope checks and
// reproducibility. Every bound is fixed; nothing here is tuned per run.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "supplybp/bp_engine.hpp"
#include "supplybp/experiment.hpp"
#include "supplybp/gas.hpp"
#include "supplybp/gaussian.hpp"

using namespace supplybp;
using doctest::Approx;

TEST_SUITE_BEGIN("gaussian");

TEST_CASE("product2 and quotient2") {
  const Gaussian2 g{{0.3, -1.2}, {2.0, 0.5, 1.0}};
  const auto wide = product2({{0, 0}, Sym2::diag(1e6, 1e6)}, g);
  CHECK(wide.mean[0] == Approx(g.mean[0]).epsilon(1e-5));
  CHECK(wide.mean[1] == Approx(g.mean[1]).epsilon(1e-5));
  CHECK(wide.cov.xy == Approx(g.cov.xy).epsilon(1e-5));

  const auto half = product2(g, g);
  CHECK(half.cov.xx == Approx(1.0));
  CHECK(half.cov.xy == Approx(0.25));
  CHECK(half.cov.yy == Approx(0.5));
  CHECK(half.mean[0] == Approx(0.3));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1), d(0.5, 3);
  for (int k = 0; k < 500; ++k) {
    const double ax = d(rng), ay = d(rng), bx = d(rng), by = d(rng);
    const Gaussian2 a{{u(rng), u(rng)}, {ax, 0.5 * u(rng) * std::sqrt(ax * ay), ay}};
    const Gaussian2 b{{u(rng), u(rng)}, {bx, 0.5 * u(rng) * std::sqrt(bx * by), by}};
    const auto back = quotient2(product2(a, b), b);
    CHECK(std::fabs(back.mean[0] - a.mean[0]) < 1e-9);
    CHECK(std::fabs(back.mean[1] - a.mean[1]) < 1e-9);
    CHECK(std::fabs(back.cov.xx - a.cov.xx) < 1e-9);
    CHECK(std::fabs(back.cov.xy - a.cov.xy) < 1e-9);
    CHECK(std::fabs(back.cov.yy - a.cov.yy) < 1e-9);
  }
}

TEST_CASE("CondGaussian2 matches the joint form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1), d(0.5, 3);
  for (int k = 0; k < 200; ++k) {
    const double vx = d(rng), vy = d(rng);
    const Gaussian2 g{{u(rng), u(rng)}, {vx, 0.8 * u(rng) * std::sqrt(vx * vy), vy}};
    const auto c = CondGaussian2::from_joint(g);
    const auto back = c.joint();
    CHECK(std::fabs(back.cov.xx - g.cov.xx) < 1e-12);
    CHECK(std::fabs(back.cov.xy - g.cov.xy) < 1e-12);
    CHECK(std::fabs(back.cov.yy - g.cov.yy) < 1e-12);

    const auto r = c.reversed().joint();
    CHECK(std::fabs(r.cov.xx - g.cov.yy) < 1e-12);
    CHECK(std::fabs(r.cov.xy - g.cov.xy) < 1e-12);
    CHECK(std::fabs(r.mean[0] - g.mean[1]) < 1e-12);

    const auto diff = c.difference();
    CHECK(std::fabs(diff.variance - (g.cov.xx + g.cov.yy - 2 * g.cov.xy)) < 1e-12);

    // observing z = c0 x0 + c1 x1 with noise s2 equals a precision update
    const double c0 = u(rng), c1 = u(rng) + 2.0, z = u(rng), s2 = d(rng);
    const auto obs = observe(c, c0, c1, z, s2).joint();
    Sym2 p = invert2x2(g.cov);
    const Vec2 h0 = mul(p, g.mean);
    p.xx += c0 * c0 / s2;
    p.xy += c0 * c1 / s2;
    p.yy += c1 * c1 / s2;
    const auto ref = from_information(p, {h0[0] + c0 * z / s2, h0[1] + c1 * z / s2});
    CHECK(std::fabs(obs.mean[0] - ref.mean[0]) < 1e-10);
    CHECK(std::fabs(obs.mean[1] - ref.mean[1]) < 1e-10);
    CHECK(std::fabs(obs.cov.xy - ref.cov.xy) < 1e-10);

    const Gaussian2 h{{u(rng), u(rng)}, {vy, 0.3 * std::sqrt(vx * vy), vx}};
    const auto prod = product(c, CondGaussian2::from_joint(h)).joint();
    const auto pref = product2(g, h);
    CHECK(std::fabs(prod.mean[0] - pref.mean[0]) < 1e-10);
    CHECK(std::fabs(prod.mean[1] - pref.mean[1]) < 1e-10);
    CHECK(std::fabs(prod.cov.xx - pref.cov.xx) < 1e-10);
    CHECK(std::fabs(prod.cov.xy - pref.cov.xy) < 1e-10);
    CHECK(std::fabs(prod.cov.yy - pref.cov.yy) < 1e-10);
  }
}

TEST_SUITE_END();
TEST_SUITE_BEGIN("engine");

TEST_CASE("damping spot values") {
  CHECK(damp_value(false, 2.0, 4.0) == 3.0);
  CHECK(damp_value(true, 2.0, 4.0) == 4.0);
  CHECK(damp_value(false, -1.0, 1.0) == 0.0);
}

TEST_CASE("damping coin is reproducible and roughly fair") {
  int heads = 0;
  for (std::uint64_t m = 0; m < 10000; ++m) {
    const bool c = damping_coin(42, m, 7);
    CHECK(c == damping_coin(42, m, 7));
    heads += c;
  }
  CHECK(heads > 4800);
  CHECK(heads < 5200);
  int differ = 0;
  for (std::uint64_t m = 0; m < 1000; ++m) differ += damping_coin(1, m, 1) != damping_coin(2, m, 1);
  CHECK(differ > 400);
}

TEST_CASE("Ff flow antisymmetry and Fc flip symmetry every sweep") {
  const auto net = testing::shared(load_network(testing::fixture("ieee300.json")));
  Scenario sc;
  sc.seed = 3;
  const auto inst = make_se_instance(net, truth_angles(*net), sc);

  const auto ff = build_ff(inst.spec);
  auto st = init_messages(ff);
  for (std::size_t t = 1; t <= 20; ++t) {
    st = sweep(ff, st, {}, t);
    const auto beliefs = collect_link_beliefs(ff, st);
    for (std::size_t k = 0; k < net->num_links(); ++k) {
      const auto& lf = inst.spec->link[k];
      const auto pf = net->from_port(k), pt = net->to_port(k);
      // belief over the flow leaving the to-vertex, built from that side
      const Gaussian1 from_side{-st.flow_out[pf].mean, st.flow_out[pf].variance};
      const auto rev = product1(product1(st.flow_out[pt], from_side), Gaussian1{-lf.z_f, lf.sigma2_f});
      CHECK(testing::close(rev.mean, -beliefs.flow[k].mean, 1e-12));
      CHECK(testing::close(rev.variance, beliefs.flow[k].variance, 1e-12));
    }
  }

  const auto fc = build_fc(inst.spec);
  auto sc2 = init_messages(fc);
  for (std::size_t t = 1; t <= 20; ++t) {
    sc2 = sweep(fc, sc2, {}, t);
    const auto beliefs = collect_link_beliefs(fc, sc2);
    for (std::size_t k = 0; k < net->num_links(); ++k) {
      const auto& lf = inst.spec->link[k];
      const auto pf = net->from_port(k), pt = net->to_port(k);
      const auto other = observe(sc2.pair_out[pf], lf.c_from, lf.c_to, lf.z_f, lf.sigma2_f).reversed();
      const auto rev = flip(product(sc2.pair_out[pt], other).joint());
      const auto& b = beliefs.pair[k];
      CHECK(testing::close(rev.mean[0], b.mean[0], 1e-9));
      CHECK(testing::close(rev.mean[1], b.mean[1], 1e-9));
      CHECK(testing::close(rev.cov.xx, b.cov.xx, 1e-9));
      CHECK(testing::close(rev.cov.yy, b.cov.yy, 1e-9));
    }
  }
}

TEST_CASE("runs are bit-reproducible") {
  const auto net = testing::shared(load_network(testing::fixture("ieee300.json")));
  Scenario sc;
  sc.seed = 5;
  const auto inst = make_se_instance(net, truth_angles(*net), sc);
  const auto fg = build_fv(inst.spec);
  BpOptions opts{60, 1e-9, Damping::coin(17), StopRule::SweepDelta};
  const auto a = run(fg, opts);
  const auto b = run(fg, opts);
  REQUIRE(a.trace.sweeps() == b.trace.sweeps());
  for (std::size_t r = 0; r < a.trace.sweeps(); ++r) CHECK(a.trace.records[r].belief_delta == b.trace.records[r].belief_delta);
  for (std::size_t k = 0; k < a.beliefs.diff.size(); ++k) CHECK(a.beliefs.diff[k] == b.beliefs.diff[k]);

  opts.damping = Damping::coin(18);
  const auto c = run(fg, opts);
  bool any = false;
  for (std::size_t k = 0; k < a.beliefs.diff.size(); ++k) any = any || !(a.beliefs.diff[k] == c.beliefs.diff[k]);
  CHECK(any);
}

TEST_SUITE_END();
TEST_SUITE_BEGIN("gas");

TEST_CASE("linearization matches finite differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> a(10, 500), v(1500, 3500);
  for (int k = 0; k < 1000; ++k) {
    const double ak = a(rng), vi = v(rng), vj = v(rng);
    if (std::fabs(vi - vj) < 1.0) continue;
    const double h = 1e-4;
    const auto l = linearize_flow(ak, vi, vj);
    const double fi = (gas_flow(ak, vi + h, vj) - gas_flow(ak, vi - h, vj)) / (2 * h);
    const double fj = (gas_flow(ak, vi, vj + h) - gas_flow(ak, vi, vj - h)) / (2 * h);
    CHECK(std::fabs(fi - l.dq_dvi) <= 1e-6 * std::fabs(l.dq_dvi));
    CHECK(std::fabs(fj - l.dq_dvj) <= 1e-6 * std::fabs(l.dq_dvj));
  }
}

TEST_CASE("guess_v_from_q round trip on trees") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> q(-30, 30);
  for (int t = 0; t < 20; ++t) {
    const auto net = testing::random_tree(rng, 5 + t, NetworkKind::Gas);
    std::vector<double> qs(net.num_links());
    for (auto& x : qs) x = q(rng);
    const auto v = guess_v_from_q(net, qs, network_anchors(net));
    // v carries ~2500 in magnitude, so the pressure drop is exact to a few ulps of v
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const auto& l = net.links()[k];
      const double r = qs[k] / l.coeff;
      const double drop = (qs[k] > 0 ? r * r : -r * r);
      CHECK(std::fabs((v[l.from] - v[l.to]) - drop) <= 8 * 2.2e-16 * std::fabs(v[l.from]));
    }
  }
}

TEST_SUITE_END();
