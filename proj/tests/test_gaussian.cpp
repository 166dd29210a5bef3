#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "supplybp/bp_engine.hpp"
#include "supplybp/errors.hpp"
#include "supplybp/gaussian.hpp"

using namespace supplybp;
using doctest::Approx;

namespace {

double density2(const Gaussian2& g, double x, double y) {
  const Sym2 p = invert2x2(g.cov);
  const double dx = x - g.mean[0], dy = y - g.mean[1];
  const double q = p.xx * dx * dx + 2.0 * p.xy * dx * dy + p.yy * dy * dy;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(g.cov.det()));
}

// Midpoint rule over +-8 sigma on an n x n grid.
struct Grid {
  const Gaussian2& g;
  int n = 200;
  template <class F>
  double integrate(F f) const {
    const double sx = std::sqrt(g.cov.xx), sy = std::sqrt(g.cov.yy);
    const double hx = 16.0 * sx / n, hy = 16.0 * sy / n;
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
      const double x = g.mean[0] - 8.0 * sx + (a + 0.5) * hx;
      for (int b = 0; b < n; ++b) {
        const double y = g.mean[1] - 8.0 * sy + (b + 0.5) * hy;
        acc += f(x, y) * density2(g, x, y);
      }
    }
    return acc * hx * hy;
  }
};

}  // namespace

TEST_CASE("product1 spot values") {
  const auto near_flat = product1({0.0, 1e6}, {1.0, 1.0});
  CHECK(near_flat.mean == Approx(0.999999).epsilon(1e-9));
  CHECK(near_flat.variance == Approx(0.999999).epsilon(1e-9));

  const auto same = product1({0.7, 3.0}, {0.7, 3.0});
  CHECK(same.mean == Approx(0.7));
  CHECK(same.variance == Approx(1.5));

  const auto avg = product1({1.0, 2.0}, {3.0, 2.0});
  CHECK(avg.mean == Approx(2.0));
  CHECK(avg.variance == Approx(1.0));
}

TEST_CASE("quotient1 spot values and identity") {
  const auto q = quotient1({2.0, 1.0}, {0.0, 1e6});
  CHECK(q.mean == Approx(2.0).epsilon(1e-5));
  CHECK(q.variance == Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(quotient1({0.0, 1.0}, {0.0, 0.5}), NonPositiveVariance);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> m(-5, 5), v(0.1, 10);
  for (int k = 0; k < 1000; ++k) {
    const Gaussian1 a{m(rng), v(rng)}, b{m(rng), v(rng)};
    const auto back = quotient1(product1(a, b), b);
    CHECK(back.mean == Approx(a.mean).epsilon(1e-9).scale(1.0));
    CHECK(back.variance == Approx(a.variance).epsilon(1e-9));
  }
}

TEST_CASE("Gaussian1 rejects invalid parameters") {
  CHECK_THROWS_AS(Gaussian1(0.0, 0.0), NonPositiveVariance);
  CHECK_THROWS_AS(Gaussian1(0.0, -1.0), NonPositiveVariance);
  CHECK_THROWS_AS(Gaussian1(NAN, 1.0), NonPositiveVariance);
  CHECK_THROWS_AS(Gaussian2({0, 0}, {1.0, 1.0, 1.0}), NonPositiveVariance);
}

TEST_CASE("marginalize2") {
  const Gaussian2 g{{1.0, 2.0}, Sym2::diag(3.0, 4.0)};
  CHECK(marginalize2(g, 1) == Gaussian1{2.0, 4.0});
  const Gaussian2 c{{0.0, 0.0}, {1.0, 0.5, 2.0}};
  CHECK(marginalize2(c, 0).variance == 1.0);
  CHECK(marginalize2(c, 1).variance == 2.0);
}

TEST_CASE("marginalize2 against quadrature") {
  const Gaussian2 g{{0.4, -0.7}, {1.3, 0.6, 0.9}};
  const Grid grid{g};
  const double mass = grid.integrate([](double, double) { return 1.0; });
  const double ey = grid.integrate([](double, double y) { return y; }) / mass;
  const double vy = grid.integrate([&](double, double y) { return (y - ey) * (y - ey); }) / mass;
  const auto m = marginalize2(g, 1);
  CHECK(std::fabs(m.mean - ey) < 1e-6);
  CHECK(std::fabs(m.variance - vy) < 1e-6);
}

TEST_CASE("flow_belief_from_pair") {
  const auto f = flow_belief_from_pair({{0.2, 0.1}, Sym2::diag(0.01, 0.01)}, 5.0);
  CHECK(f.mean == Approx(0.5));
  CHECK(f.variance == Approx(0.5));
  CHECK_THROWS_AS(flow_belief_from_pair(Gaussian2({0.0, 0.0}, {1.0, 1.0, 1.0}, Gaussian2::Unchecked{}), 1.0),
                  NonPositiveVariance);

  const Gaussian2 g{{0.3, -0.2}, {0.5, 0.2, 0.4}};
  const double B = 3.0;
  const Grid grid{g};
  const double mass = grid.integrate([](double, double) { return 1.0; });
  const double ef = grid.integrate([&](double x, double y) { return B * (x - y); }) / mass;
  const double vf = grid.integrate([&](double x, double y) { return (B * (x - y) - ef) * (B * (x - y) - ef); }) / mass;
  const auto fb = flow_belief_from_pair(g, B);
  CHECK(std::fabs(fb.mean - ef) < 1e-6);
  CHECK(std::fabs(fb.variance - vf) < 1e-6);
}

TEST_CASE("invert2x2") {
  CHECK(invert2x2(Sym2::diag(1, 1)) == Sym2::diag(1, 1));
  CHECK(invert2x2(Sym2::diag(2, 4)) == Sym2::diag(0.5, 0.25));
  const Sym2 m{1.0, 0.999, 1.0};
  const Sym2 inv = invert2x2(m);
  const double r00 = m.xx * inv.xx + m.xy * inv.xy - 1.0;
  const double r01 = m.xx * inv.xy + m.xy * inv.yy;
  const double r11 = m.xy * inv.xy + m.yy * inv.yy - 1.0;
  CHECK(std::max({std::fabs(r00), std::fabs(r01), std::fabs(r11)}) < 1e-9);
  CHECK_THROWS_AS(invert2x2({1.0, 1.0, 1.0}), SingularMatrix);
}

TEST_CASE("flip swaps the pair") {
  const Gaussian2 g{{1.0, 2.0}, {3.0, 0.5, 4.0}};
  const auto f = flip(g);
  CHECK(f.mean[0] == 2.0);
  CHECK(f.cov.xx == 4.0);
  CHECK(f.cov.xy == 0.5);
  CHECK(flip(f) == g);
}

TEST_CASE("CondGaussian2 keeps the difference of a near-rigid pair") {
  // common mode variance 1e8, difference variance 1e-9
  const CondGaussian2 c{0.0, 1e8, 0.0, 1.0, 1e-9};
  CHECK(c.difference().variance == Approx(1e-9));
  CHECK_THROWS_AS((CondGaussian2{0, 1, 0, 0, -1}.validate()), NonPositiveVariance);
}
