#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace supplybp {

// Symmetric 2x2 matrix [[xx, xy], [xy, yy]]. Storing one off-diagonal keeps
// it symmetric by construction.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det() const { return xx * yy - xy * xy; }
  static Sym2 diag(double a, double b) { return {a, 0.0, b}; }
  bool operator==(const Sym2&) const = default;
};

using Vec2 = std::array<double, 2>;

Sym2 invert2x2(const Sym2& m);
Sym2 flip(const Sym2& m);
Vec2 flip(const Vec2& v);
Vec2 mul(const Sym2& m, const Vec2& v);
bool is_positive_definite(const Sym2& m);

struct Gaussian1 {
  double mean = 0.0;
  double variance = 1.0;

  Gaussian1() = default;
  // Throws NonPositiveVariance unless variance is finite and > 0.
  Gaussian1(double mean, double variance);

  double precision() const { return 1.0 / variance; }
  bool operator==(const Gaussian1&) const = default;
};

struct Gaussian2 {
  Vec2 mean{0.0, 0.0};
  Sym2 cov{1.0, 0.0, 1.0};

  Gaussian2() = default;
  // Throws NonPositiveVariance unless cov is positive definite.
  Gaussian2(Vec2 mean, Sym2 cov);

  struct Unchecked {};
  Gaussian2(Vec2 m, Sym2 c, Unchecked) : mean(m), cov(c) {}

  bool operator==(const Gaussian2&) const = default;
};

Gaussian1 product1(const Gaussian1& a, const Gaussian1& b);
Gaussian1 quotient1(const Gaussian1& num, const Gaussian1& den);
Gaussian2 product2(const Gaussian2& a, const Gaussian2& b);
Gaussian2 quotient2(const Gaussian2& num, const Gaussian2& den);
Gaussian1 marginalize2(const Gaussian2& g, std::size_t index);
Gaussian2 flip(const Gaussian2& g);

// Gaussian from information form (precision matrix, precision-weighted mean).
Gaussian2 from_information(const Sym2& precision, const Vec2& shift);

// Pair Gaussian as a marginal and a linear conditional:
//   x0 ~ N(m0, v0),  x1 | x0 ~ N(m1 + slope (x0 - m0), v1).
// Strongly correlated pairs (huge common variance, tiny variance of the
// difference) keep full relative accuracy in this form, where the 2x2
// covariance would lose the difference to rounding.
struct CondGaussian2 {
  double m0 = 0.0;
  double v0 = 1.0;
  double m1 = 0.0;
  double slope = 0.0;
  double v1 = 1.0;

  static CondGaussian2 from_joint(const Gaussian2& g);
  // Checks v0 > 0 and v1 > 0 (which implies a positive definite joint) and
  // that everything is finite.
  void validate() const {
    if (!(v0 > 0.0 && v1 > 0.0 && std::isfinite(v0) && std::isfinite(v1) && std::isfinite(m0) &&
          std::isfinite(m1) && std::isfinite(slope)))
      invalid();
  }
  // The covariance is built from the factors and not re-checked.
  Gaussian2 joint() const;
  CondGaussian2 reversed() const;
  // Marginal of x0 - x1.
  Gaussian1 difference() const;

 private:
  [[noreturn]] void invalid() const;
};

// Multiply by the factor N(z; c0 x0 + c1 x1, sigma2).
CondGaussian2 observe(const CondGaussian2& g, double c0, double c1, double z, double sigma2);
CondGaussian2 product(const CondGaussian2& a, const CondGaussian2& b);

}  // namespace supplybp
