#include "supplybp/gaussian.hpp"

#include <cmath>
#include <string>

#include "supplybp/errors.hpp"

namespace supplybp {

namespace {

bool valid_variance(double v) { return std::isfinite(v) && v > 0.0; }

std::string fmt(double x) { return std::to_string(x); }

}  // namespace

Sym2 invert2x2(const Sym2& m) {
  const double d = m.det();
  if (!(std::fabs(d) > 1e-300)) throw SingularMatrix("2x2 determinant " + fmt(d));
  return {m.yy / d, -m.xy / d, m.xx / d};
}

Sym2 flip(const Sym2& m) { return {m.yy, m.xy, m.xx}; }
Vec2 flip(const Vec2& v) { return {v[1], v[0]}; }

Vec2 mul(const Sym2& m, const Vec2& v) {
  return {m.xx * v[0] + m.xy * v[1], m.xy * v[0] + m.yy * v[1]};
}

bool is_positive_definite(const Sym2& m) {
  return std::isfinite(m.xx) && std::isfinite(m.xy) && std::isfinite(m.yy) && m.xx > 0.0 &&
         m.yy > 0.0 && m.det() > 0.0;
}

Gaussian1::Gaussian1(double m, double v) : mean(m), variance(v) {
  if (!valid_variance(v)) throw NonPositiveVariance("variance " + fmt(v));
  if (!std::isfinite(m)) throw NonPositiveVariance("non-finite mean");
}

Gaussian2::Gaussian2(Vec2 m, Sym2 c) : mean(m), cov(c) {
  if (!is_positive_definite(c)) throw NonPositiveVariance("covariance not positive definite");
  if (!std::isfinite(m[0]) || !std::isfinite(m[1])) throw NonPositiveVariance("non-finite mean");
}

Gaussian1 product1(const Gaussian1& a, const Gaussian1& b) {
  const double p = a.precision() + b.precision();
  if (!(p > 0.0)) throw NonPositiveVariance("product precision " + fmt(p));
  const double v = 1.0 / p;
  return {v * (a.mean * a.precision() + b.mean * b.precision()), v};
}

Gaussian1 quotient1(const Gaussian1& num, const Gaussian1& den) {
  const double p = num.precision() - den.precision();
  if (!(p > 0.0)) throw NonPositiveVariance("quotient precision " + fmt(p));
  const double v = 1.0 / p;
  return {v * (num.mean * num.precision() - den.mean * den.precision()), v};
}

Gaussian2 from_information(const Sym2& precision, const Vec2& shift) {
  if (!is_positive_definite(precision)) throw NonPositiveVariance("precision not positive definite");
  const Sym2 cov = invert2x2(precision);
  return {mul(cov, shift), cov};
}

Gaussian2 product2(const Gaussian2& a, const Gaussian2& b) {
  const Sym2 pa = invert2x2(a.cov);
  const Sym2 pb = invert2x2(b.cov);
  const Sym2 p{pa.xx + pb.xx, pa.xy + pb.xy, pa.yy + pb.yy};
  const Vec2 ha = mul(pa, a.mean);
  const Vec2 hb = mul(pb, b.mean);
  return from_information(p, {ha[0] + hb[0], ha[1] + hb[1]});
}

Gaussian2 quotient2(const Gaussian2& num, const Gaussian2& den) {
  const Sym2 pn = invert2x2(num.cov);
  const Sym2 pd = invert2x2(den.cov);
  const Sym2 p{pn.xx - pd.xx, pn.xy - pd.xy, pn.yy - pd.yy};
  const Vec2 hn = mul(pn, num.mean);
  const Vec2 hd = mul(pd, den.mean);
  return from_information(p, {hn[0] - hd[0], hn[1] - hd[1]});
}

Gaussian1 marginalize2(const Gaussian2& g, std::size_t index) {
  return index == 0 ? Gaussian1{g.mean[0], g.cov.xx} : Gaussian1{g.mean[1], g.cov.yy};
}

Gaussian2 flip(const Gaussian2& g) { return {flip(g.mean), flip(g.cov)}; }

}  // namespace supplybp

namespace supplybp {

CondGaussian2 CondGaussian2::from_joint(const Gaussian2& g) {
  const double s = g.cov.xy / g.cov.xx;
  return {g.mean[0], g.cov.xx, g.mean[1], s, g.cov.det() / g.cov.xx};
}

void CondGaussian2::invalid() const {
  if (!valid_variance(v0) || !valid_variance(v1)) throw NonPositiveVariance("pair variance not positive");
  throw NonPositiveVariance("non-finite pair parameters");
}

Gaussian2 CondGaussian2::joint() const {
  return {{m0, m1}, {v0, slope * v0, slope * slope * v0 + v1}, Gaussian2::Unchecked{}};
}

CondGaussian2 CondGaussian2::reversed() const {
  const double w = slope * slope * v0 + v1;
  const double iw = 1.0 / w;
  return {m1, w, m0, slope * v0 * iw, v0 * v1 * iw};
}

Gaussian1 CondGaussian2::difference() const {
  const double d = 1.0 - slope;
  return {m0 - m1, d * d * v0 + v1};
}

CondGaussian2 observe(const CondGaussian2& g, double c0, double c1, double z, double sigma2) {
  // x1 | x0 absorbs the observation, then x0 absorbs what is left of it.
  const double iv1 = 1.0 / g.v1, is = 1.0 / sigma2;
  const double v1 = 1.0 / (iv1 + c1 * c1 * is);
  const double slope = (g.slope * iv1 - c1 * c0 * is) * v1;
  const double at_m0 = (g.m1 * iv1 + c1 * (z - c0 * g.m0) * is) * v1;
  const double k = c0 + c1 * g.slope;
  const double r0 = z - c0 * g.m0 - c1 * g.m1;
  const double ise = 1.0 / (sigma2 + c1 * c1 * g.v1);
  const double v0 = 1.0 / (1.0 / g.v0 + k * k * ise);
  const double shift = k * r0 * ise * v0;
  CondGaussian2 out{g.m0 + shift, v0, at_m0 + slope * shift, slope, v1};
  out.validate();
  return out;
}

CondGaussian2 product(const CondGaussian2& a, const CondGaussian2& b) {
  const double y0 = a.m0;
  const double wa = 1.0 / a.v1, wb = 1.0 / b.v1;
  const double v1 = 1.0 / (wa + wb);
  const double na = a.m1;                           // E[x1 | x0 = y0] under a
  const double nb = b.m1 + b.slope * (y0 - b.m0);   // same under b
  const double slope = (a.slope * wa + b.slope * wb) * v1;
  const double c0 = (na * wa + nb * wb) * v1;
  const double ds = a.slope - b.slope;
  const double iw = 1.0 / (a.v1 + b.v1);
  const double d0 = na - nb;
  const double ib0 = 1.0 / b.v0;
  const double v0 = 1.0 / (1.0 / a.v0 + ib0 + ds * ds * iw);
  const double shift = ((b.m0 - y0) * ib0 - ds * d0 * iw) * v0;
  CondGaussian2 out{y0 + shift, v0, c0 + slope * shift, slope, v1};
  out.validate();
  return out;
}

}  // namespace supplybp
