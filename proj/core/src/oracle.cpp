#include "supplybp/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "supplybp/errors.hpp"
#include "supplybp/gas.hpp"

namespace supplybp {

namespace {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

}  // namespace

DenseGaussianSolution exact_marginals(const ProblemSpec& spec) {
  spec.validate();
  const Network& net = *spec.net;
  const auto n = static_cast<Eigen::Index>(net.num_vertices());
  MatL J = MatL::Zero(n, n);
  VecL h = VecL::Zero(n);
  for (const auto& f : spec.linear_factors()) {
    const long double w = 1.0L / f.sigma2;
    for (const auto& [a, ca] : f.coeffs) {
      h(a) += w * f.z * ca;
      for (const auto& [b, cb] : f.coeffs) J(a, b) += w * ca * cb;
    }
  }

  // Cholesky first; LDL^T with symmetric pivoting if J is not numerically PD.
  MatL cov;
  VecL mean;
  Eigen::LLT<MatL> llt(J);
  Eigen::LDLT<MatL> ldlt;
  const bool use_llt = llt.info() == Eigen::Success;
  if (use_llt) {
    mean = llt.solve(h);
    cov = llt.solve(MatL::Identity(n, n));
  } else {
    ldlt.compute(J);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        (ldlt.vectorD().array() <= 0.0L).any())
      throw SingularSystem("information matrix is not positive definite");
    mean = ldlt.solve(h);
    cov = ldlt.solve(MatL::Identity(n, n));
  }
  if (!mean.allFinite() || !cov.allFinite()) throw SingularSystem("non-finite oracle solution");

  DenseGaussianSolution sol;
  sol.mean.resize(n);
  sol.covariance.resize(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sol.mean[i] = static_cast<double>(mean(i));
    for (Eigen::Index j = 0; j < n; ++j) sol.covariance[i * n + j] = static_cast<double>(cov(i, j));
  }
  for (const auto& l : net.links()) {
    VecL e = VecL::Zero(n);
    e(l.from) = l.coeff;
    e(l.to) = -l.coeff;
    const VecL x = use_llt ? VecL(llt.solve(e)) : VecL(ldlt.solve(e));
    const long double var = e.dot(x);
    if (!(var > 0.0L)) throw SingularSystem("non-positive flow variance");
    sol.link_flows.emplace_back(static_cast<double>(e.dot(mean)), static_cast<double>(var));
  }
  return sol;
}

GasSolution solve_gas_exact(const Network& net) {
  if (net.kind() != NetworkKind::Gas) throw ValidationError("gas solver needs a gas network");
  const auto n = net.num_vertices();
  const auto& vs = net.vertices();
  std::vector<long double> v(n);
  std::vector<Eigen::Index> unknown(n, -1);
  Eigen::Index nu = 0;
  long double mean_anchor = 0.0L;
  std::size_t na = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (vs[i].vertex_value) {
      mean_anchor += *vs[i].vertex_value;
      ++na;
    } else {
      unknown[i] = nu++;
    }
  }
  mean_anchor /= static_cast<long double>(na);
  for (std::size_t i = 0; i < n; ++i) v[i] = vs[i].vertex_value ? *vs[i].vertex_value : mean_anchor;

  auto flow = [&](std::size_t k, const std::vector<long double>& x) {
    const auto& l = net.links()[k];
    const long double d = x[l.from] - x[l.to];
    return static_cast<long double>(l.coeff) * (d < 0 ? -1.0L : 1.0L) * std::sqrt(std::fabs(d));
  };
  auto residual = [&](const std::vector<long double>& x) {
    VecL r = VecL::Zero(nu);
    for (std::size_t i = 0; i < n; ++i)
      if (unknown[i] >= 0) r(unknown[i]) = *vs[i].injection;
    for (std::size_t k = 0; k < net.num_links(); ++k) {
      const auto& l = net.links()[k];
      const long double q = flow(k, x);
      if (unknown[l.from] >= 0) r(unknown[l.from]) -= q;
      if (unknown[l.to] >= 0) r(unknown[l.to]) += q;
    }
    return r;
  };
  auto max_abs = [](const VecL& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0L; };

  // Laminar start: Q proportional to dv, solved as a weighted Laplacian.
  if (nu > 0) {
    MatL L = MatL::Zero(nu, nu);
    VecL rhs = VecL::Zero(nu);
    for (std::size_t i = 0; i < n; ++i)
      if (unknown[i] >= 0) rhs(unknown[i]) = *vs[i].injection;
    const long double scale = std::sqrt(std::max(1.0L, std::fabs(mean_anchor)));
    for (const auto& l : net.links()) {
      const long double w = l.coeff / scale;
      const auto a = unknown[l.from], b = unknown[l.to];
      if (a >= 0) L(a, a) += w;
      if (b >= 0) L(b, b) += w;
      if (a >= 0 && b >= 0) {
        L(a, b) -= w;
        L(b, a) -= w;
      }
      if (a >= 0 && b < 0) rhs(a) += w * v[l.to];
      if (b >= 0 && a < 0) rhs(b) += w * v[l.from];
    }
    const VecL x = L.ldlt().solve(rhs);
    for (std::size_t i = 0; i < n; ++i)
      if (unknown[i] >= 0) v[i] = x(unknown[i]);
  }

  VecL r = residual(v);
  constexpr long double kTarget = 1e-12L;
  for (int it = 0; it < 200 && max_abs(r) > kTarget; ++it) {
    MatL Jac = MatL::Zero(nu, nu);
    for (std::size_t k = 0; k < net.num_links(); ++k) {
      const auto& l = net.links()[k];
      const long double d = std::max(std::fabs(v[l.from] - v[l.to]), static_cast<long double>(kFlowSlopeClamp));
      const long double s = l.coeff / (2.0L * std::sqrt(d));
      const auto a = unknown[l.from], b = unknown[l.to];
      // r_a = g_a - sum Q_out, so dr_a/dv_a = -s for the out-flow of a
      if (a >= 0) Jac(a, a) -= s;
      if (b >= 0) Jac(b, b) -= s;
      if (a >= 0 && b >= 0) {
        Jac(a, b) += s;
        Jac(b, a) += s;
      }
    }
    const VecL step = Jac.partialPivLu().solve(-r);
    long double t = 1.0L;
    const long double r0 = r.norm();
    for (int bt = 0; bt < 40; ++bt, t *= 0.5L) {
      std::vector<long double> trial = v;
      for (std::size_t i = 0; i < n; ++i)
        if (unknown[i] >= 0) trial[i] += t * step(unknown[i]);
      const VecL rt = residual(trial);
      if (rt.norm() < r0 || bt == 39) {
        v = std::move(trial);
        r = rt;
        break;
      }
    }
  }
  if (!(max_abs(r) <= kTarget)) throw NoConvergence("gas oracle residual " + std::to_string(static_cast<double>(max_abs(r))));

  GasSolution sol;
  for (std::size_t k = 0; k < net.num_links(); ++k) sol.q.push_back(static_cast<double>(flow(k, v)));
  for (auto x : v) sol.v.push_back(static_cast<double>(x));
  sol.residual = static_cast<double>(max_abs(r));
  return sol;
}

}  // namespace supplybp
