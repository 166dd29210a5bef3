#pragma once

#include <vector>

#include "supplybp/gaussian.hpp"
#include "supplybp/problem.hpp"

namespace supplybp {

struct DenseGaussianSolution {
  std::vector<double> mean;        // per vertex
  std::vector<double> covariance;  // n x n, row major
  std::vector<Gaussian1> link_flows;  // B (x_from - x_to) per link

  double cov(std::size_t i, std::size_t j) const { return covariance[i * mean.size() + j]; }
};

// Normal equations J x = h with J = sum c c^T / sigma2, solved in extended
// precision. Flow variances are e^T J^-1 e for e = B (e_from - e_to), which
// avoids cancellation between large covariance entries. Throws SingularSystem.
DenseGaussianSolution exact_marginals(const ProblemSpec& spec);

struct GasSolution {
  std::vector<double> q;  // per link, from -> to
  std::vector<double> v;  // per vertex
  double residual = 0.0;  // max over vertices of the equation residual
};

// Damped Newton on flow conservation at non-anchor vertices with v fixed at
// anchors. Throws NoConvergence.
GasSolution solve_gas_exact(const Network& net);

}  // namespace supplybp
