#pragma once

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "supplybp/network.hpp"

namespace supplybp {

// Variance used for "no information" pseudo-measurements.
inline constexpr double kUninformativeVariance = 1e8;

// z = sum_k coeffs[k].second * x[coeffs[k].first] + noise(sigma2),
// with x indexed by vertex.
struct LinearGaussianFactor {
  double z = 0.0;
  double sigma2 = 1.0;
  std::vector<std::pair<std::size_t, double>> coeffs;
};

// Everything attached to vertex i: the injection observation over i and its
// neighbours, and a direct observation of the vertex value.
struct VertexFactor {
  double z_g = 0.0;
  double sigma2_g = kUninformativeVariance;
  double c_self = 0.0;
  std::vector<double> c_port;  // per incident link, in Network::incident order
  double z_v = 0.0;
  double sigma2_v = kUninformativeVariance;
};

// z_f = c_from * x_from + c_to * x_to + noise(sigma2_f).
struct LinkFactor {
  double z_f = 0.0;
  double sigma2_f = kUninformativeVariance;
  double c_from = 1.0;
  double c_to = -1.0;
};

struct ProblemSpec {
  std::shared_ptr<const Network> net;
  std::vector<VertexFactor> vertex;
  std::vector<LinkFactor> link;

  // Throws ValidationError on shape mismatch or non-positive variance.
  void validate() const;
  // Flat list: per vertex the injection factor then the value factor, then
  // one factor per link. Parallel-link coefficients are summed.
  std::vector<LinearGaussianFactor> linear_factors() const;
};

}  // namespace supplybp
