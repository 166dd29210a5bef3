#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "supplybp/network.hpp"
#include "supplybp/power_se.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(SUPPLYBP_FIXTURE_DIR) + "/" + name; }

// Random labelled tree on n vertices via random parent attachment, ids "v0".."v{n-1}".
// Power trees carry random angles as vertex values; gas trees get one anchor
// at v0 (v = 2500) feeding consumers (injection in [-10, -1]) elsewhere, so
// no link carries a near-zero flow.
inline supplybp::Network random_tree(std::mt19937_64& rng, std::size_t n, supplybp::NetworkKind kind) {
  using namespace supplybp;
  std::uniform_real_distribution<double> angle(-0.3, 0.3), coeff(1.0, 20.0), gas_coeff(20.0, 50.0),
      inj(-10.0, -1.0);
  std::vector<VertexRecord> vs(n);
  for (std::size_t i = 0; i < n; ++i) {
    vs[i].id = "v" + std::to_string(i);
    if (kind == NetworkKind::PowerDC) {
      vs[i].vertex_value = angle(rng);
    } else if (i == 0) {
      vs[i].vertex_value = 2500.0;
    } else {
      vs[i].injection = inj(rng);
    }
  }
  std::vector<RawLink> links;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    links.push_back({"v" + std::to_string(parent(rng)), "v" + std::to_string(i),
                     kind == NetworkKind::Gas ? gas_coeff(rng) : coeff(rng)});
  }
  return make_network(kind, std::move(vs), links);
}

// Same topology as `net`, as a DC network with random susceptances and angles.
inline supplybp::Network as_power(const supplybp::Network& net, std::mt19937_64& rng) {
  using namespace supplybp;
  std::uniform_real_distribution<double> angle(-0.3, 0.3), coeff(1.0, 20.0);
  std::vector<VertexRecord> vs;
  for (const auto& v : net.vertices()) vs.push_back({v.id, std::nullopt, angle(rng)});
  std::vector<RawLink> links;
  for (const auto& l : net.links())
    links.push_back({net.vertices()[l.from].id, net.vertices()[l.to].id, coeff(rng), l.circuit});
  return make_network(NetworkKind::PowerDC, std::move(vs), links);
}

inline std::shared_ptr<const supplybp::ProblemSpec> structural(std::shared_ptr<const supplybp::Network> net) {
  supplybp::MeasurementSet m;
  m.injections.resize(net->num_vertices());
  m.angles.resize(net->num_vertices());
  m.flows.resize(net->num_links());
  return std::make_shared<const supplybp::ProblemSpec>(supplybp::build_se_problem(net, m));
}

inline std::shared_ptr<const supplybp::Network> shared(supplybp::Network net) {
  return std::make_shared<const supplybp::Network>(std::move(net));
}

// |a - b| <= rel * max(|b|, 1)
inline bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max(std::fabs(b), 1.0); }

}  // namespace testing
