#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "supplybp/problem.hpp"

namespace supplybp {

enum class GraphKind { Fv, Fc, Ff };

const char* to_string(GraphKind kind);

struct FgVariable {
  enum class Role { Vertex, LinkPair, LinkFlow } role;
  std::size_t index;  // vertex index for Vertex, link index otherwise
};

struct FgFactor {
  enum class Role { Vertex, Link } role;
  std::size_t index;
};

struct FgEdge {
  std::size_t variable;
  std::size_t factor;
};

// Distinct neighbour j of vertex i as seen from the naive graph, where the
// injection factor H_i touches each neighbouring vertex once.
struct FvNeighbor {
  std::size_t vertex;
  double coeff;       // summed over parallel links i-j
  std::size_t back;   // position of i in the neighbour list of `vertex`
};

struct FactorGraph {
  GraphKind kind;
  std::shared_ptr<const ProblemSpec> problem;
  std::vector<FgVariable> variables;
  std::vector<FgFactor> factors;
  std::vector<FgEdge> edges;
  // Fv only, flattened per vertex.
  std::vector<std::size_t> fv_offsets;
  std::vector<FvNeighbor> fv_neighbors;

  const Network& net() const { return *problem->net; }
};

FactorGraph build_fv(std::shared_ptr<const ProblemSpec> spec);
FactorGraph build_fc(std::shared_ptr<const ProblemSpec> spec);
// Vertex-value factors carry no information about flows and are dropped
// with a warning when any of them is informative.
FactorGraph build_ff(std::shared_ptr<const ProblemSpec> spec);
FactorGraph build(GraphKind kind, std::shared_ptr<const ProblemSpec> spec);

std::size_t fg_loop_count(const FactorGraph& fg);

}  // namespace supplybp
