#include "supplybp/factor_graph.hpp"

#include <map>
#include <numeric>
#include <spdlog/spdlog.h>

#include "supplybp/errors.hpp"

namespace supplybp {

const char* to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Fv: return "fv";
    case GraphKind::Fc: return "fc";
    case GraphKind::Ff: return "ff";
  }
  return "?";
}

namespace {

FactorGraph link_graph(GraphKind kind, std::shared_ptr<const ProblemSpec> spec) {
  spec->validate();
  const Network& net = *spec->net;
  FactorGraph fg{kind, spec, {}, {}, {}, {}, {}};
  const auto role = kind == GraphKind::Fc ? FgVariable::Role::LinkPair : FgVariable::Role::LinkFlow;
  for (std::size_t k = 0; k < net.num_links(); ++k) fg.variables.push_back({role, k});
  for (std::size_t i = 0; i < net.num_vertices(); ++i) fg.factors.push_back({FgFactor::Role::Vertex, i});
  for (std::size_t k = 0; k < net.num_links(); ++k) fg.factors.push_back({FgFactor::Role::Link, k});
  for (std::size_t i = 0; i < net.num_vertices(); ++i)
    for (const auto& inc : net.incident(i)) fg.edges.push_back({inc.link, i});
  for (std::size_t k = 0; k < net.num_links(); ++k) fg.edges.push_back({k, net.num_vertices() + k});
  return fg;
}

}  // namespace

FactorGraph build_fv(std::shared_ptr<const ProblemSpec> spec) {
  spec->validate();
  const Network& net = *spec->net;
  const auto n = net.num_vertices();
  FactorGraph fg{GraphKind::Fv, spec, {}, {}, {}, {}, {}};
  for (std::size_t i = 0; i < n; ++i) fg.variables.push_back({FgVariable::Role::Vertex, i});
  for (std::size_t i = 0; i < n; ++i) fg.factors.push_back({FgFactor::Role::Vertex, i});
  for (std::size_t k = 0; k < net.num_links(); ++k) fg.factors.push_back({FgFactor::Role::Link, k});

  std::vector<std::map<std::size_t, double>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto inc = net.incident(i);
    for (std::size_t s = 0; s < inc.size(); ++s) nbrs[i][inc[s].neighbor] += spec->vertex[i].c_port[s];
  }
  fg.fv_offsets.assign(1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, c] : nbrs[i]) {
      const auto back = static_cast<std::size_t>(std::distance(nbrs[j].begin(), nbrs[j].find(i)));
      fg.fv_neighbors.push_back({j, c, back});
    }
    fg.fv_offsets.push_back(fg.fv_neighbors.size());
  }

  for (std::size_t i = 0; i < n; ++i) {
    fg.edges.push_back({i, i});
    for (std::size_t e = fg.fv_offsets[i]; e < fg.fv_offsets[i + 1]; ++e)
      fg.edges.push_back({fg.fv_neighbors[e].vertex, i});
  }
  for (std::size_t k = 0; k < net.num_links(); ++k) {
    fg.edges.push_back({net.links()[k].from, n + k});
    fg.edges.push_back({net.links()[k].to, n + k});
  }
  return fg;
}

FactorGraph build_fc(std::shared_ptr<const ProblemSpec> spec) {
  return link_graph(GraphKind::Fc, std::move(spec));
}

FactorGraph build_ff(std::shared_ptr<const ProblemSpec> spec) {
  std::size_t dropped = 0;
  for (const auto& vf : spec->vertex)
    if (vf.sigma2_v < kUninformativeVariance) ++dropped;
  if (dropped > 0)
    spdlog::warn("flow-only graph ignores {} vertex-value measurement(s)", dropped);
  return link_graph(GraphKind::Ff, std::move(spec));
}

FactorGraph build(GraphKind kind, std::shared_ptr<const ProblemSpec> spec) {
  switch (kind) {
    case GraphKind::Fv: return build_fv(std::move(spec));
    case GraphKind::Fc: return build_fc(std::move(spec));
    case GraphKind::Ff: return build_ff(std::move(spec));
  }
  throw ValidationError("unknown graph kind");
}

std::size_t fg_loop_count(const FactorGraph& fg) {
  const auto nv = fg.variables.size();
  const auto nodes = nv + fg.factors.size();
  std::vector<std::size_t> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = nodes;
  for (const auto& e : fg.edges) {
    const auto a = find(e.variable);
    const auto b = find(nv + e.factor);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components + fg.edges.size() - nodes;
}

}  // namespace supplybp
