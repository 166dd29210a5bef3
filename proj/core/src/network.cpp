#include "supplybp/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <json.hpp>
#include <set>
#include <sstream>
#include <utility>

#include "supplybp/errors.hpp"

namespace supplybp {

using nlohmann::json;

namespace {

std::vector<std::size_t> bfs_hops(const Network& net, std::size_t start) {
  std::vector<std::size_t> dist(net.num_vertices(), SIZE_MAX);
  std::deque<std::size_t> queue{start};
  dist[start] = 0;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& inc : net.incident(v)) {
      if (dist[inc.neighbor] == SIZE_MAX) {
        dist[inc.neighbor] = dist[v] + 1;
        queue.push_back(inc.neighbor);
      }
    }
  }
  return dist;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* what) {
  if (!obj.is_object()) throw ParseError(std::string(what) + " is not an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }))
      throw ParseError(std::string("unknown key '") + key + "' in " + what);
  }
}

std::optional<double> opt_number(const json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number()) throw ParseError(std::string(key) + " must be a number or null");
  return obj.at(key).get<double>();
}

}  // namespace

Network::Network(NetworkKind kind, std::vector<VertexRecord> vertices, std::vector<LinkRecord> links)
    : kind_(kind), vertices_(std::move(vertices)), links_(std::move(links)) {
  const auto n = vertices_.size();
  if (n == 0) throw ValidationError("network has no vertices");
  for (std::size_t i = 0; i < n; ++i) {
    if (!by_id_.emplace(vertices_[i].id, i).second)
      throw ValidationError("duplicate vertex id '" + vertices_[i].id + "'");
  }

  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (auto& l : links_) {
    if (l.from >= n || l.to >= n) throw ValidationError("link endpoint references a missing vertex");
    if (l.from == l.to) throw ValidationError("self-loop at vertex '" + vertices_[l.from].id + "'");
    if (!(l.coeff > 0.0) || !std::isfinite(l.coeff))
      throw ValidationError("link coefficient must be > 0");
    if (l.circuit < 1) throw ValidationError("circuit number must be >= 1");
    if (l.from > l.to) std::swap(l.from, l.to);
    if (!seen.emplace(l.from, l.to, l.circuit).second)
      throw ValidationError("duplicate link '" + vertices_[l.from].id + "'-'" + vertices_[l.to].id + "'");
  }

  offsets_.assign(n + 1, 0);
  for (const auto& l : links_) {
    ++offsets_[l.from + 1];
    ++offsets_[l.to + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  ports_.resize(2 * links_.size());
  from_port_.resize(links_.size());
  to_port_.resize(links_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t k = 0; k < links_.size(); ++k) {
    const auto& l = links_[k];
    from_port_[k] = fill[l.from]++;
    to_port_[k] = fill[l.to]++;
    ports_[from_port_[k]] = {k, l.to, from_port_[k], to_port_[k]};
    ports_[to_port_[k]] = {k, l.from, to_port_[k], from_port_[k]};
  }

  const auto dist = bfs_hops(*this, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] == SIZE_MAX)
      throw ValidationError("network is not connected ('" + vertices_[i].id + "' unreachable)");
  }

  if (kind_ == NetworkKind::Gas) {
    bool anchored = false;
    for (const auto& v : vertices_) {
      anchored = anchored || v.vertex_value.has_value();
      if (!v.vertex_value && !v.injection)
        throw ValidationError("gas vertex '" + v.id + "' has neither injection nor pressure");
    }
    if (!anchored) throw ValidationError("gas network has no pressure anchor");
  }
}

std::span<const Incidence> Network::incident(std::size_t vertex) const {
  return {ports_.data() + offsets_[vertex], offsets_[vertex + 1] - offsets_[vertex]};
}

std::optional<std::size_t> Network::index_of(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Network::anchors() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i].vertex_value) out.push_back(i);
  return out;
}

Network make_network(NetworkKind kind, std::vector<VertexRecord> vertices,
                     const std::vector<RawLink>& links) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < vertices.size(); ++i) idx.emplace(vertices[i].id, i);
  std::vector<LinkRecord> recs;
  recs.reserve(links.size());
  for (const auto& l : links) {
    const auto f = idx.find(l.from);
    const auto t = idx.find(l.to);
    if (f == idx.end() || t == idx.end())
      throw ValidationError("link '" + l.from + "'-'" + l.to + "' references a missing vertex");
    recs.push_back({f->second, t->second, l.coeff, l.circuit});
  }
  return Network(kind, std::move(vertices), std::move(recs));
}

Network parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    check_keys(doc, {"kind", "vertices", "links"}, "network");
    const auto kind_str = doc.at("kind").get<std::string>();
    NetworkKind kind;
    if (kind_str == "power_dc") kind = NetworkKind::PowerDC;
    else if (kind_str == "gas") kind = NetworkKind::Gas;
    else throw ParseError("unknown network kind '" + kind_str + "'");

    std::vector<VertexRecord> vertices;
    for (const auto& v : doc.at("vertices")) {
      check_keys(v, {"id", "injection", "vertex_value"}, "vertex");
      vertices.push_back({v.at("id").get<std::string>(), opt_number(v, "injection"),
                          opt_number(v, "vertex_value")});
    }
    std::vector<RawLink> links;
    for (const auto& l : doc.at("links")) {
      check_keys(l, {"from", "to", "coeff", "circuit"}, "link");
      RawLink raw{l.at("from").get<std::string>(), l.at("to").get<std::string>(),
                  l.at("coeff").get<double>()};
      if (l.contains("circuit")) raw.circuit = l.at("circuit").get<int>();
      links.push_back(std::move(raw));
    }
    return make_network(kind, std::move(vertices), links);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

std::string to_json(const Network& net) {
  json doc;
  doc["kind"] = net.kind() == NetworkKind::Gas ? "gas" : "power_dc";
  doc["vertices"] = json::array();
  for (const auto& v : net.vertices()) {
    json jv{{"id", v.id}, {"injection", nullptr}, {"vertex_value", nullptr}};
    if (v.injection) jv["injection"] = *v.injection;
    if (v.vertex_value) jv["vertex_value"] = *v.vertex_value;
    doc["vertices"].push_back(jv);
  }
  doc["links"] = json::array();
  for (const auto& l : net.links()) {
    json jl{{"from", net.vertices()[l.from].id}, {"to", net.vertices()[l.to].id}, {"coeff", l.coeff}};
    if (l.circuit != 1) jl["circuit"] = l.circuit;
    doc["links"].push_back(jl);
  }
  return doc.dump(1);
}

std::size_t network_loop_count(const Network& net) {
  return 1 + net.num_links() - net.num_vertices();
}

std::size_t network_diameter(const Network& net) {
  std::size_t best = 0;
  for (std::size_t s = 0; s < net.num_vertices(); ++s) {
    const auto d = bfs_hops(net, s);
    best = std::max(best, *std::max_element(d.begin(), d.end()));
  }
  return best;
}

}  // namespace supplybp
