#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace supplybp {

enum class NetworkKind { PowerDC, Gas };

struct VertexRecord {
  std::string id;
  std::optional<double> injection;
  std::optional<double> vertex_value;
};

// Endpoints are vertex indices with from < to. `circuit` tells apart
// parallel lines between the same pair of vertices.
struct LinkRecord {
  std::size_t from = 0;
  std::size_t to = 0;
  double coeff = 1.0;
  int circuit = 1;
};

// One incident link seen from a vertex. Ports are numbered consecutively
// over all vertices, so a port indexes per-(vertex, link) message arrays.
struct Incidence {
  std::size_t link;
  std::size_t neighbor;
  std::size_t port;
  std::size_t mate_port;  // the same link seen from the neighbor
};

class Network {
 public:
  // Validates and normalizes link orientation. Throws ValidationError.
  Network(NetworkKind kind, std::vector<VertexRecord> vertices, std::vector<LinkRecord> links);

  NetworkKind kind() const { return kind_; }
  const std::vector<VertexRecord>& vertices() const { return vertices_; }
  const std::vector<LinkRecord>& links() const { return links_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_links() const { return links_.size(); }
  std::size_t num_ports() const { return 2 * links_.size(); }

  std::span<const Incidence> incident(std::size_t vertex) const;
  std::size_t port_offset(std::size_t vertex) const { return offsets_[vertex]; }
  std::size_t degree(std::size_t vertex) const { return offsets_[vertex + 1] - offsets_[vertex]; }
  // Port of `link` at its from / to endpoint.
  std::size_t from_port(std::size_t link) const { return from_port_[link]; }
  std::size_t to_port(std::size_t link) const { return to_port_[link]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  std::vector<std::size_t> anchors() const;

 private:
  NetworkKind kind_;
  std::vector<VertexRecord> vertices_;
  std::vector<LinkRecord> links_;
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> ports_;
  std::vector<std::size_t> from_port_, to_port_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Links refer to endpoints by id, in any order.
struct RawLink {
  std::string from;
  std::string to;
  double coeff;
  int circuit = 1;
};

Network make_network(NetworkKind kind, std::vector<VertexRecord> vertices,
                     const std::vector<RawLink>& links);

Network parse_network(std::string_view json_text);
Network load_network(const std::filesystem::path& path);
std::string to_json(const Network& net);

std::size_t network_loop_count(const Network& net);

// Longest shortest path in hops. Used for tree-exactness bounds.
std::size_t network_diameter(const Network& net);

}  // namespace supplybp
