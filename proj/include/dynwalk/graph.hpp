#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynwalk/rng.hpp"

namespace dynwalk {

using Vertex = int;
using EdgeId = int;

struct Edge {
  Vertex u;
  Vertex v;  // u < v
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

/// Immutable simple d-regular graph. Neighbour lists are sorted ascending and
/// edges are indexed in ascending lexicographic order of (u, v).
class Graph {
 public:
  /// Validates simplicity and regularity; throws ParseError on violations.
  static Graph from_edges(int n, int d, std::vector<Edge> edges);

  int n() const { return n_; }
  int d() const { return d_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {adjacency_.data() + static_cast<std::size_t>(v) * d_, static_cast<std::size_t>(d_)};
  }
  /// Edge id of the j-th neighbour slot of v.
  EdgeId slot_edge(Vertex v, int j) const { return slot_edges_[static_cast<std::size_t>(v) * d_ + j]; }
  std::span<const EdgeId> incident_edges(Vertex v) const {
    return {slot_edges_.data() + static_cast<std::size_t>(v) * d_, static_cast<std::size_t>(d_)};
  }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  /// Edge id of {u, v}, or nullopt when not adjacent.
  std::optional<EdgeId> edge_index(Vertex u, Vertex v) const;
  bool adjacent(Vertex u, Vertex v) const { return edge_index(u, v).has_value(); }

  bool operator==(const Graph& other) const { return n_ == other.n_ && d_ == other.d_ && edges_ == other.edges_; }

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Vertex> adjacency_;
  std::vector<EdgeId> slot_edges_;
  std::vector<Edge> edges_;
};

Graph complete_graph_k4();

/// One configuration-model pairing; nullopt when it produced a loop or a multi-edge.
std::optional<std::vector<Edge>> configuration_model_attempt(int n, int d, Rng& rng);

struct GenerateOptions {
  std::uint64_t max_attempts = 1'000'000;
};

/// Uniform simple d-regular graph by configuration model with rejection.
Graph generate_regular(int n, int d, std::uint64_t seed, GenerateOptions options = {});

struct Ball {
  std::vector<Vertex> interior;  // distance <= radius, sorted
  std::vector<Vertex> boundary;  // distance == radius, sorted
};

Ball ball(const Graph& g, Vertex v, int radius);

/// Edge ids with both endpoints in B_radius(v).
std::vector<EdgeId> ball_edges(const Graph& g, Vertex v, int radius);

/// BFS distances from a source set; unreachable vertices get -1.
std::vector<int> bfs_distances(const Graph& g, std::span<const Vertex> sources);

/// Exact numbers of simple cycles of each length 3..l_max; entry k holds C_k
/// (entries 0..2 are zero). Each cycle is counted once.
std::vector<std::uint64_t> cycle_counts(const Graph& g, int l_max);

/// Vertices on at least one simple cycle of length strictly less than r, sorted.
std::vector<Vertex> short_cycle_vertices(const Graph& g, double r);

bool is_k_root(const Graph& g, Vertex v, int k);

/// Cyclomatic number |E(B)| - |B| + 1 of the induced ball subgraph.
int ball_cycle_rank(const Graph& g, Vertex v, int radius);

/// Graph file: "n d" header then one ascending "u v" line per edge.
void save_graph(const Graph& g, std::ostream& out);
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(std::istream& in);
Graph load_graph(const std::string& path);

}  // namespace dynwalk
