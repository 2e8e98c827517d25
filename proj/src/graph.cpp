#include "dynwalk/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <queue>
#include <sstream>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

constexpr double kCycleBudget = 1e7;

void check_cycle_budget(int d, int l_max) {
  if (l_max < 0) return;
  if (std::pow(static_cast<double>(d - 1), l_max) > kCycleBudget) {
    throw Error(ErrorKind::BudgetExceeded,
                "(d-1)^" + std::to_string(l_max) + " exceeds the exhaustive cycle search budget");
  }
}

}  // namespace

Graph Graph::from_edges(int n, int d, std::vector<Edge> edges) {
  if (n <= 0 || d < 1) throw Error(ErrorKind::ParseError, "graph needs n > 0 and d > 0");
  if (static_cast<long long>(edges.size()) * 2 != static_cast<long long>(n) * d) {
    throw Error(ErrorKind::ParseError, "edge count " + std::to_string(edges.size()) + " != n*d/2");
  }
  for (auto& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw Error(ErrorKind::ParseError, "edge endpoint out of range");
    if (e.u == e.v) throw Error(ErrorKind::ParseError, "self-loop at vertex " + std::to_string(e.u));
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] == edges[i - 1]) {
      throw Error(ErrorKind::ParseError,
                  "parallel edge " + std::to_string(edges[i].u) + " " + std::to_string(edges[i].v));
    }
  }

  Graph g;
  g.n_ = n;
  g.d_ = d;
  g.adjacency_.assign(static_cast<std::size_t>(n) * d, -1);
  g.slot_edges_.assign(static_cast<std::size_t>(n) * d, -1);
  std::vector<std::vector<std::pair<Vertex, EdgeId>>> rows(n);
  for (EdgeId id = 0; id < static_cast<EdgeId>(edges.size()); ++id) {
    rows[edges[id].u].push_back({edges[id].v, id});
    rows[edges[id].v].push_back({edges[id].u, id});
  }
  for (Vertex v = 0; v < n; ++v) {
    if (static_cast<int>(rows[v].size()) != d) {
      throw Error(ErrorKind::ParseError, "vertex " + std::to_string(v) + " has degree " +
                                             std::to_string(rows[v].size()) + ", expected " + std::to_string(d));
    }
    std::sort(rows[v].begin(), rows[v].end());
    for (int j = 0; j < d; ++j) {
      g.adjacency_[static_cast<std::size_t>(v) * d + j] = rows[v][j].first;
      g.slot_edges_[static_cast<std::size_t>(v) * d + j] = rows[v][j].second;
    }
  }
  g.edges_ = std::move(edges);
  return g;
}

std::optional<EdgeId> Graph::edge_index(Vertex u, Vertex v) const {
  if (u < 0 || u >= n_ || v < 0 || v >= n_) return std::nullopt;
  auto row = neighbors(u);
  auto it = std::lower_bound(row.begin(), row.end(), v);
  if (it == row.end() || *it != v) return std::nullopt;
  return slot_edge(u, static_cast<int>(it - row.begin()));
}

Graph complete_graph_k4() {
  return Graph::from_edges(4, 3, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
}

std::optional<std::vector<Edge>> configuration_model_attempt(int n, int d, Rng& rng) {
  std::vector<Vertex> stubs(static_cast<std::size_t>(n) * d);
  for (std::size_t i = 0; i < stubs.size(); ++i) stubs[i] = static_cast<Vertex>(i / d);
  // Fisher-Yates with the library generator so output is platform independent.
  for (std::size_t i = stubs.size(); i > 1; --i) {
    std::swap(stubs[i - 1], stubs[rng.below(i)]);
  }
  std::vector<Edge> edges;
  edges.reserve(stubs.size() / 2);
  for (std::size_t i = 0; i < stubs.size(); i += 2) {
    Vertex a = stubs[i];
    Vertex b = stubs[i + 1];
    if (a == b) return std::nullopt;
    edges.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) return std::nullopt;
  return edges;
}

Graph generate_regular(int n, int d, std::uint64_t seed, GenerateOptions options) {
  if (d < 3) throw Error(ErrorKind::RangeError, "d must be >= 3");
  if ((static_cast<long long>(n) * d) % 2 != 0) throw Error(ErrorKind::InfeasibleDegree, "n*d must be even");
  if (n <= d) throw Error(ErrorKind::RangeError, "need n > d");
  Rng rng(seed, 0, StreamTag::Graph);
  for (std::uint64_t attempt = 0; attempt < options.max_attempts; ++attempt) {
    if (auto edges = configuration_model_attempt(n, d, rng)) {
      return Graph::from_edges(n, d, std::move(*edges));
    }
  }
  throw Error(ErrorKind::GenerationTimeout,
              "no simple pairing after " + std::to_string(options.max_attempts) + " attempts");
}

std::vector<int> bfs_distances(const Graph& g, std::span<const Vertex> sources) {
  std::vector<int> dist(g.n(), -1);
  std::queue<Vertex> frontier;
  for (Vertex s : sources) {
    if (dist[s] != 0) {
      dist[s] = 0;
      frontier.push(s);
    }
  }
  while (!frontier.empty()) {
    Vertex x = frontier.front();
    frontier.pop();
    for (Vertex y : g.neighbors(x)) {
      if (dist[y] < 0) {
        dist[y] = dist[x] + 1;
        frontier.push(y);
      }
    }
  }
  return dist;
}

namespace {

// Distances truncated at `radius`, visiting only the ball.
std::vector<std::pair<Vertex, int>> ball_with_depth(const Graph& g, Vertex v, int radius) {
  std::vector<std::pair<Vertex, int>> order{{v, 0}};
  std::vector<char> seen(g.n(), 0);
  seen[v] = 1;
  for (std::size_t head = 0; head < order.size(); ++head) {
    auto [x, dx] = order[head];
    if (dx == radius) continue;
    for (Vertex y : g.neighbors(x)) {
      if (!seen[y]) {
        seen[y] = 1;
        order.push_back({y, dx + 1});
      }
    }
  }
  return order;
}

}  // namespace

Ball ball(const Graph& g, Vertex v, int radius) {
  if (radius < 0) throw Error(ErrorKind::RangeError, "radius must be >= 0");
  Ball out;
  for (auto [x, dx] : ball_with_depth(g, v, radius)) {
    out.interior.push_back(x);
    if (dx == radius) out.boundary.push_back(x);
  }
  std::sort(out.interior.begin(), out.interior.end());
  std::sort(out.boundary.begin(), out.boundary.end());
  return out;
}

std::vector<EdgeId> ball_edges(const Graph& g, Vertex v, int radius) {
  std::vector<char> inside(g.n(), 0);
  for (auto [x, dx] : ball_with_depth(g, v, radius)) inside[x] = 1;
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (inside[g.edge(e).u] && inside[g.edge(e).v]) out.push_back(e);
  }
  return out;
}

int ball_cycle_rank(const Graph& g, Vertex v, int radius) {
  const auto members = ball_with_depth(g, v, radius);
  std::vector<char> inside(g.n(), 0);
  for (auto [x, dx] : members) inside[x] = 1;
  long long twice_edges = 0;
  for (auto [x, dx] : members) {
    for (Vertex y : g.neighbors(x)) twice_edges += inside[y];
  }
  return static_cast<int>(twice_edges / 2 - static_cast<long long>(members.size()) + 1);
}

bool is_k_root(const Graph& g, Vertex v, int k) {
  if (k < 0) throw Error(ErrorKind::RangeError, "k must be >= 0");
  // BFS balls are connected, so the induced subgraph is a tree iff it has |B|-1 edges.
  return ball_cycle_rank(g, v, k) == 0;
}

namespace {

// Counts closed simple paths through `start` using only vertices > start, so
// each cycle is found from its minimum vertex, once per orientation.
void cycle_dfs(const Graph& g, Vertex start, Vertex x, int length, int l_max, std::vector<char>& on_path,
               std::vector<std::uint64_t>& counts) {
  for (Vertex y : g.neighbors(x)) {
    if (y == start && length >= 3) {
      ++counts[length];
    } else if (y > start && !on_path[y] && length < l_max) {
      on_path[y] = 1;
      cycle_dfs(g, start, y, length + 1, l_max, on_path, counts);
      on_path[y] = 0;
    }
  }
}

// True when a simple cycle of length <= l_max passes through `start`.
bool on_short_cycle(const Graph& g, Vertex start, Vertex x, int length, int l_max, std::vector<char>& on_path) {
  for (Vertex y : g.neighbors(x)) {
    if (y == start && length >= 3) return true;
    if (y != start && !on_path[y] && length < l_max) {
      on_path[y] = 1;
      const bool found = on_short_cycle(g, start, y, length + 1, l_max, on_path);
      on_path[y] = 0;
      if (found) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::uint64_t> cycle_counts(const Graph& g, int l_max) {
  if (l_max < 3) throw Error(ErrorKind::RangeError, "l_max must be >= 3");
  check_cycle_budget(g.d(), l_max);
  std::vector<std::uint64_t> counts(l_max + 1, 0);
  std::vector<char> on_path(g.n(), 0);
  for (Vertex s = 0; s < g.n(); ++s) {
    on_path[s] = 1;
    cycle_dfs(g, s, s, 1, l_max, on_path, counts);
    on_path[s] = 0;
  }
  for (auto& c : counts) c /= 2;
  return counts;
}

std::vector<Vertex> short_cycle_vertices(const Graph& g, double r) {
  if (!std::isfinite(r)) throw Error(ErrorKind::BudgetExceeded, "r is infinite; no finite cycle search");
  // Lengths strictly below r.
  const int l_max = static_cast<int>(std::ceil(r)) - 1;
  std::vector<Vertex> out;
  if (l_max < 3) return out;
  check_cycle_budget(g.d(), l_max);
  std::vector<char> on_path(g.n(), 0);
  for (Vertex s = 0; s < g.n(); ++s) {
    on_path[s] = 1;
    if (on_short_cycle(g, s, s, 1, l_max, on_path)) out.push_back(s);
    on_path[s] = 0;
  }
  return out;
}

void save_graph(const Graph& g, std::ostream& out) {
  out << g.n() << ' ' << g.d() << '\n';
  for (const auto& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot open " + path + " for writing");
  save_graph(g, out);
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + msg);
}

bool parse_int_pair(const std::string& text, long long& a, long long& b) {
  std::istringstream ss(text);
  std::string extra;
  if (!(ss >> a >> b)) return false;
  return !(ss >> extra);
}

}  // namespace

Graph load_graph(std::istream& stream) {
  std::string content((std::istreambuf_iterator<char>(stream)), std::istreambuf_iterator<char>());
  if (content.empty() || content.back() != '\n') {
    parse_fail(static_cast<int>(std::count(content.begin(), content.end(), '\n')) + 1,
               "file must be newline-terminated");
  }
  std::istringstream in(content);
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) parse_fail(line_no, "missing 'n d' header");
  long long n = 0, d = 0;
  if (!parse_int_pair(line, n, d) || n <= 0 || d <= 0) parse_fail(line_no, "malformed header '" + line + "'");
  if ((n * d) % 2 != 0) parse_fail(line_no, "n*d is odd");
  std::vector<Edge> edges;
  std::optional<Edge> previous;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) parse_fail(line_no, "empty line");
    long long u = 0, v = 0;
    if (!parse_int_pair(line, u, v)) parse_fail(line_no, "malformed edge '" + line + "'");
    if (!(0 <= u && u < v && v < n)) parse_fail(line_no, "edge must satisfy 0 <= u < v < n");
    Edge e{static_cast<Vertex>(u), static_cast<Vertex>(v)};
    if (previous && !(*previous < e)) {
      parse_fail(line_no, *previous == e ? "duplicate edge" : "edges not in ascending order");
    }
    previous = e;
    edges.push_back(e);
  }
  try {
    return Graph::from_edges(static_cast<int>(n), static_cast<int>(d), std::move(edges));
  } catch (const Error& err) {
    parse_fail(line_no, err.what());
  }
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open graph file " + path);
  return load_graph(in);
}

}  // namespace dynwalk
