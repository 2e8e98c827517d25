#include "dynwalk/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

void check_walk_budget(int h, int i) {
  if (h < 0 || i < 0) throw Error(ErrorKind::RangeError, "h and i must be non-negative");
  if (h + 2 * i > kWalkLengthBudget) {
    throw Error(ErrorKind::BudgetExceeded, "h + 2i = " + std::to_string(h + 2 * i) + " exceeds budget " +
                                               std::to_string(kWalkLengthBudget));
  }
}

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int j = 1; j <= k; ++j) {
    out *= (n - k + j);
    out /= j;
  }
  return out;
}

std::uint64_t to_u64_checked(const BigInt& value) {
  if (value > std::numeric_limits<std::uint64_t>::max() / 2) {
    throw Error(ErrorKind::BudgetExceeded, "walk count does not fit the 63-bit enumeration counter");
  }
  return static_cast<std::uint64_t>(value);
}

// Fixed-precision completion counts for the pruned enumerators.
class CompletionCounts {
 public:
  CompletionCounts(int d, int h, int i) : max_steps_(h + 2 * i), table_(d, h, h + 2 * i) {
    values_.resize(static_cast<std::size_t>(h + max_steps_ + 1) * (max_steps_ + 1));
    for (int depth = 0; depth <= h + max_steps_; ++depth) {
      for (int m = 0; m <= max_steps_; ++m) {
        values_[static_cast<std::size_t>(depth) * (max_steps_ + 1) + m] = to_u64_checked(table_.at(depth, m));
      }
    }
  }
  std::uint64_t at(int depth, int steps_left) const {
    return values_[static_cast<std::size_t>(depth) * (max_steps_ + 1) + steps_left];
  }

 private:
  int max_steps_;
  CompletionTable table_;
  std::vector<std::uint64_t> values_;
};

// Shared NBWT walker state: the current non-backtracking path from the root.
struct NbwtCursor {
  const Graph& g;
  int length;     // h + 2i
  int max_up;     // h + i
  int max_down;   // i
  std::vector<Vertex> path;

  int depth() const { return static_cast<int>(path.size()) - 1; }
  int ups(int step) const { return (step + depth()) / 2; }
  int downs(int step) const { return (step - depth()) / 2; }

  template <class Fn>
  void for_each_move(int step, Fn&& fn) {
    const int dpt = depth();
    if (dpt > 0 && downs(step) < max_down) {
      Vertex top = path.back();
      path.pop_back();
      fn();
      path.push_back(top);
    }
    if (ups(step) < max_up) {
      const Vertex cur = path.back();
      const Vertex back = dpt > 0 ? path[path.size() - 2] : -1;
      for (Vertex y : g.neighbors(cur)) {
        if (y == back) continue;
        path.push_back(y);
        fn();
        path.pop_back();
      }
    }
  }
};

}  // namespace

int Walk::stationary_count() const {
  int count = 0;
  for (std::size_t j = 0; j + 1 < vertices.size(); ++j) count += vertices[j] == vertices[j + 1];
  return count;
}

bool Walk::is_valid(const Graph& g) const {
  if (vertices.empty()) return false;
  for (Vertex v : vertices) {
    if (v < 0 || v >= g.n()) return false;
  }
  for (std::size_t j = 0; j + 1 < vertices.size(); ++j) {
    if (vertices[j] != vertices[j + 1] && !g.adjacent(vertices[j], vertices[j + 1])) return false;
  }
  return true;
}

BigInt tilde_omega(int d, int h, int i) {
  if (h < 0 || i < 0) throw Error(ErrorKind::RangeError, "h and i must be non-negative");
  BigInt numerator = BigInt(h + 1) * binomial(h + 2 * i, h + i) * boost::multiprecision::pow(BigInt(d - 1), h + i);
  const BigInt denominator = h + i + 1;
  if (numerator % denominator != 0) throw Error(ErrorKind::DomainError, "ballot count not integral");
  return numerator / denominator;
}

namespace {

std::uint64_t tree_walk_dfs(int root_children, int other_children, int depth, int ups_left, int downs_left) {
  if (ups_left == 0 && downs_left == 0) return 1;
  std::uint64_t total = 0;
  if (downs_left > 0 && depth > 0) total += tree_walk_dfs(root_children, other_children, depth - 1, ups_left, downs_left - 1);
  if (ups_left > 0) {
    const int children = depth == 0 ? root_children : other_children;
    for (int c = 0; c < children; ++c) {
      total += tree_walk_dfs(root_children, other_children, depth + 1, ups_left - 1, downs_left);
    }
  }
  return total;
}

}  // namespace

BigInt count_tree_walks_bruteforce(int root_children, int other_children, int h, int i) {
  check_walk_budget(h, i);
  return BigInt(tree_walk_dfs(root_children, other_children, 0, h + i, i));
}

BigInt omega_bruteforce(int d, int h, int i) { return count_tree_walks_bruteforce(d, d - 1, h, i); }

CompletionTable::CompletionTable(int d, int target, int max_steps) : max_steps_(max_steps) {
  const int max_depth = target + max_steps;
  table_.assign(static_cast<std::size_t>(max_depth + 1) * (max_steps + 1), BigInt(0));
  auto cell = [&](int depth, int m) -> BigInt& {
    return table_[static_cast<std::size_t>(depth) * (max_steps_ + 1) + m];
  };
  for (int depth = 0; depth <= max_depth; ++depth) cell(depth, 0) = depth == target ? 1 : 0;
  for (int m = 1; m <= max_steps; ++m) {
    for (int depth = 0; depth <= max_depth; ++depth) {
      BigInt value = 0;
      if (depth + 1 <= max_depth) value += BigInt(depth == 0 ? d : d - 1) * cell(depth + 1, m - 1);
      if (depth > 0) value += cell(depth - 1, m - 1);
      cell(depth, m) = value;
    }
  }
}

const BigInt& CompletionTable::at(int depth, int steps_left) const {
  return table_[static_cast<std::size_t>(depth) * (max_steps_ + 1) + steps_left];
}

void enumerate_constrained_walks(const Graph& g, Vertex u, int h, int i,
                                 const std::function<bool(const Walk&)>& visitor) {
  check_walk_budget(h, i);
  NbwtCursor cursor{g, h + 2 * i, h + i, i, {u}};
  Walk walk;
  walk.vertices.reserve(h + 2 * i + 1);
  walk.vertices.push_back(u);
  bool stopped = false;
  std::function<void(int)> recurse = [&](int step) {
    if (stopped) return;
    if (step == cursor.length) {
      if (!visitor(walk)) stopped = true;
      return;
    }
    cursor.for_each_move(step, [&] {
      if (stopped) return;
      walk.vertices.push_back(cursor.path.back());
      recurse(step + 1);
      walk.vertices.pop_back();
    });
  };
  recurse(0);
}

std::uint64_t count_constrained_walks(const Graph& g, Vertex u, int h, int i) {
  std::uint64_t count = 0;
  enumerate_constrained_walks(g, u, h, i, [&](const Walk&) {
    ++count;
    return true;
  });
  return count;
}

VertexSet::VertexSet(int n, std::span<const Vertex> members) : mask_(n, 0) {
  for (Vertex v : members) {
    if (!mask_[v]) {
      mask_[v] = 1;
      members_.push_back(v);
    }
  }
  std::sort(members_.begin(), members_.end());
}

bool is_r_acyclic(const Walk& w, const VertexSet& short_set) {
  return std::none_of(w.vertices.begin(), w.vertices.end(), [&](Vertex v) { return short_set.contains(v); });
}

double SparseFraction::value() const {
  if (total == 0) return 0.0;
  return static_cast<double>(BigRational(acyclic, total));
}

ShortCycleIndex::ShortCycleIndex(const Graph& g, std::vector<Vertex> short_vertices)
    : set_(g.n(), short_vertices), dist_(bfs_distances(g, set_.members())) {}

SparseFraction hi_sparse_fraction(const Graph& g, Vertex u, int h, int i, const ShortCycleIndex& index) {
  check_walk_budget(h, i);
  const CompletionCounts completions(g.d(), h, i);
  SparseFraction out;
  out.total = completions.at(0, h + 2 * i);
  NbwtCursor cursor{g, h + 2 * i, h + i, i, {u}};
  std::function<std::uint64_t(int)> good = [&](int step) -> std::uint64_t {
    const Vertex cur = cursor.path.back();
    if (index.set().contains(cur)) return 0;
    const int left = cursor.length - step;
    const int dist = index.distance(cur);
    // Every vertex reachable in `left` steps is within graph distance `left`.
    if (dist < 0 || dist > left) return completions.at(cursor.depth(), left);
    std::uint64_t sum = 0;
    cursor.for_each_move(step, [&] { sum += good(step + 1); });
    return sum;
  };
  out.acyclic = good(0);
  return out;
}

SparseFraction hi_sparse_fraction(const Graph& g, Vertex u, int h, int i, const VertexSet& short_set) {
  return hi_sparse_fraction(g, u, h, i, ShortCycleIndex(g, short_set.members()));
}

GoodVertexReport good_vertices(const Graph& g, const DerivedConstants& consts, const GoodVertexOptions& options) {
  check_walk_budget(options.h_cap, options.i_cap);
  GoodVertexReport report;
  report.r_used = options.r_override.value_or(consts.r);
  report.k_used = consts.k;
  report.h_cap = options.h_cap;
  report.i_cap = options.i_cap;
  report.threshold = 1.0 - 1.0 / std::pow(consts.log_n, 3);
  report.short_cycle = short_cycle_vertices(g, report.r_used);
  const ShortCycleIndex index(g, report.short_cycle);

  for (Vertex v = 0; v < g.n(); ++v) {
    if (!is_k_root(g, v, consts.k)) continue;
    report.k_roots.push_back(v);
    bool sparse = true;
    for (int h = 0; h <= options.h_cap && sparse; ++h) {
      for (int i = 0; i <= options.i_cap && sparse; ++i) {
        const auto frac = hi_sparse_fraction(g, v, h, i, index);
        sparse = frac.value() >= report.threshold;
      }
    }
    if (sparse) report.good.push_back(v);
  }
  return report;
}

std::uint64_t count_simple_paths(const Graph& g, Vertex u, Vertex v, int h) {
  if (h < 0) throw Error(ErrorKind::RangeError, "h must be >= 0");
  if (h > kWalkLengthBudget) throw Error(ErrorKind::BudgetExceeded, "path length exceeds budget");
  const Vertex target[] = {v};
  const auto dist = bfs_distances(g, target);
  std::vector<char> on_path(g.n(), 0);
  std::function<std::uint64_t(Vertex, int)> dfs = [&](Vertex x, int left) -> std::uint64_t {
    if (left == 0) return x == v ? 1 : 0;
    if (dist[x] < 0 || dist[x] > left) return 0;
    std::uint64_t sum = 0;
    for (Vertex y : g.neighbors(x)) {
      if (on_path[y]) continue;
      on_path[y] = 1;
      sum += dfs(y, left - 1);
      on_path[y] = 0;
    }
    return sum;
  };
  on_path[u] = 1;
  return dfs(u, h);
}

BigInt count_walks_through(const Graph& g, Vertex u, int h, int i) {
  check_walk_budget(h, i);
  const CompletionCounts completions(g.d(), h, i);
  const Vertex source[] = {u};
  const auto dist = bfs_distances(g, source);
  BigInt total = 0;
  for (Vertex v = 0; v < g.n(); ++v) {
    if (dist[v] < 0 || dist[v] > h + i) continue;
    NbwtCursor cursor{g, h + 2 * i, h + i, i, {v}};
    std::function<std::uint64_t(int)> through = [&](int step) -> std::uint64_t {
      const Vertex cur = cursor.path.back();
      const int left = cursor.length - step;
      if (cur == u) return completions.at(cursor.depth(), left);
      if (dist[cur] > left) return 0;
      std::uint64_t sum = 0;
      cursor.for_each_move(step, [&] { sum += through(step + 1); });
      return sum;
    };
    total += through(0);
  }
  return total;
}

int phase1_qualifying_neighbours(const Graph& g, Vertex u, int h, int i, const VertexSet& short_set,
                                 const VertexSet& targets) {
  check_walk_budget(h, i);
  const BigInt needed = tilde_omega(g.d(), h, i);
  int qualifying = 0;
  for (Vertex w : g.neighbors(u)) {
    NbwtCursor cursor{g, h + 2 * i, h + i, i, {w}};
    std::function<std::uint64_t(int)> count = [&](int step) -> std::uint64_t {
      const Vertex cur = cursor.path.back();
      if (short_set.contains(cur)) return 0;
      if (step == cursor.length) return targets.contains(cur) ? 1 : 0;
      std::uint64_t sum = 0;
      cursor.for_each_move(step, [&] { sum += count(step + 1); });
      return sum;
    };
    if (BigInt(count(0)) * 2 >= needed) ++qualifying;
  }
  return qualifying;
}

}  // namespace dynwalk
