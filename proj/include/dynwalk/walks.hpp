#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "dynwalk/graph.hpp"
#include "dynwalk/params.hpp"

namespace dynwalk {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// Largest h + 2i accepted by the exhaustive walk enumerators.
inline constexpr int kWalkLengthBudget = 14;

struct Walk {
  std::vector<Vertex> vertices;  // x_0 .. x_alpha

  int alpha() const { return static_cast<int>(vertices.size()) - 1; }
  int stationary_count() const;
  /// Consecutive vertices equal or adjacent in g.
  bool is_valid(const Graph& g) const;
};

struct HiWalkCount {
  int h = 0;
  int i = 0;
  BigInt tilde_omega;
  std::optional<BigInt> omega;
};

/// Ballot closed form ((h+1)/(h+i+1)) C(h+2i, h+i) (d-1)^(h+i).
BigInt tilde_omega(int d, int h, int i);

/// Depth-first enumeration of (h,i)-constrained walks on the rooted tree whose
/// root has `root_children` children and every other node `other_children`.
BigInt count_tree_walks_bruteforce(int root_children, int other_children, int h, int i);

/// omega_{h,i} on the d-regular tree, by enumeration.
BigInt omega_bruteforce(int d, int h, int i);

/// Number of ways to finish a constrained walk on the d-regular tree from a
/// node at `depth` with `steps_left` steps, ending at depth `target`.
class CompletionTable {
 public:
  CompletionTable(int d, int target, int max_steps);
  const BigInt& at(int depth, int steps_left) const;

 private:
  int max_steps_;
  std::vector<BigInt> table_;  // (depth, steps) with depth <= max_steps
};

/// Streams every (h,i)-constrained walk on the NBWT rooted at u, projected to
/// vertex labels. The visitor returns false to stop early.
void enumerate_constrained_walks(const Graph& g, Vertex u, int h, int i,
                                 const std::function<bool(const Walk&)>& visitor);
std::uint64_t count_constrained_walks(const Graph& g, Vertex u, int h, int i);

/// Bitmask-style membership over vertices.
class VertexSet {
 public:
  VertexSet() = default;
  VertexSet(int n, std::span<const Vertex> members);
  bool contains(Vertex v) const { return v >= 0 && v < static_cast<int>(mask_.size()) && mask_[v]; }
  const std::vector<Vertex>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<char> mask_;
  std::vector<Vertex> members_;
};

bool is_r_acyclic(const Walk& w, const VertexSet& short_set);

struct SparseFraction {
  BigInt acyclic;  // r-acyclic (h,i)-walks from u
  BigInt total;    // all (h,i)-walks from u on the NBWT
  double value() const;
};

/// Precomputed distances to the short-cycle set used to prune enumeration.
class ShortCycleIndex {
 public:
  ShortCycleIndex(const Graph& g, std::vector<Vertex> short_vertices);
  const VertexSet& set() const { return set_; }
  int distance(Vertex v) const { return dist_[v]; }  // -1 when the set is empty

 private:
  VertexSet set_;
  std::vector<int> dist_;
};

SparseFraction hi_sparse_fraction(const Graph& g, Vertex u, int h, int i, const ShortCycleIndex& index);
SparseFraction hi_sparse_fraction(const Graph& g, Vertex u, int h, int i, const VertexSet& short_set);

struct GoodVertexOptions {
  int h_cap = 4;
  int i_cap = 4;
  std::optional<double> r_override;  // desk-scale stand-in for the derived r
};

struct GoodVertexReport {
  std::vector<Vertex> good;
  std::vector<Vertex> k_roots;
  std::vector<Vertex> short_cycle;
  double r_used = 0;
  int k_used = 0;
  double threshold = 0;  // 1 - 1/(log n)^3
  int h_cap = 0;
  int i_cap = 0;
};

GoodVertexReport good_vertices(const Graph& g, const DerivedConstants& consts, const GoodVertexOptions& options);

/// Exact count of simple paths of length h from u to v.
std::uint64_t count_simple_paths(const Graph& g, Vertex u, Vertex v, int h);

/// Sum over start vertices v of the (h,i)-constrained NBWT walks from v that
/// visit a node labelled u.
BigInt count_walks_through(const Graph& g, Vertex u, int h, int i);

/// Neighbours w of u from which at least tilde_omega/2 (h,i)-constrained,
/// r-acyclic walks end in `targets`.
int phase1_qualifying_neighbours(const Graph& g, Vertex u, int h, int i, const VertexSet& short_set,
                                 const VertexSet& targets);

}  // namespace dynwalk
