#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dynwalk/graph.hpp"

namespace dynwalk {

/// Indicator vector over edge ids; edge 0 is the least significant bit.
class EdgeConfig {
 public:
  EdgeConfig() = default;
  explicit EdgeConfig(int num_edges, bool all_open = false);

  static EdgeConfig from_index(int num_edges, std::uint64_t index);  // |E| <= 64
  static EdgeConfig from_hex(int num_edges, const std::string& hex);

  int size() const { return size_; }
  int open_count() const { return open_count_; }

  bool test(EdgeId e) const { return (words_[e >> 6] >> (e & 63)) & 1ULL; }
  void set(EdgeId e, bool open) {
    const std::uint64_t bit = 1ULL << (e & 63);
    std::uint64_t& w = words_[e >> 6];
    const bool was = w & bit;
    if (was == open) return;
    w ^= bit;
    open_count_ += open ? 1 : -1;
  }

  /// Low 64 bits; the full state when |E| <= 64.
  std::uint64_t index() const { return words_.empty() ? 0 : words_[0]; }
  const std::vector<std::uint64_t>& words() const { return words_; }

  std::string to_hex() const;

  bool operator==(const EdgeConfig& other) const = default;

  /// Pointwise order: every edge open here is open in `other`.
  bool leq(const EdgeConfig& other) const;

 private:
  int size_ = 0;
  int open_count_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Number of connected components of (V, open edges), isolated vertices included.
int kappa(const Graph& g, const EdgeConfig& eta);

/// True iff the endpoints of e are disconnected in (V, open edges minus e).
/// The state of e itself is irrelevant.
bool is_cut_edge(const Graph& g, const EdgeConfig& eta, EdgeId e);

/// Reusable BFS scratch space for repeated cut-edge queries on one graph.
class CutEdgeQuery {
 public:
  explicit CutEdgeQuery(const Graph& g);
  bool operator()(const EdgeConfig& eta, EdgeId e);

 private:
  const Graph* g_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<Vertex> stack_;
};

/// Precomputed cut bitmasks for every configuration of a small graph.
class SmallCutTable {
 public:
  static constexpr int kMaxEdges = 20;
  explicit SmallCutTable(const Graph& g);
  bool is_cut(std::uint64_t config_index, EdgeId e) const { return (masks_[config_index] >> e) & 1U; }
  std::uint32_t mask(std::uint64_t config_index) const { return masks_[config_index]; }

 private:
  std::vector<std::uint32_t> masks_;
};

/// Unnormalised log weight |eta| log p + (|E|-|eta|) log(1-p) + kappa log q.
double rc_log_weight(const Graph& g, const EdgeConfig& eta, double p, double q);
double rc_log_weight(int num_edges, int open, int components, double p, double q);

/// Probability table over an enumerated support. Keys identify states:
/// a configuration index, or config_index * n + vertex for joint tables.
struct DistributionTable {
  enum class Kind { Config, ConfigVertex, Vertex };
  Kind kind = Kind::Config;
  int num_edges = 0;
  int n = 0;
  std::vector<std::uint64_t> support;
  std::vector<double> probs;

  std::size_t size() const { return support.size(); }
  double total() const;
  /// State label for CSV export: hex config, "hex:vertex", or the vertex.
  std::string label(std::size_t idx) const;
  void write_csv(std::ostream& out) const;
};

inline constexpr int kExactSoftCap = 20;
inline constexpr int kExactHardCap = 24;

DistributionTable exact_rc_distribution(const Graph& g, double p, double q, int cap = kExactSoftCap);
DistributionTable exact_joint_stationary(const Graph& g, double p, double q, int cap = kExactSoftCap);

/// Half the L1 distance. Throws SupportMismatch unless supports agree in order.
double tv_distance(const DistributionTable& a, const DistributionTable& b);

/// Empirical table over the support of `reference` from per-state counts indexed like it.
DistributionTable empirical_like(const DistributionTable& reference, const std::vector<std::uint64_t>& counts);

/// Dense index of a table key within a Config or ConfigVertex table built by this module.
inline std::uint64_t joint_key(std::uint64_t config_index, int n, Vertex x) {
  return config_index * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(x);
}

}  // namespace dynwalk
