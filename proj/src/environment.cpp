#include "dynwalk/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

struct UnionFind {
  std::vector<int> parent;
  int components;
  explicit UnionFind(int n) : parent(n), components(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

EdgeConfig::EdgeConfig(int num_edges, bool all_open)
    : size_(num_edges), open_count_(0), words_((num_edges + 63) / 64, 0) {
  if (all_open) {
    for (EdgeId e = 0; e < num_edges; ++e) set(e, true);
  }
}

EdgeConfig EdgeConfig::from_index(int num_edges, std::uint64_t index) {
  if (num_edges > 64) throw Error(ErrorKind::RangeError, "from_index needs |E| <= 64");
  EdgeConfig out(num_edges);
  if (num_edges < 64 && (index >> num_edges) != 0) throw Error(ErrorKind::RangeError, "index has bits beyond |E|");
  if (num_edges > 0) out.words_[0] = index;
  out.open_count_ = std::popcount(index);
  return out;
}

EdgeConfig EdgeConfig::from_hex(int num_edges, const std::string& hex) {
  const std::size_t digits = (static_cast<std::size_t>(num_edges) + 3) / 4;
  if (hex.size() != digits) {
    throw Error(ErrorKind::ParseError, "config hex '" + hex + "' must have " + std::to_string(digits) + " digits");
  }
  EdgeConfig out(num_edges);
  for (std::size_t k = 0; k < digits; ++k) {
    const int value = hex_value(hex[digits - 1 - k]);
    if (value < 0) throw Error(ErrorKind::ParseError, "config hex must be lowercase hexadecimal");
    for (int b = 0; b < 4; ++b) {
      if (!((value >> b) & 1)) continue;
      const auto e = static_cast<EdgeId>(4 * k + b);
      if (e >= num_edges) throw Error(ErrorKind::ParseError, "config hex sets a bit beyond |E|");
      out.set(e, true);
    }
  }
  return out;
}

std::string EdgeConfig::to_hex() const {
  const std::size_t digits = (static_cast<std::size_t>(size_) + 3) / 4;
  std::string out(digits, '0');
  for (std::size_t k = 0; k < digits; ++k) {
    int value = 0;
    for (int b = 0; b < 4; ++b) {
      const auto e = static_cast<EdgeId>(4 * k + b);
      if (e < size_ && test(e)) value |= 1 << b;
    }
    out[digits - 1 - k] = "0123456789abcdef"[value];
  }
  return out;
}

bool EdgeConfig::leq(const EdgeConfig& other) const {
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if (words_[w] & ~other.words_[w]) return false;
  }
  return true;
}

int kappa(const Graph& g, const EdgeConfig& eta) {
  UnionFind uf(g.n());
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (eta.test(e)) uf.unite(g.edge(e).u, g.edge(e).v);
  }
  return uf.components;
}

bool is_cut_edge(const Graph& g, const EdgeConfig& eta, EdgeId e) {
  CutEdgeQuery query(g);
  return query(eta, e);
}

CutEdgeQuery::CutEdgeQuery(const Graph& g) : g_(&g), stamp_(g.n(), 0) { stack_.reserve(g.n()); }

bool CutEdgeQuery::operator()(const EdgeConfig& eta, EdgeId e) {
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  const Edge& target = g_->edge(e);
  stack_.clear();
  stack_.push_back(target.u);
  stamp_[target.u] = epoch_;
  while (!stack_.empty()) {
    const Vertex x = stack_.back();
    stack_.pop_back();
    const auto nbrs = g_->neighbors(x);
    for (int j = 0; j < g_->d(); ++j) {
      const EdgeId f = g_->slot_edge(x, j);
      if (f == e || !eta.test(f)) continue;
      const Vertex y = nbrs[j];
      if (y == target.v) return false;
      if (stamp_[y] != epoch_) {
        stamp_[y] = epoch_;
        stack_.push_back(y);
      }
    }
  }
  return true;
}

SmallCutTable::SmallCutTable(const Graph& g) {
  if (g.num_edges() > kMaxEdges) {
    throw Error(ErrorKind::CapExceeded, "cut table needs |E| <= " + std::to_string(kMaxEdges));
  }
  const std::uint64_t states = 1ULL << g.num_edges();
  masks_.assign(states, 0);
  CutEdgeQuery query(g);
  for (std::uint64_t idx = 0; idx < states; ++idx) {
    const EdgeConfig eta = EdgeConfig::from_index(g.num_edges(), idx);
    std::uint32_t mask = 0;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      if (query(eta, e)) mask |= 1U << e;
    }
    masks_[idx] = mask;
  }
}

double rc_log_weight(int num_edges, int open, int components, double p, double q) {
  return open * std::log(p) + (num_edges - open) * std::log1p(-p) + components * std::log(q);
}

double rc_log_weight(const Graph& g, const EdgeConfig& eta, double p, double q) {
  return rc_log_weight(g.num_edges(), eta.open_count(), kappa(g, eta), p, q);
}

double DistributionTable::total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

std::string DistributionTable::label(std::size_t idx) const {
  const std::uint64_t key = support[idx];
  switch (kind) {
    case Kind::Config:
      return EdgeConfig::from_index(num_edges, key).to_hex();
    case Kind::ConfigVertex:
      return EdgeConfig::from_index(num_edges, key / n).to_hex() + ":" + std::to_string(key % n);
    case Kind::Vertex:
      return std::to_string(key);
  }
  return {};
}

void DistributionTable::write_csv(std::ostream& out) const {
  out << "state,probability\n";
  char buf[64];
  for (std::size_t i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", probs[i]);
    out << label(i) << ',' << buf << '\n';
  }
}

DistributionTable exact_rc_distribution(const Graph& g, double p, double q, int cap) {
  if (cap > kExactHardCap) cap = kExactHardCap;
  if (g.num_edges() > cap) {
    throw Error(ErrorKind::CapExceeded,
                "|E| = " + std::to_string(g.num_edges()) + " exceeds exact enumeration cap " + std::to_string(cap));
  }
  const int m = g.num_edges();
  const std::uint64_t states = 1ULL << m;
  DistributionTable table;
  table.kind = DistributionTable::Kind::Config;
  table.num_edges = m;
  table.n = g.n();
  table.support.resize(states);
  table.probs.resize(states);
  double max_log = -INFINITY;
  for (std::uint64_t idx = 0; idx < states; ++idx) {
    const EdgeConfig eta = EdgeConfig::from_index(m, idx);
    table.support[idx] = idx;
    table.probs[idx] = rc_log_weight(g, eta, p, q);
    max_log = std::max(max_log, table.probs[idx]);
  }
  double norm = 0.0;
  for (auto& v : table.probs) {
    v = std::exp(v - max_log);
    norm += v;
  }
  for (auto& v : table.probs) v /= norm;
  return table;
}

DistributionTable exact_joint_stationary(const Graph& g, double p, double q, int cap) {
  const DistributionTable configs = exact_rc_distribution(g, p, q, cap);
  DistributionTable table;
  table.kind = DistributionTable::Kind::ConfigVertex;
  table.num_edges = configs.num_edges;
  table.n = g.n();
  table.support.resize(configs.size() * g.n());
  table.probs.resize(configs.size() * g.n());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (Vertex x = 0; x < g.n(); ++x) {
      const std::uint64_t key = joint_key(configs.support[c], g.n(), x);
      table.support[key] = key;
      table.probs[key] = configs.probs[c] / g.n();
    }
  }
  return table;
}

double tv_distance(const DistributionTable& a, const DistributionTable& b) {
  if (a.kind != b.kind || a.support != b.support) {
    throw Error(ErrorKind::SupportMismatch, "tables enumerate different supports");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.probs[i] - b.probs[i]);
  return std::min(1.0, 0.5 * sum);
}

DistributionTable empirical_like(const DistributionTable& reference, const std::vector<std::uint64_t>& counts) {
  if (counts.size() != reference.size()) throw Error(ErrorKind::SupportMismatch, "count vector size mismatch");
  DistributionTable out = reference;
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  for (std::size_t i = 0; i < counts.size(); ++i) out.probs[i] = total > 0 ? counts[i] / total : 0.0;
  return out;
}

}  // namespace dynwalk
