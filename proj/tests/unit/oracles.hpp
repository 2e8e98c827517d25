#pragma once

// Small independent reference implementations used by the unit tests.

#include <cmath>
#include <numeric>
#include <vector>

#include "dynwalk/environment.hpp"
#include "dynwalk/graph.hpp"

namespace oracle {

inline int find(std::vector<int>& parent, int v) {
  while (parent[v] != v) v = parent[v] = parent[parent[v]];
  return v;
}

/// Components of (V, open edges) by union-find.
inline int components(const dynwalk::Graph& g, const dynwalk::EdgeConfig& eta) {
  std::vector<int> parent(g.n());
  std::iota(parent.begin(), parent.end(), 0);
  int count = g.n();
  for (int e = 0; e < g.num_edges(); ++e) {
    if (!eta.test(e)) continue;
    const int a = find(parent, g.edge(e).u);
    const int b = find(parent, g.edge(e).v);
    if (a != b) {
      parent[a] = b;
      --count;
    }
  }
  return count;
}

/// e is cut iff closing it leaves one more component than opening it.
inline bool cut(const dynwalk::Graph& g, dynwalk::EdgeConfig eta, int e) {
  eta.set(e, true);
  const int with = components(g, eta);
  eta.set(e, false);
  return components(g, eta) == with + 1;
}

/// Normalised random-cluster probabilities over all 2^|E| configurations.
inline std::vector<double> rc_law(const dynwalk::Graph& g, double p, double q) {
  const int m = g.num_edges();
  std::vector<double> w(std::size_t{1} << m);
  double total = 0;
  for (std::uint64_t i = 0; i < w.size(); ++i) {
    const auto eta = dynwalk::EdgeConfig::from_index(m, i);
    const int open = eta.open_count();
    w[i] = std::pow(p, open) * std::pow(1 - p, m - open) * std::pow(q, components(g, eta));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

inline double poisson_pmf(double mean, int k) { return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0)); }

}  // namespace oracle
