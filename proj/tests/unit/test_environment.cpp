#include <doctest.h>

#include <cmath>

#include "dynwalk/environment.hpp"
#include "dynwalk/errors.hpp"
#include "oracles.hpp"

using namespace dynwalk;

TEST_CASE("kappa and cut status agree with union-find on every K4 configuration") {
  const Graph g = complete_graph_k4();
  CutEdgeQuery query(g);
  const SmallCutTable table(g);
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto eta = EdgeConfig::from_index(6, i);
    CHECK(kappa(g, eta) == oracle::components(g, eta));
    for (EdgeId e = 0; e < 6; ++e) {
      const bool expected = oracle::cut(g, eta, e);
      CHECK(is_cut_edge(g, eta, e) == expected);
      CHECK(query(eta, e) == expected);
      CHECK(table.is_cut(i, e) == expected);
    }
  }
}

TEST_CASE("cut status on a seeded 3-regular graph with 12 edges") {
  const Graph g = generate_regular(8, 3, 4);
  Rng rng(3);
  for (int k = 0; k < 400; ++k) {
    const auto eta = EdgeConfig::from_index(12, rng.below(4096));
    const EdgeId e = static_cast<EdgeId>(rng.below(12));
    EdgeConfig lo = eta, hi = eta;
    lo.set(e, false);
    hi.set(e, true);
    CHECK(is_cut_edge(g, eta, e) == (kappa(g, lo) == kappa(g, hi) + 1));
  }
}

TEST_CASE("random-cluster log weight at the empty configuration") {
  const Graph g = generate_regular(8, 3, 1);
  CHECK(rc_log_weight(g, EdgeConfig(12), 0.3, 2) == doctest::Approx(12 * std::log(0.7) + 8 * std::log(2.0)));
}

TEST_CASE("weight ratio across a cut edge is (p/(1-p))/q") {
  const Graph g = complete_graph_k4();
  EdgeConfig lo(6), hi(6);
  hi.set(0, true);
  const double ratio = std::exp(rc_log_weight(g, hi, 0.3, 2) - rc_log_weight(g, lo, 0.3, 2));
  CHECK(ratio == doctest::Approx((0.3 / 0.7) / 2));
}

TEST_CASE("exact random-cluster law matches brute force") {
  const Graph g = complete_graph_k4();
  const DistributionTable t = exact_rc_distribution(g, 0.3, 2);
  const auto ref = oracle::rc_law(g, 0.3, 2);
  REQUIRE(t.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(t.probs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  CHECK(t.total() == doctest::Approx(1.0));
}

TEST_CASE("exact joint stationary law is rc law times uniform vertex") {
  const Graph g = generate_regular(8, 3, 1);
  const DistributionTable j = exact_joint_stationary(g, 0.3, 2);
  CHECK(j.size() == 32768);
  const DistributionTable rc = exact_rc_distribution(g, 0.3, 2);
  for (std::uint64_t c : {0ULL, 17ULL, 4095ULL}) {
    for (Vertex x : {0, 7}) CHECK(j.probs[joint_key(c, 8, x)] == doctest::Approx(rc.probs[c] / 8));
  }
}

TEST_CASE("total variation distance") {
  DistributionTable a, b;
  a.kind = b.kind = DistributionTable::Kind::Vertex;
  a.support = b.support = {0, 1};
  a.probs = {0.5, 0.5};
  b.probs = {1.0, 0.0};
  CHECK(tv_distance(a, b) == doctest::Approx(0.5));
  DistributionTable c = b;
  c.support = {0, 2};
  CHECK_THROWS_AS(tv_distance(a, c), Error);
}

TEST_CASE("edge configuration hex round trip") {
  EdgeConfig eta(70);
  eta.set(0, true);
  eta.set(69, true);
  CHECK(EdgeConfig::from_hex(70, eta.to_hex()) == eta);
  CHECK(eta.open_count() == 2);
}
