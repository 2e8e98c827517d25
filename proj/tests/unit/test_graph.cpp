#include <doctest.h>

#include <set>
#include <sstream>

#include "dynwalk/errors.hpp"
#include "dynwalk/graph.hpp"

using namespace dynwalk;

TEST_CASE("generated graphs are simple, regular and seed-deterministic") {
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const Graph g = generate_regular(50, 3, seed);
    CHECK(g.num_edges() == 75);
    std::set<Edge> seen;
    for (const Edge& e : g.edges()) {
      CHECK(e.u < e.v);
      CHECK(seen.insert(e).second);
    }
    for (Vertex v = 0; v < g.n(); ++v) CHECK(g.neighbors(v).size() == 3);
    CHECK(generate_regular(50, 3, seed) == g);
  }
  CHECK_FALSE(generate_regular(50, 3, 1) == generate_regular(50, 3, 2));
}

TEST_CASE("infeasible degree sequences") {
  CHECK_THROWS_AS(generate_regular(7, 3, 1), Error);
  CHECK_THROWS_AS(generate_regular(3, 3, 1), Error);
}

TEST_CASE("K4 cycle counts by brute force") {
  const auto c = cycle_counts(complete_graph_k4(), 4);
  CHECK(c[3] == 4);
  CHECK(c[4] == 3);
}

TEST_CASE("K4 short-cycle vertices and k-roots") {
  const Graph k4 = complete_graph_k4();
  CHECK(short_cycle_vertices(k4, 4).size() == 4);
  CHECK(short_cycle_vertices(k4, 3).empty());
  CHECK_FALSE(is_k_root(k4, 0, 1));
  CHECK(is_k_root(k4, 0, 0));
  CHECK(ball_cycle_rank(k4, 0, 1) == 3);
}

TEST_CASE("tree-like ball has d(d-1)^(R-1) boundary vertices") {
  const Graph g = generate_regular(2000, 3, 5);
  const auto short_set = short_cycle_vertices(g, 5);
  const std::set<Vertex> on_short(short_set.begin(), short_set.end());
  int checked = 0;
  for (Vertex v = 0; v < g.n() && checked < 20; ++v) {
    if (ball_cycle_rank(g, v, 2) != 0) continue;
    CHECK(ball(g, v, 2).boundary.size() == 6);
    CHECK(ball(g, v, 2).interior.size() == 10);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("bfs distances on K4") {
  const Graph k4 = complete_graph_k4();
  const Vertex src[] = {0};
  const auto dist = bfs_distances(k4, src);
  CHECK(dist == std::vector<int>{0, 1, 1, 1});
}

TEST_CASE("graph file round trip and parse errors") {
  const Graph g = generate_regular(20, 3, 3);
  std::stringstream ss;
  save_graph(g, ss);
  CHECK(load_graph(ss) == g);

  std::stringstream dup("4 3\n0 1\n0 1\n0 2\n1 3\n2 3\n1 2\n");
  CHECK_THROWS_AS(load_graph(dup), Error);
  std::stringstream odd("5 3\n0 1\n");
  CHECK_THROWS_AS(load_graph(odd), Error);
  std::stringstream junk("4 3\n0 x\n");
  try {
    load_graph(junk);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("configuration model acceptance near exp(-(d^2-1)/4)") {
  Rng rng(7);
  int ok = 0;
  const int attempts = 10000;
  for (int a = 0; a < attempts; ++a) ok += configuration_model_attempt(200, 3, rng).has_value();
  CHECK(static_cast<double>(ok) / attempts == doctest::Approx(std::exp(-2.0)).epsilon(0.15));
}
