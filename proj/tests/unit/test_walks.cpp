#include <doctest.h>

#include "dynwalk/graph.hpp"
#include "dynwalk/walks.hpp"

using namespace dynwalk;

TEST_CASE("closed-form constrained walk counts") {
  CHECK(tilde_omega(3, 1, 0) == 2);
  CHECK(tilde_omega(3, 2, 1) == 24);  // 3 ballot sequences times 2^3 child choices
  CHECK(tilde_omega(3, 0, 0) == 1);
}

TEST_CASE("regular-tree counts exceed the closed form") {
  CHECK(omega_bruteforce(3, 1, 0) == 3);
  CHECK(omega_bruteforce(3, 2, 1) == 42);
  for (int d = 3; d <= 4; ++d) {
    for (int h = 0; h <= 3; ++h) {
      for (int i = 0; i <= 2; ++i) {
        if (h + i == 0) continue;
        CHECK(omega_bruteforce(d, h, i) > tilde_omega(d, h, i));
      }
    }
  }
}

TEST_CASE("closed form equals enumeration on the (d-1)-ary tree") {
  for (int d = 3; d <= 5; ++d) {
    for (int i = 0; i <= 3; ++i) {
      for (int h = 0; h + 2 * i <= 8; ++h) {
        CHECK(tilde_omega(d, h, i) == count_tree_walks_bruteforce(d - 1, d - 1, h, i));
      }
    }
  }
}

TEST_CASE("K4 simple paths") {
  const Graph k4 = complete_graph_k4();
  CHECK(count_simple_paths(k4, 0, 1, 1) == 1);
  CHECK(count_simple_paths(k4, 0, 1, 2) == 2);
  CHECK(count_simple_paths(k4, 0, 1, 3) == 2);
}

TEST_CASE("non-backtracking 2-walks from a tree-like vertex") {
  const Graph g = generate_regular(2000, 3, 5);
  for (Vertex v = 0; v < g.n(); ++v) {
    if (ball_cycle_rank(g, v, 2) != 0) continue;
    CHECK(count_constrained_walks(g, v, 2, 0) == 6);
    break;
  }
}

TEST_CASE("walks through a vertex obey the path-count bound") {
  const Graph g = generate_regular(30, 3, 11);
  for (int h = 0; h <= 3; ++h) {
    for (int i = 0; i <= 2; ++i) {
      const BigInt through = count_walks_through(g, 0, h, i);
      CHECK(2 * through <= BigInt((h + i + 1) * (h + 3 * i + 2)) * omega_bruteforce(3, h, i));
    }
  }
}

TEST_CASE("walk validity and r-acyclicity") {
  const Graph k4 = complete_graph_k4();
  Walk w{{0, 1, 1, 2}};
  CHECK(w.alpha() == 3);
  CHECK(w.stationary_count() == 1);
  CHECK(w.is_valid(k4));
  const auto short_set = short_cycle_vertices(k4, 4);
  CHECK_FALSE(is_r_acyclic(w, VertexSet(4, short_set)));
  CHECK(is_r_acyclic(w, VertexSet(4, {})));
}
