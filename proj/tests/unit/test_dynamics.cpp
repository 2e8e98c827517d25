#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynwalk/dynamics.hpp"
#include "dynwalk/parallel.hpp"
#include "oracles.hpp"

using namespace dynwalk;

namespace {
Params small_params() {
  Params p;
  p.n = 8;
  p.d = 3;
  p.p = 0.3;
  p.q = 2;
  p.mu = 5;
  p.p_u = 0.5;
  return p;
}
}  // namespace

TEST_CASE("refresh of a cut edge above p_min closes it") {
  const Graph g = complete_graph_k4();
  const EdgeConfig forest(6);
  const EdgeConfig out = environment_update(g, forest, 0, 0.99, 1.0 / 9, 0.2);
  CHECK_FALSE(out.test(0));
  const EdgeConfig low = environment_update(g, forest, 0, 0.1, 1.0 / 9, 0.2);
  CHECK(low.test(0));
}

TEST_CASE("refresh of a triangle edge uses the non-cut threshold") {
  const Graph g = complete_graph_k4();
  EdgeConfig eta(6);
  eta.set(*g.edge_index(0, 2), true);
  eta.set(*g.edge_index(1, 2), true);
  const EdgeId e = *g.edge_index(0, 1);
  CHECK(environment_update(g, eta, e, 0.15, 1.0 / 9, 0.2).test(e));
  CHECK_FALSE(environment_update(g, eta, e, 0.25, 1.0 / 9, 0.2).test(e));
}

TEST_CASE("walker moves only across open edges") {
  const Graph g = complete_graph_k4();
  EdgeConfig eta(6);
  eta.set(*g.edge_index(0, 1), true);
  int moves = 0;
  for (Vertex c : g.neighbors(0)) {
    const Vertex next = walker_step(g, eta, 0, c);
    moves += next != 0;
    if (c == 1) CHECK(next == 1);
  }
  CHECK(moves == 1);
}

TEST_CASE("simulate is deterministic and replays cleanly") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  const JointState init{EdgeConfig(12), 0};
  SimulateOptions o;
  o.level = RecordLevel::Full;
  const Trajectory a = simulate(g, p, init, 20, 9, o);
  const Trajectory b = simulate(g, p, init, 20, 9, o);
  CHECK(a.final_state == b.final_state);
  CHECK(a.events.size() == b.events.size());
  const ReplayAudit audit = replay(g, a);
  CHECK(audit.ok());
  CHECK(audit.final_state == a.final_state);
  for (std::size_t i = 1; i < a.events.size(); ++i) CHECK(a.events[i].time > a.events[i - 1].time);
}

TEST_CASE("tampering with a logged outcome is detected") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  SimulateOptions o;
  o.level = RecordLevel::Full;
  Trajectory t = simulate(g, p, {EdgeConfig(12), 0}, 5, 3, o);
  auto it = std::find_if(t.events.begin(), t.events.end(), [](const EventRecord& e) { return e.kind == EventKind::EdgeRing; });
  REQUIRE(it != t.events.end());
  it->outcome = !it->outcome;
  CHECK_FALSE(replay(g, t).ok());
}

TEST_CASE("checkpoints do not perturb the trajectory") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  SimulateOptions plain;
  SimulateOptions states;
  states.level = RecordLevel::StatesOnly;
  states.checkpoint_times = {0.5, 1.0, 3.3, 7.0};
  const Trajectory a = simulate(g, p, {EdgeConfig(12), 2}, 10, 4, plain);
  const Trajectory b = simulate(g, p, {EdgeConfig(12), 2}, 10, 4, states);
  CHECK(a.final_state == b.final_state);
  CHECK(b.checkpoints.size() == 4);
  std::stringstream ss;
  write_checkpoints_csv(b, ss);
  CHECK(ss.str().find("time") != std::string::npos);
}

TEST_CASE("events csv round trip") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  SimulateOptions o;
  o.level = RecordLevel::Full;
  const Trajectory t = simulate(g, p, {EdgeConfig(12), 0}, 3, 5, o);
  std::stringstream ss;
  write_events_csv(t, ss);
  const auto events = read_events_csv(ss);
  REQUIRE(events.size() == t.events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].time == t.events[i].time);
    CHECK(events[i].target == t.events[i].target);
    CHECK(events[i].outcome == t.events[i].outcome);
  }
}

TEST_CASE("inter-ring times of one edge are exponential with rate mu") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  SimulateOptions o;
  o.level = RecordLevel::Full;
  const Trajectory t = simulate(g, p, {EdgeConfig(12), 0}, 4000, 21, o);
  std::vector<double> gaps;
  double last = 0;
  for (const EventRecord& e : t.events) {
    if (e.kind != EventKind::EdgeRing || e.target != 3) continue;
    gaps.push_back(e.time - last);
    last = e.time;
  }
  REQUIRE(gaps.size() > 10000);
  std::sort(gaps.begin(), gaps.end());
  double ks = 0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double f = 1 - std::exp(-p.mu * gaps[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / gaps.size()), std::abs(f - (i + 1.0) / gaps.size())});
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(gaps.size())));
}

TEST_CASE("discrete chain converges to the random-cluster law on K4") {
  const Graph g = complete_graph_k4();
  const auto res = simulate_discrete(g, 0.3, 2, EdgeConfig(6), 2'000'000, 5, 20);
  std::vector<double> freq(64, 0);
  for (auto s : res.samples) freq[s] += 1.0 / res.samples.size();
  const auto ref = oracle::rc_law(g, 0.3, 2);
  double tv = 0;
  for (int i = 0; i < 64; ++i) tv += 0.5 * std::abs(freq[i] - ref[i]);
  CHECK(tv < 0.02);
}

TEST_CASE("replica sampling does not depend on the worker count") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  const JointState init{EdgeConfig(12), 0};
  const auto a = sample_state_at(g, p, init, 2.0, 700, 3, Marginal::Walker, 1);
  const auto b = sample_state_at(g, p, init, 2.0, 700, 3, Marginal::Walker, 3);
  CHECK(a.probs == b.probs);
}

TEST_CASE("init families") {
  const Params p = small_params();
  const Graph g = generate_regular(8, 3, 1);
  CHECK(initial_config(g, p, InitFamily::AllOpen, 1, 0).open_count() == 12);
  CHECK(initial_config(g, p, InitFamily::AllClosed, 1, 0).open_count() == 0);
  CHECK(initial_config(g, p, InitFamily::Stationary, 1, 3) == initial_config(g, p, InitFamily::Stationary, 1, 3));
  CHECK(parse_init_family(init_family_name(InitFamily::Stationary)) == InitFamily::Stationary);
}

TEST_CASE("independent-edge walker agrees in law with the full chain at q=1") {
  Params p = small_params();
  p.q = 1;
  p.p_u.reset();
  const Graph g = generate_regular(8, 3, 2);
  const int reps = 20000;
  std::vector<double> lazy(8, 0);
  for (int r = 0; r < reps; ++r) {
    IndependentEdgeWalker w(g, p.p, p.mu, EdgeConfig(12), 0, derive_seed(9, r, StreamTag::Simulation));
    w.run_until(1.5);
    lazy[w.position()] += 1.0 / reps;
  }
  const auto full = sample_state_at(g, with_defaults(p), {EdgeConfig(12), 0}, 1.5, reps, 10, Marginal::Walker, 1);
  double tv = 0;
  for (int v = 0; v < 8; ++v) tv += 0.5 * std::abs(lazy[v] - full.probs[v]);
  CHECK(tv < 0.03);
}
