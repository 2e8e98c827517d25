#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynwalk/environment.hpp"
#include "dynwalk/graph.hpp"
#include "dynwalk/params.hpp"
#include "dynwalk/rng.hpp"

namespace dynwalk {

/// Opening probabilities used at a refresh. For q >= 1 these are (p_min, p_max).
struct RefreshLaw {
  double cut = 0;
  double noncut = 0;

  static RefreshLaw from(double p, double q) { return {open_prob_cut(p, q), open_prob_noncut(p)}; }
  static RefreshLaw from(const Params& params) { return from(params.p, params.q); }
  bool cut_matters() const { return cut != noncut; }
  double threshold(bool is_cut) const { return is_cut ? cut : noncut; }
};

struct JointState {
  EdgeConfig eta;
  Vertex x = 0;
  bool operator==(const JointState&) const = default;
};

/// Heat-bath refresh of edge e with uniform draw u: open iff u <= threshold
/// for the cut status of e in eta. Only e changes.
EdgeConfig environment_update(const Graph& g, const EdgeConfig& eta, EdgeId e, double u, double p_cut,
                              double p_noncut);

/// The walker moves to `candidate` iff the edge to it is open.
Vertex walker_step(const Graph& g, const EdgeConfig& eta, Vertex x, Vertex candidate);

/// Cut-edge oracle that uses a shared lookup table on small graphs and BFS otherwise.
class CutOracle {
 public:
  explicit CutOracle(const Graph& g, std::shared_ptr<const SmallCutTable> table = nullptr)
      : query_(g), table_(std::move(table)) {}
  bool operator()(const EdgeConfig& eta, EdgeId e) {
    return table_ ? table_->is_cut(eta.index(), e) : query_(eta, e);
  }

 private:
  CutEdgeQuery query_;
  std::shared_ptr<const SmallCutTable> table_;
};

/// Builds the lookup table when |E| is small enough for it to pay off.
std::shared_ptr<const SmallCutTable> maybe_cut_table(const Graph& g, int max_edges = 16);

enum class EventKind : std::uint8_t { WalkerRing, EdgeRing };

struct EventRecord {
  double time = 0;
  EventKind kind = EventKind::EdgeRing;
  int target = 0;     // edge id for EdgeRing, candidate vertex for WalkerRing
  Vertex from = -1;   // walker position before a WalkerRing
  double uniform = 0; // U_e(t) for EdgeRing
  bool cut = false;   // cut status at t- (EdgeRing, when computed)
  bool cut_known = false;
  bool outcome = false;  // edge open after the refresh, or walker moved
};

struct ChainOptions {
  bool walker = true;
  /// Compute cut status even when the law makes it irrelevant (audits, logs).
  bool always_compute_cut = false;
  /// Edges forced open at all times (wired dynamics); empty for the plain chain.
  std::vector<EdgeId> wired;
};

/// Continuous-time joint chain realised by superposition: one exponential of
/// total rate 1 + mu|E| per event, then a categorical pick of the clock.
class JointChain {
 public:
  JointChain(const Graph& g, RefreshLaw law, double mu, JointState init, std::uint64_t stream_seed,
             std::shared_ptr<const SmallCutTable> table = nullptr, ChainOptions options = {});

  double time() const { return time_; }
  const JointState& state() const { return state_; }
  const Graph& graph() const { return *g_; }
  RefreshLaw law() const { return law_; }

  /// Applies every event with time <= t_end, calling obs(event) after each.
  /// The first event beyond t_end stays pending, so checkpoints never perturb
  /// the realised trajectory.
  template <class Observer>
  void run_until(double t_end, Observer&& obs) {
    while (next_time_ <= t_end) {
      EventRecord ev = apply_next();
      obs(static_cast<const EventRecord&>(ev));
    }
    if (t_end > time_) time_ = t_end;
  }
  void run_until(double t_end) {
    run_until(t_end, [](const EventRecord&) {});
  }

  /// Environment-only stream is used when the walker is disabled.
  double total_rate() const { return rate_; }

 private:
  EventRecord apply_next();

  const Graph* g_;
  RefreshLaw law_;
  double mu_;
  JointState state_;
  Rng rng_;
  CutOracle cut_;
  ChainOptions options_;
  std::vector<char> wired_mask_;
  double rate_ = 0;
  double walker_share_ = 0;
  double time_ = 0;
  double next_time_ = 0;
};

enum class RecordLevel { Full, StatesOnly, Counters };

struct Counters {
  std::uint64_t walker_rings = 0;
  std::uint64_t walker_moves = 0;
  std::uint64_t edge_rings = 0;
  std::uint64_t edge_opens = 0;
  std::uint64_t cut_rings = 0;
  std::uint64_t cut_opens = 0;
  std::uint64_t noncut_rings = 0;
  std::uint64_t noncut_opens = 0;

  void add(const EventRecord& ev);
  void merge(const Counters& other);
};

struct Checkpoint {
  double time = 0;
  JointState state;
};

struct Trajectory {
  JointState initial;
  JointState final_state;
  std::vector<EventRecord> events;       // Full level
  std::vector<Checkpoint> checkpoints;   // StatesOnly level
  Counters counters;
  double horizon = 0;
  std::uint64_t seed = 0;
  Params params;
  std::optional<DerivedConstants> constants;  // absent when params cannot be fully validated
  RecordLevel level = RecordLevel::Counters;
  bool downgraded = false;               // Full request exceeded the memory budget
  std::vector<EventRecord> exemplars;    // reservoir sample when downgraded
};

struct SimulateOptions {
  RecordLevel level = RecordLevel::Counters;
  std::vector<double> checkpoint_times;  // StatesOnly
  std::uint64_t full_event_budget = 50'000'000;
  std::size_t exemplar_count = 1000;
  std::shared_ptr<const SmallCutTable> table;
};

Trajectory simulate(const Graph& g, const Params& params, const JointState& init, double horizon, std::uint64_t seed,
                    const SimulateOptions& options = {});

struct ReplayAudit {
  JointState final_state;
  std::uint64_t edge_events = 0;
  std::uint64_t walker_events = 0;
  std::uint64_t refresh_violations = 0;  // outcome != (U <= threshold(cut))
  std::uint64_t cut_mismatches = 0;      // logged cut flag disagrees with recomputation
  std::uint64_t walker_violations = 0;   // illegal move, or move decision inconsistent
  std::uint64_t time_violations = 0;     // non-increasing times
  bool ok() const { return refresh_violations + cut_mismatches + walker_violations + time_violations == 0; }
};

/// Re-applies a Full log from its initial state, independently recomputing cut
/// status with kappa.
ReplayAudit replay(const Graph& g, const Trajectory& traj);

void write_events_csv(const Trajectory& traj, std::ostream& out);
std::vector<EventRecord> read_events_csv(std::istream& in);
void write_checkpoints_csv(const Trajectory& traj, std::ostream& out);

/// Discrete single-edge heat-bath chain. When `thin` > 0 the config index is
/// recorded every `thin` steps (|E| <= 64).
struct DiscreteResult {
  EdgeConfig final_config;
  std::vector<std::uint64_t> samples;
};
DiscreteResult simulate_discrete(const Graph& g, double p, double q, const EdgeConfig& eta0, std::uint64_t steps,
                                 std::uint64_t seed, std::uint64_t thin = 0,
                                 std::shared_ptr<const SmallCutTable> table = nullptr);

/// Environment-only dynamics with every edge of B_radius(center) wired open.
/// Sharing `seed` across centres shares clocks and uniforms between the runs.
Trajectory simulate_wired(const Graph& g, Vertex center, int radius, const Params& params, const EdgeConfig& eta0,
                          double horizon, std::uint64_t seed, const SimulateOptions& options = {});

enum class Marginal { Joint, Walker };

/// Replica r runs on stream derive_seed(seed, r, Simulation). When `counters`
/// is given, event aggregates over all replicas are accumulated into it.
DistributionTable sample_state_at(const Graph& g, const Params& params, const JointState& init, double t,
                                  std::uint64_t replicas, std::uint64_t seed, Marginal marginal, int jobs = 1,
                                  std::shared_ptr<const SmallCutTable> table = nullptr, Counters* counters = nullptr);

/// Walker-only simulation valid when edges evolve independently (q == 1):
/// each examined edge is refreshed lazily from its last observation.
class IndependentEdgeWalker {
 public:
  IndependentEdgeWalker(const Graph& g, double p, double mu, const EdgeConfig& eta0, Vertex x0,
                        std::uint64_t stream_seed);
  double time() const { return time_; }
  Vertex position() const { return x_; }
  void run_until(double t_end);

 private:
  const Graph* g_;
  double p_;
  double mu_;
  std::vector<char> open_;
  std::vector<double> last_seen_;
  Vertex x_;
  Rng rng_;
  double time_ = 0;
  double next_ring_ = 0;
};

/// Initial-state families used by worst-case probes.
enum class InitFamily { AllClosed, AllOpen, Stationary };
const char* init_family_name(InitFamily f);
InitFamily parse_init_family(const std::string& name);

/// AllClosed/AllOpen are deterministic; Stationary runs the discrete chain for
/// 200|E| steps from all-closed.
EdgeConfig initial_config(const Graph& g, const Params& params, InitFamily family, std::uint64_t seed,
                          std::uint64_t replica);

}  // namespace dynwalk
