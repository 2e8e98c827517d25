#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynwalk/dynamics.hpp"
#include "dynwalk/environment.hpp"
#include "dynwalk/graph.hpp"
#include "dynwalk/params.hpp"
#include "dynwalk/walks.hpp"

namespace dynwalk {

struct Estimate {
  double point = 0;
  double ci_low = 0;
  double ci_high = 0;
  double se = 0;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
};

/// Proportion with a 95% Wilson interval; se is the binomial standard error.
Estimate wilson_estimate(std::uint64_t successes, std::uint64_t trials, std::uint64_t seed);

/// Sample mean with a 95% normal interval.
Estimate mean_estimate(double sum, double sum_sq, std::uint64_t count, std::uint64_t seed);

enum class Verdict { Pass, Warn, Fail };
const char* verdict_name(Verdict v);

/// One-sided lower-bound check: fail only if point + 3 se < bound. A check
/// whose resolution at the bound is coarser than half the bound is Warn.
Verdict one_sided_verdict(const Estimate& est, double bound);

enum class EventKindSpec { Transition, Stationary, Cut, Trajectory, Sparsity };

struct EventSpec {
  EventKindSpec kind = EventKindSpec::Transition;
  Vertex u = 0;
  Vertex u2 = -1;
  Walk walk;
  double t = 0;
  double t2 = 0;
  double delta = 0;
  double radius = 0;
  int K = 0;

  /// Throws PreconditionViolated when the parameters are incomplete for the kind.
  void validate(const Graph& g) const;
};
const char* event_kind_name(EventKindSpec kind);

// ---------------------------------------------------------------------------
// Sparsity events under wired-ball dynamics.

struct BoundarySparsity {
  bool holds = true;
  int nontrivial_count = 0;
};

/// Counts boundary vertices of B_radius(v) lying in components of size >= 2
/// once the ball edges are removed from eta_wired.
BoundarySparsity boundary_sparsity(const Graph& g, Vertex v, int radius, const EdgeConfig& eta_wired, int K);

/// Pool of initial configurations for worst-case probes. Stationary pools are
/// drawn once per family and reused round-robin by replica index.
class InitPool {
 public:
  InitPool(const Graph& g, const Params& params, InitFamily family, std::uint64_t seed, std::size_t size = 256);
  const EdgeConfig& get(std::uint64_t replica) const { return pool_[replica % pool_.size()]; }
  InitFamily family() const { return family_; }

 private:
  InitFamily family_;
  std::vector<EdgeConfig> pool_;
};

struct SparsityOptions {
  std::vector<int> K_values;                 // defaults to {params.k_sparse}
  std::optional<std::vector<Vertex>> centers;  // all vertices when absent
  int radius = 0;                            // 0: max(1, floor R)
  InitFamily family = InitFamily::AllOpen;
  std::uint64_t cost_cap = 2'000'000;        // centers * replicas
  int jobs = 1;
};

struct SparsityReport {
  std::vector<int> K_values;
  std::vector<Estimate> failure;  // P[not S_[t,t'](R,K)] per K
  int radius = 0;
  std::size_t centers = 0;
  bool subsampled = false;
  int max_boundary = 0;           // largest |boundary| over centres
  std::vector<std::uint64_t> max_count_histogram;  // per replica max count
};

/// Wired runs for every centre share the replica's clocks and uniforms; S is
/// checked at the window start and after every edge event inside the window.
SparsityReport sparsity_event_rate(const Graph& g, const Params& params, double t_start, double t_end,
                                   std::uint64_t replicas, std::uint64_t seed, const SparsityOptions& options = {});

// ---------------------------------------------------------------------------
// Transition, stationary and cut-edge events.

struct ProbeOptions {
  std::vector<InitFamily> families{InitFamily::AllClosed, InitFamily::AllOpen, InitFamily::Stationary};
  double t0 = 0;                          // window is (t0, t0 + delta)
  std::optional<double> r_override;       // short-cycle threshold used for hypotheses
  int radius = 0;                         // 0: max(1, floor R)
  std::uint64_t sparsity_replicas = 0;    // 0: same as replicas
  std::optional<std::vector<Vertex>> sparsity_centers;
  int jobs = 1;
};

struct FamilyEstimate {
  InitFamily family;
  Estimate estimate;
};

struct EventReport {
  std::vector<FamilyEstimate> per_family;
  Estimate worst;              // smallest point estimate across families
  double bound = 0;
  double s_probability = 1;    // P[S] used inside the bound (1 when not needed)
  Verdict verdict = Verdict::Pass;
};

/// (p_min/d)(1 - exp(-mu delta)).
double transition_bound(const Params& params, double delta);

EventReport estimate_transition_event(const Graph& g, const Params& params, Vertex u, Vertex u2, double delta,
                                      std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options = {});

/// Throws HypothesisViolated unless u avoids cycles shorter than r and
/// B_radius(u) contains at most one cycle.
void check_geometric_hypotheses(const Graph& g, Vertex u, double r, int radius);

EventReport estimate_stationary_event(const Graph& g, const Params& params, Vertex u, Vertex u2, double delta,
                                      std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options = {});

struct CutBounds {
  double acyclic_lb = 0;
  double path_lb = 0;
  double cut_lb = 0;
  double last_arrival_integral_ub = 0;
  double last_arrival_integral = 0;  // quadrature value of the bounded integral
};

/// Closed forms at x = delta. Throws PreconditionViolated unless mu delta > 2 log 2.
CutBounds cut_bound_formulas(const Params& params, double delta, double radius, double r, int K);

EventReport estimate_cut_event(const Graph& g, const Params& params, Vertex u, EdgeId e, double delta,
                               std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options = {});

// ---------------------------------------------------------------------------
// Trajectory probabilities.

struct TrajectoryOptions {
  std::vector<InitFamily> families{InitFamily::AllClosed, InitFamily::AllOpen, InitFamily::Stationary};
  std::optional<double> r_override;
  std::optional<double> t0;  // defaults to params.c_burn
  int jobs = 1;
};

struct TrajectoryReport {
  std::vector<FamilyEstimate> per_family;
  Estimate worst;
  double poisson_term = 0;  // P[N_w = alpha]
  double step_term = 0;     // p_min^(alpha-l) (1-p_min)^l / d^(alpha-l)
  double bound = 0;         // product of the two, without C0
  double implied_c0 = 0;    // worst.point / bound
  bool out_of_lemma_range = false;
  double t_low = 0;         // admissible T window at this n
  double t_high = 0;
  bool underpowered = false;  // zero successes and Wilson upper bound below the bound
};

/// Walker is held at x_0 on [0, t0]; the event is exactly alpha walker rings in
/// (t0, t0 + T) with the walker following the walk.
TrajectoryReport estimate_trajectory_prob(const Graph& g, const Params& params, const Walk& walk, double T,
                                          std::uint64_t replicas, std::uint64_t seed,
                                          const TrajectoryOptions& options = {});

/// Fraction of walker-examined edges that were cut at their last refresh.
/// Needs Full trajectories with cut flags; throws InsufficientRecords otherwise.
Estimate cut_fraction_along_walks(const Graph& g, const std::vector<Trajectory>& trajectories);

// ---------------------------------------------------------------------------
// Mixing.

/// Expected plug-in TV between `reference` and the empirical law of
/// `samples` i.i.d. draws from it (exact binomial sums).
double expected_plugin_tv(const DistributionTable& reference, std::uint64_t samples);

/// E|X / samples - c| for X ~ Binomial(samples, pi).
double binomial_abs_deviation(std::uint64_t samples, double pi, double c);

/// McDiarmid deviation of a plug-in TV at 95%: sqrt(log(40) / (2 samples)).
double plugin_tv_deviation(std::uint64_t samples);

struct TvEstimate {
  Estimate tv;        // plug-in value; ci accounts for the floor
  double floor = 0;   // expected plug-in TV under exact sampling
  double excess() const { return tv.point - floor; }
};

TvEstimate tv_estimate(const DistributionTable& empirical, const DistributionTable& reference,
                       std::uint64_t samples, std::uint64_t seed);

struct MixingCurve {
  std::vector<double> times;
  std::vector<double> tv;
  double floor = 0;
  std::optional<double> t_mix_quarter;
  /// Bootstrap bias-corrected TV: 2 tv - E[plug-in TV of a resample from the empirical law].
  std::vector<double> tv_corrected;
  std::optional<double> t_mix_quarter_corrected;
};

enum class WalkerMethod { Auto, FullChain, IndependentEdges };

struct MixingOptions {
  Vertex x0 = 0;
  InitFamily family = InitFamily::AllClosed;
  WalkerMethod method = WalkerMethod::Auto;  // independent edges when q == 1
  int jobs = 1;
};

MixingCurve walker_mixing_curve(const Graph& g, const Params& params, const std::vector<double>& t_grid,
                                std::uint64_t replicas, std::uint64_t seed, const MixingOptions& options = {});

/// First crossing of `level`, linearly interpolated between grid points.
std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double level);

TvEstimate joint_mixing_small(const Graph& g, const Params& params, const JointState& init, double t,
                              std::uint64_t replicas, std::uint64_t seed, int jobs = 1,
                              Counters* counters = nullptr);

// ---------------------------------------------------------------------------
// Coupling ingredients.

Estimate good_hit_probability(const Graph& g, const Params& params, Vertex x0, InitFamily family,
                              const std::vector<Vertex>& good, std::uint64_t replicas, std::uint64_t seed,
                              const MixingOptions& options = {});

struct OverlapPoint {
  double c = 0;
  double overlap = 0;  // fraction of vertices with n * frequency >= c
};

struct Phase2Report {
  std::vector<double> frequency;  // per vertex
  std::vector<OverlapPoint> overlap;
  double horizon = 0;             // T2 - T1
};

Phase2Report phase2_overlap(const Graph& g, const Params& params, Vertex v, const EdgeConfig& eta_hat,
                            std::uint64_t replicas, std::uint64_t seed, const std::vector<double>& c_grid,
                            const MixingOptions& options = {});

// ---------------------------------------------------------------------------
// Numeric lemmas.

/// (e^{mu x} - 1) / (e^{mu T} - 1) for 0 < x < T; RangeError otherwise.
double last_arrival_cdf(double mu, double T, double x);

/// Kolmogorov-Smirnov statistic of samples in (0, T) against last_arrival_cdf.
double last_arrival_ks(double mu, double T, std::vector<double> samples);

/// Last ring times of one edge clock on (0, T), taken from the simulator's
/// superposed stream and conditioned on at least one ring.
std::vector<double> sample_last_arrivals(const Graph& g, double mu, double T, EdgeId e, std::uint64_t samples,
                                         std::uint64_t seed);

/// P[k_min <= N <= k_max] for N ~ Poisson((k_min + k_max) / 2).
double poisson_window_prob(std::uint64_t k_min, std::uint64_t k_max);

struct PoissonGridResult {
  double min_prob = 1;
  std::uint64_t argmin_k_min = 0;
  std::uint64_t argmin_k_max = 0;
  std::uint64_t pairs = 0;  // admissible (k_min, k_max) pairs
};

/// Minimum over integer pairs with c_min log n <= k_min < k_max <= c_max log n and
/// k_max - k_min >= c_mid log n.
PoissonGridResult poisson_window_grid(double n, double c_min, double c_max, double c_mid);

struct SimplexCheck {
  double mc_value = 0;
  double se = 0;
  double rhs_bound = 0;
  double volume = 0;         // T^alpha / alpha!
  double shrunk_volume = 0;  // (T - (alpha+1) delta)^alpha / alpha!, the gap-constrained region
};

/// Monte Carlo of the gap-constrained simplex integral of
/// prod (1 - C n^{-(eps/2) T_i}), sampled uniformly on the region where every
/// gap is at least delta. Throws BudgetExceeded for alpha > 8.
SimplexCheck simplex_integral_check(int alpha, double T, double delta, double C, double eps, double n,
                                    std::uint64_t samples, std::uint64_t seed);

struct FAlphaCheck {
  double argmax_x = 0;
  double argmax_y = 0;
  double cell = 0;
  bool argmax_within_cell = false;
  double max_gap = 0;
  double gap_bound = 0;
  bool part2_holds = false;
  double grad_x = 0;
  double grad_y = 0;
};

double f_alpha(double a, double b, double alpha, double x, double y);

/// Checks the maximiser on a grid x, y in (0, alpha) and the gap bound on
/// [0, sqrt(alpha)]^2. Throws DomainError unless a, b > 0 and a + b < 1/2.
FAlphaCheck f_alpha_check(double a, double b, double alpha, int grid);

}  // namespace dynwalk
