#include "dynwalk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dynwalk/errors.hpp"
#include "dynwalk/parallel.hpp"

namespace dynwalk {

namespace {

constexpr double kZ95 = 1.959963984540054;

int default_radius(const Graph& g, int requested) {
  if (requested > 0) return requested;
  const double log_n = std::log(static_cast<double>(g.n())) / std::log(g.d() - 1.0);
  const double snapped = std::abs(log_n - std::round(log_n)) < 1e-9 ? std::round(log_n) : log_n;
  return std::max(1, static_cast<int>(std::floor(snapped / 5.0)));
}

DerivedConstants constants_for(const Params& params) { return derive_constants(validate_params(with_defaults(params))); }

std::uint64_t sum_counts(const std::vector<std::uint64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
}

// Walker position process, either from the full chain or, when q == 1, from
// the lazily refreshed independent-edge construction.
class WalkerRunner {
 public:
  WalkerRunner(const Graph& g, const Params& params, const EdgeConfig& eta0, Vertex x0, std::uint64_t stream_seed,
               bool independent, const std::shared_ptr<const SmallCutTable>& table) {
    if (independent) {
      lazy_.emplace(g, params.p, params.mu, eta0, x0, stream_seed);
    } else {
      chain_.emplace(g, RefreshLaw::from(params), params.mu, JointState{eta0, x0}, stream_seed, table);
    }
  }
  void run_until(double t) {
    if (lazy_) {
      lazy_->run_until(t);
    } else {
      chain_->run_until(t);
    }
  }
  Vertex position() const { return lazy_ ? lazy_->position() : chain_->state().x; }

 private:
  std::optional<IndependentEdgeWalker> lazy_;
  std::optional<JointChain> chain_;
};

bool use_independent(const Params& params, WalkerMethod method) {
  if (method == WalkerMethod::IndependentEdges) {
    if (params.q != 1.0) throw Error(ErrorKind::PreconditionViolated, "independent-edge walker needs q == 1");
    return true;
  }
  return method == WalkerMethod::Auto && params.q == 1.0;
}

double log_binomial(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

}  // namespace

Estimate wilson_estimate(std::uint64_t successes, std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::InsufficientRecords, "estimate needs at least one trial");
  if (successes > trials) throw Error(ErrorKind::RangeError, "successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = kZ95 * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  Estimate e;
  e.point = p;
  e.ci_low = std::clamp(std::min(center - half, p), 0.0, 1.0);
  e.ci_high = std::clamp(std::max(center + half, p), 0.0, 1.0);
  e.se = std::sqrt(p * (1 - p) / n);
  e.replicas = trials;
  e.seed = seed;
  return e;
}

Estimate mean_estimate(double sum, double sum_sq, std::uint64_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorKind::InsufficientRecords, "estimate needs at least one sample");
  const double n = static_cast<double>(count);
  const double mean = sum / n;
  const double var = count > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
  Estimate e;
  e.point = mean;
  e.se = std::sqrt(var / n);
  e.ci_low = mean - kZ95 * e.se;
  e.ci_high = mean + kZ95 * e.se;
  e.replicas = count;
  e.seed = seed;
  return e;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Warn:
      return "warn";
    case Verdict::Fail:
      return "fail";
  }
  return "?";
}

Verdict one_sided_verdict(const Estimate& est, double bound) {
  if (bound <= 0) return Verdict::Pass;
  const double b = std::min(bound, 1.0);
  const double resolution = 3.0 * std::sqrt(b * (1 - b) / static_cast<double>(std::max<std::uint64_t>(est.replicas, 1)));
  if (resolution > 0.5 * bound) return Verdict::Warn;
  return est.point + 3.0 * est.se < bound ? Verdict::Fail : Verdict::Pass;
}

const char* event_kind_name(EventKindSpec kind) {
  switch (kind) {
    case EventKindSpec::Transition:
      return "transition";
    case EventKindSpec::Stationary:
      return "stationary";
    case EventKindSpec::Cut:
      return "cut";
    case EventKindSpec::Trajectory:
      return "trajectory";
    case EventKindSpec::Sparsity:
      return "sparsity";
  }
  return "?";
}

void EventSpec::validate(const Graph& g) const {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::PreconditionViolated, std::string(event_kind_name(kind)) + " event: " + why);
  };
  if (u < 0 || u >= g.n()) fail("vertex u out of range");
  switch (kind) {
    case EventKindSpec::Transition:
    case EventKindSpec::Stationary:
    case EventKindSpec::Cut:
      if (!g.adjacent(u, u2)) fail("{u, u'} must be an edge");
      if (!(delta > 0)) fail("delta must be positive");
      break;
    case EventKindSpec::Trajectory:
      if (walk.vertices.empty() || walk.vertices.front() != u) fail("walk must start at u");
      if (!walk.is_valid(g)) fail("walk steps must be stationary or along edges");
      if (!(t2 > t)) fail("window must satisfy t < t'");
      break;
    case EventKindSpec::Sparsity:
      if (!(t2 >= t)) fail("window must satisfy t <= t'");
      if (radius < 1) fail("radius must be >= 1");
      if (K < 0) fail("K must be >= 0");
      break;
  }
}

BoundarySparsity boundary_sparsity(const Graph& g, Vertex v, int radius, const EdgeConfig& eta_wired, int K) {
  if (eta_wired.size() != g.num_edges()) throw Error(ErrorKind::RangeError, "configuration size does not match |E|");
  const Ball b = ball(g, v, radius);
  std::vector<char> inside(g.n(), 0);
  for (Vertex x : b.interior) inside[x] = 1;
  BoundarySparsity out;
  for (Vertex x : b.boundary) {
    const auto nbrs = g.neighbors(x);
    for (int j = 0; j < g.d(); ++j) {
      // Every edge with both ends in the ball belongs to E_v, so only edges
      // leaving the ball survive the deletion.
      if (!inside[nbrs[j]] && eta_wired.test(g.slot_edge(x, j))) {
        ++out.nontrivial_count;
        break;
      }
    }
  }
  out.holds = out.nontrivial_count <= K;
  return out;
}

InitPool::InitPool(const Graph& g, const Params& params, InitFamily family, std::uint64_t seed, std::size_t size)
    : family_(family) {
  if (family != InitFamily::Stationary) {
    pool_.push_back(initial_config(g, params, family, seed, 0));
    return;
  }
  pool_.reserve(std::max<std::size_t>(size, 1));
  for (std::size_t i = 0; i < std::max<std::size_t>(size, 1); ++i) {
    pool_.push_back(initial_config(g, params, family, seed, i));
  }
}

SparsityReport sparsity_event_rate(const Graph& g, const Params& params, double t_start, double t_end,
                                   std::uint64_t replicas, std::uint64_t seed, const SparsityOptions& options) {
  if (!(t_end >= t_start) || t_start < 0) throw Error(ErrorKind::RangeError, "sparsity window must satisfy 0 <= t <= t'");
  if (replicas == 0) throw Error(ErrorKind::RangeError, "replicas must be >= 1");
  SparsityReport report;
  report.radius = default_radius(g, options.radius);
  report.K_values = options.K_values.empty() ? std::vector<int>{params.k_sparse} : options.K_values;

  std::vector<Vertex> centers;
  if (options.centers) {
    centers = *options.centers;
    report.subsampled = static_cast<int>(centers.size()) < g.n();
  } else {
    centers.resize(g.n());
    std::iota(centers.begin(), centers.end(), 0);
  }
  report.centers = centers.size();
  if (static_cast<double>(centers.size()) * static_cast<double>(replicas) > static_cast<double>(options.cost_cap)) {
    throw Error(ErrorKind::BudgetExceeded, "sparsity run needs " + std::to_string(centers.size()) + " x " +
                                               std::to_string(replicas) + " wired runs, above the cost cap " +
                                               std::to_string(options.cost_cap));
  }

  struct CenterData {
    std::vector<EdgeId> wired;
    std::vector<Vertex> boundary;
    std::vector<int> owner;  // boundary vertex reached by an exterior edge, or -1
  };
  std::vector<CenterData> data(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const Ball b = ball(g, centers[c], report.radius);
    std::vector<char> inside(g.n(), 0);
    for (Vertex x : b.interior) inside[x] = 1;
    data[c].wired = ball_edges(g, centers[c], report.radius);
    data[c].boundary = b.boundary;
    data[c].owner.assign(g.num_edges(), -1);
    for (Vertex x : b.boundary) {
      const auto nbrs = g.neighbors(x);
      for (int j = 0; j < g.d(); ++j) {
        if (!inside[nbrs[j]]) data[c].owner[g.slot_edge(x, j)] = x;
      }
    }
    report.max_boundary = std::max(report.max_boundary, static_cast<int>(b.boundary.size()));
  }

  const int k_top = *std::max_element(report.K_values.begin(), report.K_values.end());
  const auto table = maybe_cut_table(g);
  const RefreshLaw law = RefreshLaw::from(params);
  const InitPool pool(g, params, options.family, seed);

  struct Partial {
    std::vector<std::uint64_t> failures;
    std::vector<std::uint64_t> histogram;
  };
  const std::size_t hist_size = static_cast<std::size_t>(std::max(k_top, 0)) + 2;
  Partial total = parallel_replicas<Partial>(
      replicas, options.jobs,
      [&] { return Partial{std::vector<std::uint64_t>(report.K_values.size(), 0), std::vector<std::uint64_t>(hist_size, 0)}; },
      [&](std::uint64_t r, Partial& part) {
        const std::uint64_t stream = derive_seed(seed, r, StreamTag::Environment);
        int worst = 0;
        std::vector<int> open_out(g.n(), 0);
        for (std::size_t c = 0; c < centers.size() && worst <= k_top; ++c) {
          const CenterData& cd = data[c];
          ChainOptions chain_options;
          chain_options.walker = false;
          chain_options.wired = cd.wired;
          JointChain chain(g, law, params.mu, JointState{pool.get(r), centers[c]}, stream, table, chain_options);
          chain.run_until(t_start);
          int count = 0;
          for (Vertex x : cd.boundary) open_out[x] = 0;
          for (EdgeId e = 0; e < g.num_edges(); ++e) {
            if (cd.owner[e] >= 0 && chain.state().eta.test(e)) ++open_out[cd.owner[e]];
          }
          for (Vertex x : cd.boundary) count += open_out[x] > 0;
          int peak = count;
          std::vector<char> mirror(g.num_edges(), 0);
          for (EdgeId e = 0; e < g.num_edges(); ++e) mirror[e] = chain.state().eta.test(e);
          chain.run_until(t_end, [&](const EventRecord& ev) {
            if (ev.kind != EventKind::EdgeRing) return;
            const Vertex x = cd.owner[ev.target];
            if (x < 0 || mirror[ev.target] == static_cast<char>(ev.outcome)) return;
            mirror[ev.target] = ev.outcome;
            if (ev.outcome) {
              if (open_out[x]++ == 0) ++count;
            } else {
              if (--open_out[x] == 0) --count;
            }
            peak = std::max(peak, count);
          });
          worst = std::max(worst, peak);
        }
        for (std::size_t k = 0; k < report.K_values.size(); ++k) part.failures[k] += worst > report.K_values[k];
        ++part.histogram[std::min<std::size_t>(static_cast<std::size_t>(worst), hist_size - 1)];
      },
      [](Partial& acc, Partial& part) {
        for (std::size_t k = 0; k < acc.failures.size(); ++k) acc.failures[k] += part.failures[k];
        for (std::size_t k = 0; k < acc.histogram.size(); ++k) acc.histogram[k] += part.histogram[k];
      });

  for (std::uint64_t f : total.failures) report.failure.push_back(wilson_estimate(f, replicas, seed));
  report.max_count_histogram = total.histogram;
  return report;
}

double transition_bound(const Params& params, double delta) {
  const double p_min = std::min(params.p, open_prob_cut(params.p, params.q));
  return p_min / params.d * -std::expm1(-params.mu * delta);
}

namespace {

enum class RefreshWanted { Open, Closed };

// Probability that V_u(t0 + delta) = u2 and e's last ring in the window
// refreshed it to the wanted state.
Estimate refresh_event_probability(const Graph& g, const Params& params, Vertex u, Vertex u2, double t0, double delta,
                                   RefreshWanted wanted, const InitPool& pool, std::uint64_t replicas,
                                   std::uint64_t seed, int jobs) {
  const auto e = g.edge_index(u, u2);
  if (!e) throw Error(ErrorKind::PreconditionViolated, "{u, u'} must be an edge");
  if (!(delta > 0)) throw Error(ErrorKind::RangeError, "delta must be positive");
  const auto table = maybe_cut_table(g);
  const RefreshLaw law = RefreshLaw::from(params);
  const auto nbrs = g.neighbors(u);
  const std::uint64_t hits = parallel_replicas<std::uint64_t>(
      replicas, jobs, [] { return std::uint64_t{0}; },
      [&](std::uint64_t r, std::uint64_t& acc) {
        JointChain chain(g, law, params.mu, JointState{pool.get(r), u}, derive_seed(seed, r, StreamTag::Simulation),
                         table);
        chain.run_until(t0);
        bool rang = false;
        bool open = false;
        chain.run_until(t0 + delta, [&](const EventRecord& ev) {
          if (ev.kind == EventKind::EdgeRing && ev.target == *e) {
            rang = true;
            open = ev.outcome;
          }
        });
        Rng candidate(seed, r, StreamTag::Candidate);
        const bool drawn = nbrs[candidate.below(static_cast<std::uint64_t>(g.d()))] == u2;
        acc += drawn && rang && (open == (wanted == RefreshWanted::Open));
      },
      [](std::uint64_t& acc, std::uint64_t& part) { acc += part; });
  return wilson_estimate(hits, replicas, seed);
}

void finish_report(EventReport& report) {
  report.verdict = Verdict::Pass;
  bool first = true;
  for (const auto& fe : report.per_family) {
    if (first || fe.estimate.point < report.worst.point) report.worst = fe.estimate;
    first = false;
  }
}

double s_probability(const Graph& g, const Params& params, double t0, double delta, InitFamily family,
                     std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options) {
  SparsityOptions so;
  so.K_values = {params.k_sparse};
  so.centers = options.sparsity_centers;
  so.radius = options.radius;
  so.family = family;
  so.jobs = options.jobs;
  so.cost_cap = std::numeric_limits<std::uint64_t>::max();
  const SparsityReport rep = sparsity_event_rate(g, params, t0, t0 + delta, replicas, seed, so);
  return 1.0 - rep.failure.front().point;
}

}  // namespace

EventReport estimate_transition_event(const Graph& g, const Params& params, Vertex u, Vertex u2, double delta,
                                      std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options) {
  EventReport report;
  report.bound = transition_bound(params, delta);
  Verdict verdict = Verdict::Pass;
  for (InitFamily family : options.families) {
    const InitPool pool(g, params, family, seed);
    FamilyEstimate fe{family, refresh_event_probability(g, params, u, u2, options.t0, delta, RefreshWanted::Open,
                                                        pool, replicas, seed, options.jobs)};
    verdict = std::max(verdict, one_sided_verdict(fe.estimate, report.bound));
    report.per_family.push_back(fe);
  }
  finish_report(report);
  report.verdict = verdict;
  return report;
}

void check_geometric_hypotheses(const Graph& g, Vertex u, double r, int radius) {
  const auto short_set = short_cycle_vertices(g, r);
  if (std::binary_search(short_set.begin(), short_set.end(), u)) {
    throw Error(ErrorKind::HypothesisViolated,
                "vertex " + std::to_string(u) + " lies on a cycle shorter than r = " + std::to_string(r));
  }
  const int rank = ball_cycle_rank(g, u, radius);
  if (rank > 1) {
    throw Error(ErrorKind::HypothesisViolated, "ball of radius " + std::to_string(radius) + " around vertex " +
                                                   std::to_string(u) + " has " + std::to_string(rank) + " cycles");
  }
}

namespace {

double hypothesis_r(const Params& params, const std::optional<double>& r_override) {
  if (r_override) return *r_override;
  return constants_for(params).r;
}

void require_refresh_window(const Params& params, double delta) {
  if (!(params.mu * delta > 2 * std::log(2.0))) {
    throw Error(ErrorKind::PreconditionViolated, "bound needs mu * delta > 2 log 2, got " +
                                                     std::to_string(params.mu * delta));
  }
}

}  // namespace

EventReport estimate_stationary_event(const Graph& g, const Params& params, Vertex u, Vertex u2, double delta,
                                      std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options) {
  require_refresh_window(params, delta);
  if (!g.adjacent(u, u2)) throw Error(ErrorKind::PreconditionViolated, "{u, u'} must be an edge");
  const int radius = default_radius(g, options.radius);
  check_geometric_hypotheses(g, u, hypothesis_r(params, options.r_override), radius);

  const double p_min = std::min(params.p, open_prob_cut(params.p, params.q));
  const double log_n = std::log(static_cast<double>(g.n()));
  const double core = (1 - p_min) / params.d *
                      (1 - 1 / (log_n * log_n) - 2.0 * (params.k_sparse + 1) * std::exp(-params.mu * delta / 2));
  const std::uint64_t s_reps = options.sparsity_replicas ? options.sparsity_replicas : replicas;

  EventReport report;
  Verdict verdict = Verdict::Pass;
  report.s_probability = 1.0;
  for (InitFamily family : options.families) {
    const InitPool pool(g, params, family, seed);
    FamilyEstimate fe{family, refresh_event_probability(g, params, u, u2, options.t0, delta, RefreshWanted::Closed,
                                                        pool, replicas, seed, options.jobs)};
    const double s = s_probability(g, params, options.t0, delta, family, s_reps, seed, options);
    const double bound = core * s;
    report.bound = std::max(report.bound, bound);
    report.s_probability = std::min(report.s_probability, s);
    verdict = std::max(verdict, one_sided_verdict(fe.estimate, bound));
    report.per_family.push_back(fe);
  }
  finish_report(report);
  report.verdict = verdict;
  return report;
}

CutBounds cut_bound_formulas(const Params& params, double delta, double radius, double r, int K) {
  require_refresh_window(params, delta);
  const Params full = with_defaults(params);
  if (!full.p_u) throw Error(ErrorKind::PreconditionViolated, "p_u is needed for the integral bound");
  const double p = params.p;
  const double mu = params.mu;
  auto base = [&](double x) { return p + (1 - p) * std::exp(-mu * x); };
  CutBounds out;
  out.acyclic_lb = 1 - std::pow(base(delta), r - 1);
  out.path_lb = 1 - 2.0 * K * std::pow(base(delta), radius / 2);
  out.last_arrival_integral_ub = std::exp(-mu * delta / 2) + std::pow((1 + *full.p_u) / 2, r - 1);
  out.cut_lb = 1 - (2.0 * K + 1) * out.last_arrival_integral_ub;
  auto integrand = [&](double x) { return mu * std::exp(mu * (x - delta)) / -std::expm1(-mu * delta) * std::pow(base(x), r - 1); };
  out.last_arrival_integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, delta, 15, 1e-13);
  return out;
}

EventReport estimate_cut_event(const Graph& g, const Params& params, Vertex u, EdgeId e, double delta,
                               std::uint64_t replicas, std::uint64_t seed, const ProbeOptions& options) {
  if (e < 0 || e >= g.num_edges()) throw Error(ErrorKind::RangeError, "edge id out of range");
  if (g.edge(e).u != u && g.edge(e).v != u) throw Error(ErrorKind::PreconditionViolated, "edge must be incident to u");
  const int radius = default_radius(g, options.radius);
  const double r = hypothesis_r(params, options.r_override);
  check_geometric_hypotheses(g, u, r, radius);
  const CutBounds bounds = cut_bound_formulas(params, delta, default_radius(g, options.radius), r, params.k_sparse);
  const std::uint64_t s_reps = options.sparsity_replicas ? options.sparsity_replicas : replicas;
  const auto table = maybe_cut_table(g);
  const RefreshLaw law = RefreshLaw::from(params);

  EventReport report;
  Verdict verdict = Verdict::Pass;
  report.s_probability = 1.0;
  for (InitFamily family : options.families) {
    const InitPool pool(g, params, family, seed);
    struct Tally {
      std::uint64_t rang = 0;
      std::uint64_t cut = 0;
    };
    const Tally tally = parallel_replicas<Tally>(
        replicas, options.jobs, [] { return Tally{}; },
        [&](std::uint64_t rep, Tally& acc) {
          JointChain chain(g, law, params.mu, JointState{pool.get(rep), u},
                           derive_seed(seed, rep, StreamTag::Simulation), table);
          CutEdgeQuery query(g);
          chain.run_until(options.t0);
          bool rang = false;
          bool cut = false;
          chain.run_until(options.t0 + delta, [&](const EventRecord& ev) {
            if (ev.kind == EventKind::EdgeRing && ev.target == e) {
              rang = true;
              // Cut status ignores e itself, and no other edge changed in this event.
              cut = query(chain.state().eta, e);
            }
          });
          acc.rang += rang;
          acc.cut += rang && cut;
        },
        [](Tally& acc, Tally& part) {
          acc.rang += part.rang;
          acc.cut += part.cut;
        });
    if (tally.rang == 0) throw Error(ErrorKind::InsufficientRecords, "edge never rang inside the window");
    FamilyEstimate fe{family, wilson_estimate(tally.cut, tally.rang, seed)};
    const double s = s_probability(g, params, options.t0, delta, family, s_reps, seed, options);
    const double bound = std::max(0.0, bounds.cut_lb) * s;
    report.bound = std::max(report.bound, bound);
    report.s_probability = std::min(report.s_probability, s);
    verdict = std::max(verdict, one_sided_verdict(fe.estimate, bound));
    report.per_family.push_back(fe);
  }
  finish_report(report);
  report.verdict = verdict;
  return report;
}

TrajectoryReport estimate_trajectory_prob(const Graph& g, const Params& params, const Walk& walk, double T,
                                          std::uint64_t replicas, std::uint64_t seed,
                                          const TrajectoryOptions& options) {
  if (!(T > 0)) throw Error(ErrorKind::RangeError, "T must be positive");
  if (walk.vertices.empty() || !walk.is_valid(g)) {
    throw Error(ErrorKind::PreconditionViolated, "walk must be non-empty with stationary or edge steps");
  }
  const DerivedConstants consts = constants_for(params);
  const double r = options.r_override ? *options.r_override : consts.r;
  const VertexSet short_set(g.n(), short_cycle_vertices(g, r));
  if (!is_r_acyclic(walk, short_set)) {
    throw Error(ErrorKind::NotAcyclic, "walk visits a vertex on a cycle shorter than r = " + std::to_string(r));
  }
  const int alpha = walk.alpha();
  if (alpha > consts.alpha_max) {
    throw Error(ErrorKind::PreconditionViolated,
                "walk length " + std::to_string(alpha) + " exceeds alpha_max = " + std::to_string(consts.alpha_max));
  }
  const int ell = walk.stationary_count();

  TrajectoryReport report;
  report.t_low = consts.log_dm1_n / (50 * consts.p_min);
  report.t_high = 4 * consts.log_dm1_n / consts.p_min;
  report.out_of_lemma_range = T < report.t_low || T > report.t_high;
  report.poisson_term = std::exp(-T + alpha * std::log(T) - std::lgamma(alpha + 1.0));
  report.step_term = std::pow(consts.p_min, alpha - ell) * std::pow(1 - consts.p_min, ell) /
                     std::pow(static_cast<double>(params.d), alpha - ell);
  report.bound = report.poisson_term * report.step_term;

  const double t0 = options.t0 ? *options.t0 : params.c_burn;
  const auto table = maybe_cut_table(g);
  const RefreshLaw law = RefreshLaw::from(params);
  bool first = true;
  for (InitFamily family : options.families) {
    const InitPool pool(g, params, family, seed);
    const std::uint64_t hits = parallel_replicas<std::uint64_t>(
        replicas, options.jobs, [] { return std::uint64_t{0}; },
        [&](std::uint64_t rep, std::uint64_t& acc) {
          ChainOptions env_only;
          env_only.walker = false;
          JointChain burn(g, law, params.mu, JointState{pool.get(rep), walk.vertices[0]},
                          derive_seed(seed, rep, StreamTag::Environment), table, env_only);
          burn.run_until(t0);
          JointChain chain(g, law, params.mu, JointState{burn.state().eta, walk.vertices[0]},
                           derive_seed(seed, rep, StreamTag::Simulation), table);
          int rings = 0;
          bool follows = true;
          chain.run_until(T, [&](const EventRecord& ev) {
            if (ev.kind != EventKind::WalkerRing || !follows) return;
            ++rings;
            if (rings > alpha || chain.state().x != walk.vertices[rings]) follows = false;
          });
          acc += follows && rings == alpha;
        },
        [](std::uint64_t& acc, std::uint64_t& part) { acc += part; });
    FamilyEstimate fe{family, wilson_estimate(hits, replicas, seed)};
    if (first || fe.estimate.point < report.worst.point) report.worst = fe.estimate;
    first = false;
    if (hits == 0 && fe.estimate.ci_high < report.bound) report.underpowered = true;
    report.per_family.push_back(fe);
  }
  report.implied_c0 = report.bound > 0 ? report.worst.point / report.bound : 0;
  return report;
}

Estimate cut_fraction_along_walks(const Graph& g, const std::vector<Trajectory>& trajectories) {
  std::uint64_t examined = 0;
  std::uint64_t cut = 0;
  std::uint64_t seed = trajectories.empty() ? 0 : trajectories.front().seed;
  for (const Trajectory& traj : trajectories) {
    if (traj.level != RecordLevel::Full) {
      throw Error(ErrorKind::InsufficientRecords, "cut fractions need Full event logs");
    }
    // -1: not refreshed yet; -2: refreshed with unknown cut status.
    std::vector<int> last(g.num_edges(), -1);
    Vertex x = traj.initial.x;
    for (const EventRecord& ev : traj.events) {
      if (ev.kind == EventKind::EdgeRing) {
        last[ev.target] = ev.cut_known ? static_cast<int>(ev.cut) : -2;
        continue;
      }
      const auto e = g.edge_index(x, ev.target);
      if (!e) throw Error(ErrorKind::InsufficientRecords, "event log is inconsistent with the walker path");
      if (last[*e] == -2) throw Error(ErrorKind::InsufficientRecords, "event log lacks cut flags");
      if (last[*e] >= 0) {
        ++examined;
        cut += static_cast<std::uint64_t>(last[*e]);
      }
      if (ev.outcome) x = ev.target;
    }
  }
  if (examined == 0) throw Error(ErrorKind::InsufficientRecords, "no walker-examined edge had been refreshed");
  return wilson_estimate(cut, examined, seed);
}

double expected_plugin_tv(const DistributionTable& reference, std::uint64_t samples) {
  if (samples == 0) throw Error(ErrorKind::RangeError, "samples must be >= 1");
  const double R = static_cast<double>(samples);
  double sum = 0;
  for (double pi : reference.probs) {
    if (pi <= 0 || pi >= 1) continue;
    // Mean absolute deviation of Binomial(R, pi): 2 (m+1) C(R, m+1) pi^(m+1) (1-pi)^(R-m), m = floor(R pi).
    const double m = std::floor(R * pi);
    if (m + 1 > R) continue;
    const double log_mad = std::log(2 * (m + 1)) + log_binomial(R, m + 1) + (m + 1) * std::log(pi) +
                           (R - m) * std::log1p(-pi);
    sum += std::exp(log_mad) / R;
  }
  return std::min(1.0, 0.5 * sum);
}

double binomial_abs_deviation(std::uint64_t samples, double pi, double c) {
  if (samples == 0) throw Error(ErrorKind::RangeError, "samples must be >= 1");
  if (!(pi >= 0 && pi <= 1)) throw Error(ErrorKind::RangeError, "pi must lie in [0, 1]");
  const double R = static_cast<double>(samples);
  if (pi == 0 || pi == 1) return std::abs(pi - c);
  // |y| = y + 2 (-y)^+, so only the lower part x < R c needs the pmf.
  const double sd = std::sqrt(R * pi * (1 - pi));
  const double lo = std::max(0.0, std::floor(R * pi - 40 * sd - 40));
  const double hi = std::min({R, std::ceil(R * c) - 1, std::ceil(R * pi + 40 * sd + 40)});
  double lower = 0;
  for (double x = lo; x <= hi; ++x) {
    const double log_pmf = log_binomial(R, x) + x * std::log(pi) + (R - x) * std::log1p(-pi);
    lower += (c - x / R) * std::exp(log_pmf);
  }
  return (pi - c) + 2 * lower;
}

double plugin_tv_deviation(std::uint64_t samples) {
  return std::sqrt(std::log(2 / 0.05) / (2.0 * static_cast<double>(samples)));
}

TvEstimate tv_estimate(const DistributionTable& empirical, const DistributionTable& reference, std::uint64_t samples,
                       std::uint64_t seed) {
  TvEstimate out;
  out.tv.point = tv_distance(empirical, reference);
  out.floor = expected_plugin_tv(reference, samples);
  const double dev = plugin_tv_deviation(samples);
  out.tv.ci_low = std::max(0.0, std::min(out.tv.point, out.tv.point - out.floor - dev));
  out.tv.ci_high = std::min(1.0, out.tv.point + dev);
  out.tv.se = dev / kZ95;
  out.tv.replicas = samples;
  out.tv.seed = seed;
  return out;
}

std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double level) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (values[k] > level) continue;
    if (k == 0) return times[0];
    const double span = values[k - 1] - values[k];
    const double frac = span > 0 ? (values[k - 1] - level) / span : 1.0;
    return times[k - 1] + frac * (times[k] - times[k - 1]);
  }
  return std::nullopt;
}

MixingCurve walker_mixing_curve(const Graph& g, const Params& params, const std::vector<double>& t_grid,
                                std::uint64_t replicas, std::uint64_t seed, const MixingOptions& options) {
  if (t_grid.empty()) throw Error(ErrorKind::RangeError, "time grid is empty");
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) throw Error(ErrorKind::RangeError, "time grid must be strictly increasing");
  }
  if (t_grid.front() < 0) throw Error(ErrorKind::RangeError, "times must be >= 0");
  if (replicas == 0) throw Error(ErrorKind::RangeError, "replicas must be >= 1");
  const bool independent = use_independent(params, options.method);
  const auto table = independent ? nullptr : maybe_cut_table(g);
  const InitPool pool(g, params, options.family, seed);
  const std::size_t n = static_cast<std::size_t>(g.n());
  const std::size_t cells = t_grid.size() * n;

  const std::vector<std::uint64_t> counts = parallel_replicas<std::vector<std::uint64_t>>(
      replicas, options.jobs, [&] { return std::vector<std::uint64_t>(cells, 0); },
      [&](std::uint64_t r, std::vector<std::uint64_t>& acc) {
        WalkerRunner runner(g, params, pool.get(r), options.x0, derive_seed(seed, r, StreamTag::Simulation),
                            independent, table);
        for (std::size_t k = 0; k < t_grid.size(); ++k) {
          runner.run_until(t_grid[k]);
          ++acc[k * n + static_cast<std::size_t>(runner.position())];
        }
      },
      [](std::vector<std::uint64_t>& acc, std::vector<std::uint64_t>& part) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
      });

  MixingCurve curve;
  curve.times = t_grid;
  const double R = static_cast<double>(replicas);
  const double u = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double sum = 0;
    for (std::size_t x = 0; x < n; ++x) sum += std::abs(static_cast<double>(counts[k * n + x]) / R - u);
    curve.tv.push_back(std::min(1.0, 0.5 * sum));
  }
  DistributionTable uniform;
  uniform.kind = DistributionTable::Kind::Vertex;
  uniform.n = g.n();
  uniform.support.resize(n);
  std::iota(uniform.support.begin(), uniform.support.end(), 0);
  uniform.probs.assign(n, u);
  curve.floor = expected_plugin_tv(uniform, replicas);
  curve.t_mix_quarter = first_crossing(curve.times, curve.tv, 0.25);
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double resampled = 0;
    for (std::size_t x = 0; x < n; ++x) {
      resampled += binomial_abs_deviation(replicas, static_cast<double>(counts[k * n + x]) / R, u);
    }
    curve.tv_corrected.push_back(std::clamp(2 * curve.tv[k] - 0.5 * resampled, 0.0, 1.0));
  }
  curve.t_mix_quarter_corrected = first_crossing(curve.times, curve.tv_corrected, 0.25);
  return curve;
}

TvEstimate joint_mixing_small(const Graph& g, const Params& params, const JointState& init, double t,
                              std::uint64_t replicas, std::uint64_t seed, int jobs, Counters* counters) {
  const DistributionTable exact = exact_joint_stationary(g, params.p, params.q);
  const DistributionTable empirical =
      sample_state_at(g, params, init, t, replicas, seed, Marginal::Joint, jobs, nullptr, counters);
  return tv_estimate(empirical, exact, replicas, seed);
}

Estimate good_hit_probability(const Graph& g, const Params& params, Vertex x0, InitFamily family,
                              const std::vector<Vertex>& good, std::uint64_t replicas, std::uint64_t seed,
                              const MixingOptions& options) {
  if (replicas == 0) throw Error(ErrorKind::RangeError, "replicas must be >= 1");
  const double t1 = constants_for(params).t1;
  const VertexSet good_set(g.n(), good);
  const bool independent = use_independent(params, options.method);
  const auto table = independent ? nullptr : maybe_cut_table(g);
  const InitPool pool(g, params, family, seed);
  const std::uint64_t hits = parallel_replicas<std::uint64_t>(
      replicas, options.jobs, [] { return std::uint64_t{0}; },
      [&](std::uint64_t r, std::uint64_t& acc) {
        WalkerRunner runner(g, params, pool.get(r), x0, derive_seed(seed, r, StreamTag::Simulation), independent,
                            table);
        runner.run_until(t1);
        acc += good_set.contains(runner.position());
      },
      [](std::uint64_t& acc, std::uint64_t& part) { acc += part; });
  return wilson_estimate(hits, replicas, seed);
}

Phase2Report phase2_overlap(const Graph& g, const Params& params, Vertex v, const EdgeConfig& eta_hat,
                            std::uint64_t replicas, std::uint64_t seed, const std::vector<double>& c_grid,
                            const MixingOptions& options) {
  if (replicas == 0) throw Error(ErrorKind::RangeError, "replicas must be >= 1");
  const DerivedConstants consts = constants_for(params);
  const bool independent = use_independent(params, options.method);
  const auto table = independent ? nullptr : maybe_cut_table(g);
  Phase2Report report;
  report.horizon = consts.t2 - consts.t1;
  const std::vector<std::uint64_t> counts = parallel_replicas<std::vector<std::uint64_t>>(
      replicas, options.jobs, [&] { return std::vector<std::uint64_t>(g.n(), 0); },
      [&](std::uint64_t r, std::vector<std::uint64_t>& acc) {
        WalkerRunner runner(g, params, eta_hat, v, derive_seed(seed, r, StreamTag::Simulation), independent, table);
        runner.run_until(report.horizon);
        ++acc[static_cast<std::size_t>(runner.position())];
      },
      [](std::vector<std::uint64_t>& acc, std::vector<std::uint64_t>& part) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
      });
  const double R = static_cast<double>(sum_counts(counts));
  for (std::uint64_t c : counts) report.frequency.push_back(static_cast<double>(c) / R);
  const double n = static_cast<double>(g.n());
  for (double c : c_grid) {
    const auto above = std::count_if(report.frequency.begin(), report.frequency.end(),
                                     [&](double f) { return n * f >= c; });
    report.overlap.push_back({c, static_cast<double>(above) / n});
  }
  return report;
}

double last_arrival_cdf(double mu, double T, double x) {
  if (!(mu > 0) || !(T > 0)) throw Error(ErrorKind::RangeError, "mu and T must be positive");
  if (!(x > 0 && x < T)) throw Error(ErrorKind::RangeError, "x must lie in (0, T)");
  return std::expm1(mu * x) / std::expm1(mu * T);
}

double last_arrival_ks(double mu, double T, std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorKind::InsufficientRecords, "KS check needs samples");
  std::sort(samples.begin(), samples.end());
  const double N = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = last_arrival_cdf(mu, T, samples[i]);
    d = std::max({d, F - static_cast<double>(i) / N, static_cast<double>(i + 1) / N - F});
  }
  return d;
}

std::vector<double> sample_last_arrivals(const Graph& g, double mu, double T, EdgeId e, std::uint64_t samples,
                                         std::uint64_t seed) {
  if (e < 0 || e >= g.num_edges()) throw Error(ErrorKind::RangeError, "edge id out of range");
  std::vector<double> out;
  out.reserve(samples);
  ChainOptions env_only;
  env_only.walker = false;
  // The refresh law is irrelevant to ring times; q = 1 skips cut queries.
  const RefreshLaw law = RefreshLaw::from(0.5, 1.0);
  for (std::uint64_t r = 0; out.size() < samples; ++r) {
    if (r % 4096 == 0) RunBudget::check();
    JointChain chain(g, law, mu, JointState{EdgeConfig(g.num_edges()), 0}, derive_seed(seed, r, StreamTag::Environment),
                     nullptr, env_only);
    double last = -1;
    chain.run_until(T, [&](const EventRecord& ev) {
      if (ev.target == e) last = ev.time;
    });
    if (last >= 0) out.push_back(last);
  }
  return out;
}

double poisson_window_prob(std::uint64_t k_min, std::uint64_t k_max) {
  if (k_min >= k_max) throw Error(ErrorKind::RangeError, "need k_min < k_max");
  const double lambda = (static_cast<double>(k_min) + static_cast<double>(k_max)) / 2;
  const double log_lambda = std::log(lambda);
  std::vector<double> terms;
  terms.reserve(k_max - k_min + 1);
  for (std::uint64_t k = k_min; k <= k_max; ++k) {
    const double kk = static_cast<double>(k);
    terms.push_back(kk * log_lambda - lambda - std::lgamma(kk + 1));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0;
  for (double t : terms) sum += std::exp(t - top);
  return std::min(1.0, std::exp(top + std::log(sum)));
}

PoissonGridResult poisson_window_grid(double n, double c_min, double c_max, double c_mid) {
  if (!(c_max > c_min && c_min > 0 && c_mid > 0 && c_mid <= c_max - c_min)) {
    throw Error(ErrorKind::DomainError, "need c_max > c_min > 0 and 0 < c_mid <= c_max - c_min");
  }
  const double L = std::log(n);
  const auto lo = static_cast<std::uint64_t>(std::ceil(c_min * L));
  const auto hi = static_cast<std::uint64_t>(std::floor(c_max * L));
  PoissonGridResult out;
  for (std::uint64_t k_min = lo; k_min <= hi; ++k_min) {
    for (std::uint64_t k_max = k_min + 1; k_max <= hi; ++k_max) {
      if (static_cast<double>(k_max - k_min) < c_mid * L) continue;
      const double prob = poisson_window_prob(k_min, k_max);
      ++out.pairs;
      if (prob < out.min_prob) {
        out.min_prob = prob;
        out.argmin_k_min = k_min;
        out.argmin_k_max = k_max;
      }
    }
  }
  return out;
}

SimplexCheck simplex_integral_check(int alpha, double T, double delta, double C, double eps, double n,
                                    std::uint64_t samples, std::uint64_t seed) {
  if (alpha > 8) throw Error(ErrorKind::BudgetExceeded, "simplex Monte Carlo is limited to alpha <= 8");
  if (alpha < 0 || !(T > 0) || delta < 0 || samples == 0 || !(n > 1)) {
    throw Error(ErrorKind::RangeError, "need alpha >= 0, T > 0, delta >= 0, n > 1 and samples >= 1");
  }
  if (!((alpha + 1) * delta < T)) throw Error(ErrorKind::RangeError, "need (alpha + 1) delta < T");
  const double log_n = std::log(n);
  // Gaps >= delta are delta plus the spacings of a simplex of side T - (alpha+1) delta,
  // so sampling that smaller simplex replaces rejection.
  const double slack = T - (alpha + 1) * delta;
  Rng rng(seed, 0, StreamTag::Auxiliary);
  std::vector<double> cuts(static_cast<std::size_t>(alpha) + 2);
  double sum = 0;
  double sum_sq = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    cuts[0] = 0;
    for (int k = 1; k <= alpha; ++k) cuts[k] = slack * rng.uniform();
    cuts[alpha + 1] = slack;
    std::sort(cuts.begin() + 1, cuts.begin() + alpha + 1);
    double value = 1;
    for (int k = 0; k <= alpha; ++k) {
      const double gap = delta + cuts[k + 1] - cuts[k];
      value *= 1 - C * std::exp(-(eps / 2) * gap * log_n);
    }
    sum += value;
    sum_sq += value * value;
  }
  const Estimate mean = mean_estimate(sum, sum_sq, samples, seed);
  SimplexCheck out;
  out.volume = std::exp(alpha * std::log(T) - std::lgamma(alpha + 1.0));
  out.shrunk_volume = std::exp(alpha * std::log(slack) - std::lgamma(alpha + 1.0));
  out.mc_value = out.shrunk_volume * mean.point;
  out.se = out.shrunk_volume * mean.se;
  out.rhs_bound = 0.25 * out.volume * std::pow(1 - (alpha + 1) * delta / T, alpha);
  return out;
}

double f_alpha(double a, double b, double alpha, double x, double y) {
  auto term = [](long double w, long double c) { return w > 0 ? w * std::log(c / w) : 0.0L; };
  const long double rest = static_cast<long double>(alpha) - x - y;
  return static_cast<double>(term(x, a) + term(y, b) + term(rest, 1.0L - a - b));
}

FAlphaCheck f_alpha_check(double a, double b, double alpha, int grid) {
  if (!(a > 0 && a < 1 && b > 0 && b < 1 && a + b < 0.5)) {
    throw Error(ErrorKind::DomainError, "need a, b in (0,1) with a + b < 1/2");
  }
  if (!(alpha > 0) || grid < 2) throw Error(ErrorKind::DomainError, "need alpha > 0 and grid >= 2");
  FAlphaCheck out;
  out.cell = alpha / grid;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < grid; ++i) {
    for (int j = 1; i + j < grid; ++j) {
      const double x = i * out.cell;
      const double y = j * out.cell;
      const double v = f_alpha(a, b, alpha, x, y);
      if (v > best) {
        best = v;
        out.argmax_x = x;
        out.argmax_y = y;
      }
    }
  }
  out.argmax_within_cell =
      std::abs(out.argmax_x - a * alpha) <= out.cell && std::abs(out.argmax_y - b * alpha) <= out.cell;

  const double peak = f_alpha(a, b, alpha, a * alpha, b * alpha);
  const double side = std::sqrt(alpha);
  out.gap_bound = (a + b) / (2 * (1 - a - b));
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      const double x = side * i / grid;
      const double y = side * j / grid;
      out.max_gap = std::max(out.max_gap, peak - f_alpha(a, b, alpha, a * (alpha + x), b * (alpha + y)));
    }
  }
  out.part2_holds = out.max_gap <= out.gap_bound;

  const double h = 1e-4;
  out.grad_x = (f_alpha(a, b, alpha, a * alpha + h, b * alpha) - f_alpha(a, b, alpha, a * alpha - h, b * alpha)) / (2 * h);
  out.grad_y = (f_alpha(a, b, alpha, a * alpha, b * alpha + h) - f_alpha(a, b, alpha, a * alpha, b * alpha - h)) / (2 * h);
  return out;
}

}  // namespace dynwalk
