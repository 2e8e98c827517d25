#include "dynwalk/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "dynwalk/errors.hpp"
#include "dynwalk/parallel.hpp"

namespace dynwalk {

namespace {

void check_state(const Graph& g, const JointState& s) {
  if (s.eta.size() != g.num_edges()) throw Error(ErrorKind::RangeError, "configuration size does not match |E|");
  if (s.x < 0 || s.x >= g.n()) throw Error(ErrorKind::RangeError, "walker position out of range");
}

std::optional<DerivedConstants> try_derive(const Params& params) {
  try {
    return derive_constants(validate_params(with_defaults(params)));
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Cut status recomputed from component counts, independent of CutEdgeQuery.
bool cut_by_kappa(const Graph& g, EdgeConfig eta, EdgeId e) {
  eta.set(e, false);
  const int without = kappa(g, eta);
  eta.set(e, true);
  return kappa(g, eta) != without;
}

}  // namespace

EdgeConfig environment_update(const Graph& g, const EdgeConfig& eta, EdgeId e, double u, double p_cut,
                              double p_noncut) {
  EdgeConfig out = eta;
  const bool cut = p_cut == p_noncut ? false : is_cut_edge(g, eta, e);
  out.set(e, u <= (cut ? p_cut : p_noncut));
  return out;
}

Vertex walker_step(const Graph& g, const EdgeConfig& eta, Vertex x, Vertex candidate) {
  const auto e = g.edge_index(x, candidate);
  if (!e) throw Error(ErrorKind::PreconditionViolated, "candidate is not a neighbour of the walker");
  return eta.test(*e) ? candidate : x;
}

std::shared_ptr<const SmallCutTable> maybe_cut_table(const Graph& g, int max_edges) {
  if (g.num_edges() > std::min(max_edges, SmallCutTable::kMaxEdges)) return nullptr;
  return std::make_shared<const SmallCutTable>(g);
}

JointChain::JointChain(const Graph& g, RefreshLaw law, double mu, JointState init, std::uint64_t stream_seed,
                       std::shared_ptr<const SmallCutTable> table, ChainOptions options)
    : g_(&g),
      law_(law),
      mu_(mu),
      state_(std::move(init)),
      rng_(stream_seed),
      cut_(g, std::move(table)),
      options_(std::move(options)) {
  check_state(g, state_);
  if (!(mu > 0)) throw Error(ErrorKind::RangeError, "mu must be > 0");
  if (!options_.wired.empty()) {
    wired_mask_.assign(g.num_edges(), 0);
    for (EdgeId e : options_.wired) {
      wired_mask_[e] = 1;
      state_.eta.set(e, true);
    }
  }
  rate_ = (options_.walker ? 1.0 : 0.0) + mu_ * g.num_edges();
  walker_share_ = options_.walker ? 1.0 : 0.0;
  next_time_ = rng_.exponential(rate_);
}

EventRecord JointChain::apply_next() {
  time_ = next_time_;
  EventRecord ev;
  ev.time = time_;
  // One uniform selects the clock: [0, 1) is the walker, then width mu per edge.
  const double pick = rng_.uniform() * rate_;
  if (pick < walker_share_) {
    ev.kind = EventKind::WalkerRing;
    ev.from = state_.x;
    const int slot = static_cast<int>(rng_.below(static_cast<std::uint64_t>(g_->d())));
    ev.target = g_->neighbors(state_.x)[slot];
    ev.outcome = state_.eta.test(g_->slot_edge(state_.x, slot));
    if (ev.outcome) state_.x = ev.target;
  } else {
    ev.kind = EventKind::EdgeRing;
    auto e = static_cast<EdgeId>((pick - walker_share_) / mu_);
    if (e >= g_->num_edges()) e = g_->num_edges() - 1;
    ev.target = e;
    ev.uniform = rng_.uniform();
    if (!wired_mask_.empty() && wired_mask_[e]) {
      ev.outcome = true;
    } else {
      if (law_.cut_matters() || options_.always_compute_cut) {
        ev.cut = cut_(state_.eta, e);
        ev.cut_known = true;
      }
      ev.outcome = ev.uniform <= law_.threshold(ev.cut);
      state_.eta.set(e, ev.outcome);
    }
  }
  next_time_ = time_ + rng_.exponential(rate_);
  return ev;
}

void Counters::add(const EventRecord& ev) {
  if (ev.kind == EventKind::WalkerRing) {
    ++walker_rings;
    walker_moves += ev.outcome;
    return;
  }
  ++edge_rings;
  edge_opens += ev.outcome;
  if (!ev.cut_known) return;
  if (ev.cut) {
    ++cut_rings;
    cut_opens += ev.outcome;
  } else {
    ++noncut_rings;
    noncut_opens += ev.outcome;
  }
}

void Counters::merge(const Counters& o) {
  walker_rings += o.walker_rings;
  walker_moves += o.walker_moves;
  edge_rings += o.edge_rings;
  edge_opens += o.edge_opens;
  cut_rings += o.cut_rings;
  cut_opens += o.cut_opens;
  noncut_rings += o.noncut_rings;
  noncut_opens += o.noncut_opens;
}

namespace {

// Records events up to a budget, then switches to a uniform reservoir.
class EventSink {
 public:
  EventSink(Trajectory& traj, const SimulateOptions& options, std::uint64_t seed)
      : traj_(traj), options_(options), rng_(seed, 0, StreamTag::Auxiliary) {}

  void operator()(const EventRecord& ev) {
    traj_.counters.add(ev);
    if (traj_.level != RecordLevel::Full) {
      if (traj_.downgraded) sample(ev);
      return;
    }
    if (traj_.events.size() < options_.full_event_budget) {
      traj_.events.push_back(ev);
      return;
    }
    // Over budget: keep a reservoir built from everything seen so far.
    traj_.level = RecordLevel::Counters;
    traj_.downgraded = true;
    std::vector<EventRecord> seen = std::move(traj_.events);
    traj_.events.clear();
    for (const auto& old : seen) sample(old);
    sample(ev);
  }

 private:
  void sample(const EventRecord& ev) {
    ++seen_;
    if (traj_.exemplars.size() < options_.exemplar_count) {
      traj_.exemplars.push_back(ev);
      return;
    }
    const std::uint64_t j = rng_.below(seen_);
    if (j < traj_.exemplars.size()) traj_.exemplars[j] = ev;
  }

  Trajectory& traj_;
  const SimulateOptions& options_;
  Rng rng_;
  std::uint64_t seen_ = 0;
};

}  // namespace

Trajectory simulate(const Graph& g, const Params& params, const JointState& init, double horizon, std::uint64_t seed,
                    const SimulateOptions& options) {
  if (horizon < 0) throw Error(ErrorKind::RangeError, "horizon must be >= 0");
  check_state(g, init);
  Trajectory traj;
  traj.initial = init;
  traj.final_state = init;
  traj.horizon = horizon;
  traj.seed = seed;
  traj.params = params;
  traj.constants = try_derive(params);
  traj.level = options.level;
  if (horizon == 0) return traj;

  ChainOptions chain_options;
  chain_options.always_compute_cut = options.level == RecordLevel::Full;
  JointChain chain(g, RefreshLaw::from(params), params.mu, init, derive_seed(seed, 0, StreamTag::Simulation),
                   options.table, chain_options);
  EventSink sink(traj, options, seed);

  if (options.level == RecordLevel::StatesOnly) {
    std::vector<double> times = options.checkpoint_times;
    std::sort(times.begin(), times.end());
    for (double t : times) {
      if (t < 0 || t > horizon) continue;
      chain.run_until(t, sink);
      traj.checkpoints.push_back({t, chain.state()});
    }
  }
  chain.run_until(horizon, sink);
  traj.final_state = chain.state();
  return traj;
}

ReplayAudit replay(const Graph& g, const Trajectory& traj) {
  check_state(g, traj.initial);
  const RefreshLaw law = RefreshLaw::from(traj.params);
  ReplayAudit audit;
  JointState s = traj.initial;
  double last = 0;
  bool first = true;
  for (const EventRecord& ev : traj.events) {
    if (!(ev.time >= 0) || (!first && !(ev.time > last))) ++audit.time_violations;
    first = false;
    last = ev.time;
    if (ev.kind == EventKind::EdgeRing) {
      ++audit.edge_events;
      if (ev.target < 0 || ev.target >= g.num_edges()) {
        ++audit.refresh_violations;
        continue;
      }
      const bool cut = cut_by_kappa(g, s.eta, ev.target);
      if (ev.cut_known && ev.cut != cut) ++audit.cut_mismatches;
      const bool expected = ev.uniform <= law.threshold(cut);
      if (expected != ev.outcome) ++audit.refresh_violations;
      s.eta.set(ev.target, expected);
    } else {
      ++audit.walker_events;
      if (ev.from >= 0 && ev.from != s.x) ++audit.walker_violations;
      const auto e = g.edge_index(s.x, ev.target);
      if (!e) {
        ++audit.walker_violations;
        continue;
      }
      const bool moves = s.eta.test(*e);
      if (moves != ev.outcome) ++audit.walker_violations;
      if (moves) s.x = ev.target;
    }
  }
  audit.final_state = s;
  return audit;
}

void write_events_csv(const Trajectory& traj, std::ostream& out) {
  out << "time,kind,edge_or_vertex,uniform,cut_flag,outcome\n";
  for (const EventRecord& ev : traj.events) {
    out << format_double(ev.time) << ',';
    if (ev.kind == EventKind::WalkerRing) {
      out << "walker," << ev.target << ",,," << (ev.outcome ? 1 : 0) << '\n';
    } else {
      out << "edge," << ev.target << ',' << format_double(ev.uniform) << ',';
      if (ev.cut_known) out << (ev.cut ? 1 : 0);
      out << ',' << (ev.outcome ? 1 : 0) << '\n';
    }
  }
}

std::vector<EventRecord> read_events_csv(std::istream& in) {
  std::vector<EventRecord> out;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::ParseError, "event log line " + std::to_string(line_no) + ": " + why);
  };
  auto parse_double = [&](const std::string& text) {
    double v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) fail("bad number '" + text + "'");
    return v;
  };
  auto parse_int = [&](const std::string& text) {
    int v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) fail("bad integer '" + text + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "time,kind,edge_or_vertex,uniform,cut_flag,outcome") fail("unexpected header");
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) fail("expected 6 fields");
    EventRecord ev;
    ev.time = parse_double(fields[0]);
    ev.target = parse_int(fields[2]);
    if (fields[1] == "walker") {
      ev.kind = EventKind::WalkerRing;
    } else if (fields[1] == "edge") {
      ev.kind = EventKind::EdgeRing;
      ev.uniform = parse_double(fields[3]);
      if (!fields[4].empty()) {
        ev.cut_known = true;
        ev.cut = parse_int(fields[4]) != 0;
      }
    } else {
      fail("unknown kind '" + fields[1] + "'");
    }
    ev.outcome = parse_int(fields[5]) != 0;
    out.push_back(ev);
  }
  if (line_no == 0) fail("empty event log");
  return out;
}

void write_checkpoints_csv(const Trajectory& traj, std::ostream& out) {
  out << "time,config,walker\n";
  for (const Checkpoint& c : traj.checkpoints) {
    out << format_double(c.time) << ',' << c.state.eta.to_hex() << ',' << c.state.x << '\n';
  }
}

DiscreteResult simulate_discrete(const Graph& g, double p, double q, const EdgeConfig& eta0, std::uint64_t steps,
                                 std::uint64_t seed, std::uint64_t thin, std::shared_ptr<const SmallCutTable> table) {
  if (eta0.size() != g.num_edges()) throw Error(ErrorKind::RangeError, "configuration size does not match |E|");
  if (thin > 0 && g.num_edges() > 64) throw Error(ErrorKind::CapExceeded, "thinned samples need |E| <= 64");
  const RefreshLaw law = RefreshLaw::from(p, q);
  CutOracle cut(g, std::move(table));
  Rng rng(seed, 0, StreamTag::Discrete);
  DiscreteResult out;
  out.final_config = eta0;
  EdgeConfig& eta = out.final_config;
  const auto m = static_cast<std::uint64_t>(g.num_edges());
  if (thin > 0) out.samples.reserve(steps / thin);
  for (std::uint64_t s = 1; s <= steps; ++s) {
    const auto e = static_cast<EdgeId>(rng.below(m));
    const double u = rng.uniform();
    const bool is_cut = law.cut_matters() && cut(eta, e);
    eta.set(e, u <= law.threshold(is_cut));
    if (thin > 0 && s % thin == 0) out.samples.push_back(eta.index());
  }
  return out;
}

Trajectory simulate_wired(const Graph& g, Vertex center, int radius, const Params& params, const EdgeConfig& eta0,
                          double horizon, std::uint64_t seed, const SimulateOptions& options) {
  if (radius < 1) throw Error(ErrorKind::RangeError, "wired radius must be >= 1");
  if (center < 0 || center >= g.n()) throw Error(ErrorKind::RangeError, "center out of range");
  if (horizon < 0) throw Error(ErrorKind::RangeError, "horizon must be >= 0");
  ChainOptions chain_options;
  chain_options.walker = false;
  chain_options.always_compute_cut = options.level == RecordLevel::Full;
  chain_options.wired = ball_edges(g, center, radius);

  Trajectory traj;
  traj.initial = {eta0, center};
  for (EdgeId e : chain_options.wired) traj.initial.eta.set(e, true);
  traj.final_state = traj.initial;
  traj.horizon = horizon;
  traj.seed = seed;
  traj.params = params;
  traj.constants = try_derive(params);
  traj.level = options.level;
  if (horizon == 0) return traj;

  JointChain chain(g, RefreshLaw::from(params), params.mu, traj.initial, derive_seed(seed, 0, StreamTag::Environment),
                   options.table, chain_options);
  EventSink sink(traj, options, seed);
  if (options.level == RecordLevel::StatesOnly) {
    std::vector<double> times = options.checkpoint_times;
    std::sort(times.begin(), times.end());
    for (double t : times) {
      if (t < 0 || t > horizon) continue;
      chain.run_until(t, sink);
      traj.checkpoints.push_back({t, chain.state()});
    }
  }
  chain.run_until(horizon, sink);
  traj.final_state = chain.state();
  return traj;
}

DistributionTable sample_state_at(const Graph& g, const Params& params, const JointState& init, double t,
                                  std::uint64_t replicas, std::uint64_t seed, Marginal marginal, int jobs,
                                  std::shared_ptr<const SmallCutTable> table, Counters* counters) {
  check_state(g, init);
  if (replicas == 0) throw Error(ErrorKind::RangeError, "replicas must be >= 1");
  if (t < 0) throw Error(ErrorKind::RangeError, "time must be >= 0");
  DistributionTable out;
  out.num_edges = g.num_edges();
  out.n = g.n();
  std::size_t states = 0;
  if (marginal == Marginal::Joint) {
    if (g.num_edges() > kExactSoftCap) {
      throw Error(ErrorKind::CapExceeded, "joint tables need |E| <= " + std::to_string(kExactSoftCap));
    }
    out.kind = DistributionTable::Kind::ConfigVertex;
    states = (std::size_t{1} << g.num_edges()) * static_cast<std::size_t>(g.n());
  } else {
    out.kind = DistributionTable::Kind::Vertex;
    states = static_cast<std::size_t>(g.n());
  }
  if (!table && marginal == Marginal::Joint) table = maybe_cut_table(g);
  const RefreshLaw law = RefreshLaw::from(params);

  struct Partial {
    std::vector<std::uint64_t> counts;
    Counters counters;
  };
  const bool want_counters = counters != nullptr;
  Partial total = parallel_replicas<Partial>(
      replicas, jobs, [&] { return Partial{std::vector<std::uint64_t>(states, 0), {}}; },
      [&](std::uint64_t r, Partial& part) {
        JointChain chain(g, law, params.mu, init, derive_seed(seed, r, StreamTag::Simulation), table);
        if (want_counters) {
          chain.run_until(t, [&](const EventRecord& ev) { part.counters.add(ev); });
        } else {
          chain.run_until(t);
        }
        const JointState& s = chain.state();
        const std::uint64_t key =
            marginal == Marginal::Joint ? joint_key(s.eta.index(), g.n(), s.x) : static_cast<std::uint64_t>(s.x);
        ++part.counts[key];
      },
      [](Partial& acc, Partial& part) {
        for (std::size_t i = 0; i < acc.counts.size(); ++i) acc.counts[i] += part.counts[i];
        acc.counters.merge(part.counters);
      });

  out.support.resize(states);
  out.probs.resize(states);
  for (std::size_t i = 0; i < states; ++i) {
    out.support[i] = i;
    out.probs[i] = static_cast<double>(total.counts[i]) / static_cast<double>(replicas);
  }
  if (counters) counters->merge(total.counters);
  return out;
}

IndependentEdgeWalker::IndependentEdgeWalker(const Graph& g, double p, double mu, const EdgeConfig& eta0, Vertex x0,
                                             std::uint64_t stream_seed)
    : g_(&g), p_(p), mu_(mu), open_(g.num_edges()), last_seen_(g.num_edges(), 0.0), x_(x0), rng_(stream_seed) {
  if (eta0.size() != g.num_edges()) throw Error(ErrorKind::RangeError, "configuration size does not match |E|");
  for (EdgeId e = 0; e < g.num_edges(); ++e) open_[e] = eta0.test(e);
  next_ring_ = rng_.exponential(1.0);
}

void IndependentEdgeWalker::run_until(double t_end) {
  while (next_ring_ <= t_end) {
    time_ = next_ring_;
    const int slot = static_cast<int>(rng_.below(static_cast<std::uint64_t>(g_->d())));
    const EdgeId e = g_->slot_edge(x_, slot);
    // At least one refresh since the last look happened with probability 1 - exp(-mu gap).
    const double gap = time_ - last_seen_[e];
    if (rng_.uniform() <= -std::expm1(-mu_ * gap)) open_[e] = rng_.uniform() <= p_;
    last_seen_[e] = time_;
    if (open_[e]) x_ = g_->neighbors(x_)[slot];
    next_ring_ = time_ + rng_.exponential(1.0);
  }
  if (t_end > time_) time_ = t_end;
}

const char* init_family_name(InitFamily f) {
  switch (f) {
    case InitFamily::AllClosed:
      return "all_closed";
    case InitFamily::AllOpen:
      return "all_open";
    case InitFamily::Stationary:
      return "stationary";
  }
  return "?";
}

InitFamily parse_init_family(const std::string& name) {
  if (name == "all_closed") return InitFamily::AllClosed;
  if (name == "all_open") return InitFamily::AllOpen;
  if (name == "stationary") return InitFamily::Stationary;
  throw Error(ErrorKind::InvalidConfig, "unknown initial-state family '" + name + "'");
}

EdgeConfig initial_config(const Graph& g, const Params& params, InitFamily family, std::uint64_t seed,
                          std::uint64_t replica) {
  switch (family) {
    case InitFamily::AllClosed:
      return EdgeConfig(g.num_edges(), false);
    case InitFamily::AllOpen:
      return EdgeConfig(g.num_edges(), true);
    case InitFamily::Stationary:
      break;
  }
  const std::uint64_t steps = 200ULL * static_cast<std::uint64_t>(g.num_edges());
  return simulate_discrete(g, params.p, params.q, EdgeConfig(g.num_edges(), false), steps,
                           derive_seed(seed, replica, StreamTag::InitialState))
      .final_config;
}

}  // namespace dynwalk
