#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynwalk/dynamics.hpp"
#include "dynwalk/experiment.hpp"
#include "dynwalk/parallel.hpp"

using namespace dynwalk;

std::string detail_num(double v);

namespace {

// Values given on the command line, stored as strings so they merge into a
// key=value config with the same parser.
struct CommonFlags {
  std::string config;
  std::optional<std::string> n, d, p, q, mu, eps, pu, seed, replicas, horizon, jobs, out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key=value config file");
  app->add_option("--n", f.n, "number of vertices");
  app->add_option("--d", f.d, "degree");
  app->add_option("--p", f.p, "edge parameter p");
  app->add_option("--q", f.q, "cluster weight q");
  app->add_option("--mu", f.mu, "edge refresh rate");
  app->add_option("--eps", f.eps, "eps");
  app->add_option("--pu", f.pu, "p_u (defaults to 1/(d-1) when q = 1)");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--replicas", f.replicas, "Monte Carlo replicas");
  app->add_option("--horizon", f.horizon, "time horizon");
  app->add_option("--jobs", f.jobs, "worker threads");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

KeyValues merged(const CommonFlags& f) {
  KeyValues kv = f.config.empty() ? KeyValues{} : load_key_values(f.config);
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) kv[key] = *v;
  };
  put("n", f.n);
  put("d", f.d);
  put("p", f.p);
  put("q", f.q);
  put("mu", f.mu);
  put("eps", f.eps);
  put("p_u", f.pu);
  put("seed", f.seed);
  put("replicas", f.replicas);
  put("horizon", f.horizon);
  put("jobs", f.jobs);
  put("out_dir", f.out);
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::InvalidConfig, "--set expects key=value, got " + s);
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

std::string take(KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::string v = it->second;
  kv.erase(it);
  return v;
}

void reject_leftovers(const KeyValues& kv, const std::string& command) {
  static const std::set<std::string> params{"n", "d", "p", "q", "mu", "eps", "p_u", "seed", "c_burn", "k_sparse"};
  for (const auto& [k, v] : kv) {
    if (!params.count(k)) throw Error(ErrorKind::InvalidConfig, "key '" + k + "' is not used by " + command);
  }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && x >= 0 && x == static_cast<double>(static_cast<std::uint64_t>(x))) {
      return static_cast<std::uint64_t>(x);
    }
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidConfig, key + " expects a non-negative integer, got '" + v + "'");
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidConfig, key + " expects a number, got '" + v + "'");
}

Params checked(const KeyValues& kv) { return validate_params(with_defaults(params_from_kv(kv))); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
}

int cmd_generate(const CommonFlags& f) {
  KeyValues kv = merged(f);
  const std::string out = take(kv, "out_dir", ".");
  reject_leftovers(kv, "generate");
  const Params params = checked(kv);
  const Graph g = generate_regular(static_cast<int>(params.n), params.d, params.seed);
  std::filesystem::create_directories(out);
  const auto path = std::filesystem::path(out) / "graph.txt";
  save_graph(g, path.string());
  std::cout << "wrote " << path.string() << " (n=" << g.n() << ", d=" << g.d() << ", seed=" << params.seed << ")\n";
  return 0;
}

struct SimulateFlags {
  std::string graph;
  std::string record = "counters";
  std::string init = "all_closed";
  int x0 = 0;
  std::vector<double> checkpoints;
};

int cmd_simulate(const CommonFlags& f, const SimulateFlags& s) {
  KeyValues kv = merged(f);
  const std::string out = take(kv, "out_dir", "out/simulate");
  const double horizon = to_real("horizon", take(kv, "horizon", "10"));
  take(kv, "jobs", "1");
  reject_leftovers(kv, "simulate");
  const Params params = checked(kv);
  const Graph g = s.graph.empty() ? generate_regular(static_cast<int>(params.n), params.d, params.seed)
                                  : load_graph(s.graph);
  if (g.n() != static_cast<int>(params.n) || g.d() != params.d) {
    throw Error(ErrorKind::InvalidConfig, "graph file disagrees with n or d");
  }
  if (s.x0 < 0 || s.x0 >= g.n()) throw Error(ErrorKind::InvalidConfig, "x0 out of range");
  const InitFamily family = parse_init_family(s.init);
  SimulateOptions options;
  if (s.record == "full") options.level = RecordLevel::Full;
  else if (s.record == "states") options.level = RecordLevel::StatesOnly;
  else if (s.record == "counters") options.level = RecordLevel::Counters;
  else throw Error(ErrorKind::InvalidConfig, "--record must be full, states or counters");
  options.checkpoint_times = s.checkpoints;
  options.table = maybe_cut_table(g);
  const JointState init{initial_config(g, params, family, params.seed, 0), s.x0};
  const Trajectory traj =
      simulate(g, params, init, horizon, derive_seed(params.seed, 0, StreamTag::Simulation), options);

  std::filesystem::create_directories(out);
  const std::filesystem::path dir(out);
  save_graph(g, (dir / "graph.txt").string());
  if (traj.level == RecordLevel::Full) {
    std::ofstream ev(dir / "events.csv");
    write_events_csv(traj, ev);
  }
  if (traj.level == RecordLevel::StatesOnly) {
    std::ofstream cp(dir / "checkpoints.csv");
    write_checkpoints_csv(traj, cp);
  }
  ResultRecord r;
  r.timestamp = result_timestamp();
  r.git_describe = build_git_describe();
  r.config = params_to_kv(params);
  r.config["horizon"] = detail_num(horizon);
  r.config["init"] = init_family_name(family);
  r.config["x0"] = std::to_string(s.x0);
  r.config["record"] = s.record;
  r.params = params_json(params);
  r.derived_constants = constants_json(traj.constants);
  const Counters& c = traj.counters;
  r.metrics = Json{{"walker_rings", c.walker_rings}, {"walker_moves", c.walker_moves},
                   {"edge_rings", c.edge_rings},     {"edge_opens", c.edge_opens},
                   {"cut_rings", c.cut_rings},       {"cut_opens", c.cut_opens},
                   {"noncut_rings", c.noncut_rings}, {"noncut_opens", c.noncut_opens},
                   {"final_x", traj.final_state.x},  {"final_eta", traj.final_state.eta.to_hex()},
                   {"final_open_edges", traj.final_state.eta.open_count()},
                   {"downgraded", traj.downgraded},  {"stream_seed", traj.seed}};
  write_file(dir / "summary.json", r.to_json().dump(2) + "\n");
  std::cout << "simulated to t=" << horizon << ": " << c.walker_rings << " walker rings, " << c.edge_rings
            << " edge rings; output in " << out << "\n";
  return 0;
}

int cmd_experiment(const CommonFlags& f, const std::string& experiment) {
  KeyValues kv = merged(f);
  if (!experiment.empty()) kv["experiment"] = experiment;
  ExperimentConfig config = experiment_config_from_kv(kv);
  if (config.out_dir.empty()) config.out_dir = "out/" + config.experiment;
  const ExperimentOutput out = execute_experiment(config);
  write_experiment_output(out, config.out_dir);
  for (const auto& [k, v] : out.summary.verdicts) std::cout << v << "  " << k << "\n";
  std::cout << "results in " << config.out_dir << "\n";
  return verdict_exit_code(out.summary);
}

int cmd_verify(const CommonFlags& f, std::string level) {
  KeyValues kv = merged(f);
  VerifyOptions options;
  level = take(kv, "level", level);
  if (level == "fast") options.level = VerifyLevel::Fast;
  else if (level == "full") options.level = VerifyLevel::Full;
  else throw Error(ErrorKind::InvalidConfig, "level must be fast or full");
  options.seed = to_count("seed", take(kv, "seed", "1"));
  if (kv.count("replicas")) options.replicas = to_count("replicas", take(kv, "replicas", ""));
  options.jobs = static_cast<int>(to_count("jobs", take(kv, "jobs", "1")));
  if (options.jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
  const std::string out = take(kv, "out_dir", "");
  take(kv, "experiment", "");
  if (!kv.empty()) throw Error(ErrorKind::InvalidConfig, "key '" + kv.begin()->first + "' is not used by verify");
  const VerifyReport report = verify_suite(options);
  std::cout << report.table();
  if (!out.empty()) write_verify_output(report, out);
  return report.any_fail() ? kExitFailVerdict : 0;
}

int cmd_info(const CommonFlags& f) {
  KeyValues kv = merged(f);
  take(kv, "out_dir", "");
  take(kv, "jobs", "");
  reject_leftovers(kv, "info");
  const Params params = checked(kv);
  Json j;
  j["git_describe"] = build_git_describe();
  j["params"] = params_json(params);
  std::optional<DerivedConstants> consts;
  if (params.n >= 3) consts = derive_constants(params);
  j["derived_constants"] = constants_json(consts);
  j["refresh_law"] = Json{{"cut", open_prob_cut(params.p, params.q)}, {"noncut", open_prob_noncut(params.p)}};
  Json names = Json::array();
  for (const auto& n : experiment_names()) names.push_back(n);
  j["experiments"] = names;
  const auto budget = RunBudget::limit_seconds();
  j["budget_seconds"] = budget ? Json(*budget) : Json(nullptr);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walk on a dynamical random-cluster environment on random regular graphs"};
  app.require_subcommand(1);

  CommonFlags gen_f, sim_f, exp_f, ver_f, info_f;
  SimulateFlags sim;
  std::string experiment;
  std::string level = "fast";

  auto* gen = app.add_subcommand("generate", "sample a uniform simple d-regular graph");
  add_common(gen, gen_f);
  auto* simc = app.add_subcommand("simulate", "run the joint chain and record a trajectory");
  add_common(simc, sim_f);
  simc->add_option("--graph", sim.graph, "graph file (generated from n, d, seed when absent)");
  simc->add_option("--record", sim.record, "full, states or counters");
  simc->add_option("--init", sim.init, "all_closed, all_open or stationary");
  simc->add_option("--x0", sim.x0, "initial walker position");
  simc->add_option("--checkpoints", sim.checkpoints, "checkpoint times for --record states")->delimiter(',');
  auto* exp = app.add_subcommand("experiment", "run a registered experiment");
  add_common(exp, exp_f);
  exp->add_option("--experiment", experiment, "experiment name");
  auto* ver = app.add_subcommand("verify", "run the verification suite");
  add_common(ver, ver_f);
  ver->add_option("--level", level, "fast or full");
  auto* info = app.add_subcommand("info", "print parameters, derived constants and build info");
  add_common(info, info_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunBudget::start();
    if (*gen) return cmd_generate(gen_f);
    if (*simc) return cmd_simulate(sim_f, sim);
    if (*exp) return cmd_experiment(exp_f, experiment);
    if (*ver) return cmd_verify(ver_f, level);
    if (*info) return cmd_info(info_f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

std::string detail_num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}
