#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynwalk/dynamics.hpp"
#include "dynwalk/environment.hpp"
#include "dynwalk/walks.hpp"
#include "experiment_internal.hpp"

namespace dynwalk {

namespace {

using detail::num;

struct Suite {
  std::vector<VerifyRow> rows;

  void add(const std::string& lemma, const std::string& check, bool ok, const std::string& detail) {
    rows.push_back({lemma, check, ok ? "pass" : "fail", detail});
  }
  void add_verdict(const std::string& lemma, const std::string& check, const std::string& verdict,
                   const std::string& detail) {
    rows.push_back({lemma, check, verdict, detail});
  }
};

std::string lemma_for(const std::string& verdict_key) {
  static const std::map<std::string, std::string> names{
      {"detailed_balance", "refresh dynamics reversibility"},
      {"poisson", "poisson window concentration"},
      {"f_alpha", "f_alpha maximiser and gap bound"},
      {"ballot_formula", "constrained walk ballot count"},
      {"omega_exceeds_tilde", "tree walk count comparison"},
      {"path_count_bound", "walks through a vertex bound"},
      {"transition", "transition event lower bound"},
      {"stationary", "stationary event lower bound"},
      {"cut", "cut edge refresh lower bound"},
      {"last_arrival", "last arrival law"},
      {"simplex", "gap-constrained simplex integral"},
      {"mean_c3", "short cycle counts"},
      {"mean_c4", "short cycle counts"},
      {"environment_tv", "environment stationarity"},
      {"joint_tv", "joint stationarity"},
      {"refresh_law_violations", "refresh law audit"},
      {"refresh_law_frequencies", "refresh law audit"},
      {"trajectory", "trajectory probability lower bound"},
      {"failure_decreases_in_K", "boundary sparsity after burn-in"},
      {"failure_below_threshold", "boundary sparsity after burn-in"},
  };
  const std::string head = verdict_key.substr(0, verdict_key.find('/'));
  const auto it = names.find(head);
  return it == names.end() ? head : it->second;
}

void run_sub(Suite& suite, const std::string& experiment, Params params, KeyValues overrides, int jobs) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.params = params;
  cfg.overrides = std::move(overrides);
  cfg.jobs = jobs;
  const ExperimentOutput out = execute_experiment(cfg);
  for (const auto& [key, verdict] : out.summary.verdicts) {
    const auto slash = key.find('/');
    const std::string check = slash == std::string::npos ? key : key.substr(slash + 1);
    suite.add_verdict(lemma_for(key), experiment + ": " + check, verdict, "");
  }
}

void exact_checks(Suite& s) {
  {
    Params p;
    p.p = 0.2;
    p.q = 2;
    p.n = 1024;
    p.p_u = 0.5;
    const DerivedConstants c = derive_constants(validate_params(with_defaults(p)));
    s.add("derived constants", "p_min at q=2, p=0.2 is 1/9", std::abs(c.p_min - 1.0 / 9) < 1e-15 && c.p_max == 0.2,
          "p_min=" + num(c.p_min));
    s.add("derived constants", "R and k at d=3, n=1024", std::abs(c.R - 2) < 1e-12 && c.k == 2,
          "R=" + num(c.R) + " k=" + std::to_string(c.k));
  }
  const Graph k4 = complete_graph_k4();
  {
    const auto c = cycle_counts(k4, 4);
    s.add("short cycle counts", "K4 has 4 triangles and 3 four-cycles", c[3] == 4 && c[4] == 3,
          "C3=" + std::to_string(c[3]) + " C4=" + std::to_string(c[4]));
    s.add("short cycle counts", "every K4 vertex lies on a cycle shorter than 4",
          short_cycle_vertices(k4, 4).size() == 4, "");
    s.add("tree-like neighbourhoods", "no K4 vertex is a 1-root", !is_k_root(k4, 0, 1), "");
  }
  {
    const bool ok = tilde_omega(3, 1, 0) == 2 && tilde_omega(3, 2, 1) == 24 && omega_bruteforce(3, 1, 0) == 3 &&
                    omega_bruteforce(3, 2, 1) == 42;
    s.add("constrained walk ballot count", "closed form and tree counts at small (h,i)", ok,
          "tilde(3,2,1)=" + tilde_omega(3, 2, 1).str() + " omega(3,2,1)=" + omega_bruteforce(3, 2, 1).str());
    s.add("walks through a vertex bound", "two simple 2-paths between K4 vertices",
          count_simple_paths(k4, 0, 1, 2) == 2, "");
  }
  {
    std::stringstream ss;
    save_graph(k4, ss);
    s.add("graph files", "K4 save then load is the identity", load_graph(ss) == k4, "");
    std::stringstream bad("4 3\n0 1\n0 1\n");
    bool rejected = false;
    try {
      load_graph(bad);
    } catch (const Error& e) {
      rejected = e.kind() == ErrorKind::ParseError;
    }
    s.add("graph files", "duplicate edge line is rejected", rejected, "");
  }
  {
    // Forest with u > p_min closes a cut edge; a triangle edge with u in (p_min, p] opens.
    const Graph g = k4;
    EdgeConfig forest(g.num_edges());
    const EdgeConfig closed = environment_update(g, forest, 0, 0.99, 1.0 / 9, 0.2);
    EdgeConfig tri(g.num_edges());
    const EdgeId e01 = *g.edge_index(0, 1);
    tri.set(*g.edge_index(0, 2), true);
    tri.set(*g.edge_index(1, 2), true);
    const EdgeConfig opened = environment_update(g, tri, e01, 0.15, 1.0 / 9, 0.2);
    s.add("heat-bath refresh", "cut and non-cut thresholds on K4", !closed.test(0) && opened.test(e01), "");
  }
  {
    Params p;
    p.p = 0.2;
    p.q = 2;
    const double b = transition_bound(p, 1e3);
    s.add("transition event lower bound", "large-window limit is p_min/d = 1/27", std::abs(b - 1.0 / 27) < 1e-15,
          "bound=" + num(b));
  }
  {
    Params p;
    p.p = 0.2;
    p.q = 2;
    p.mu = 2;
    p.p_u = 0.5;
    const CutBounds b = cut_bound_formulas(validate_params(p), 1.0, 4, 5, 0);
    const double base = 0.2 + 0.8 * std::exp(-2.0);
    s.add("cut edge refresh lower bound", "acyclic bound at p=0.2, mu x=2, r=5",
          std::abs(b.acyclic_lb - (1 - std::pow(base, 4))) < 1e-14, "acyclic_lb=" + num(b.acyclic_lb));
    s.add("cut edge refresh lower bound", "K=0 path bound is 1", b.path_lb == 1.0, "");
  }
  {
    // Mean 1 on {0, 1, 2}: e^{-1}(1 + 1 + 1/2).
    const double mass = poisson_window_prob(0, 2);
    s.add("poisson window concentration", "window {0,1,2} at mean 1", std::abs(mass - 2.5 * std::exp(-1.0)) < 1e-15,
          "mass=" + num(mass));
  }
}

}  // namespace

bool VerifyReport::any_fail() const {
  return std::any_of(rows.begin(), rows.end(), [](const VerifyRow& r) { return r.verdict == "fail"; });
}

std::string VerifyReport::table() const {
  std::size_t w_lemma = 5, w_check = 5;
  for (const auto& r : rows) {
    w_lemma = std::max(w_lemma, r.lemma.size());
    w_check = std::max(w_check, r.check.size());
  }
  std::ostringstream out;
  char buf[1024];
  std::snprintf(buf, sizeof buf, "%-*s  %-*s  %s\n", static_cast<int>(w_lemma), "lemma", static_cast<int>(w_check),
                "check", "verdict");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %s", static_cast<int>(w_lemma), r.lemma.c_str(),
                  static_cast<int>(w_check), r.check.c_str(), r.verdict.c_str());
    out << buf;
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << '\n';
  }
  return out.str();
}

std::string VerifyReport::csv() const {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out = "lemma,check,verdict,detail\n";
  for (const auto& r : rows) {
    out += quote(r.lemma) + "," + quote(r.check) + "," + r.verdict + "," + quote(r.detail) + "\n";
  }
  return out;
}

VerifyReport verify_suite(const VerifyOptions& options) {
  Suite suite;
  exact_checks(suite);

  Params base;
  base.n = 16;
  base.d = 3;
  base.p = 0.3;
  base.q = 2;
  base.mu = 5;
  base.p_u = 0.5;
  base.seed = options.seed;

  run_sub(suite, "lemma_suite", base, {{"checks", "detailed_balance,poisson,f_alpha"}}, options.jobs);
  {
    Params p = base;
    p.n = 16;
    run_sub(suite, "walkcounts", p, {{"max_length", "12"}}, options.jobs);
  }

  if (options.level == VerifyLevel::Full) {
    const std::uint64_t cap = options.replicas.value_or(20'000);
    const std::string reps = std::to_string(cap);
    run_sub(suite, "lemma_suite", base,
            {{"checks", "transition,stationary,cut,last_arrival,simplex"},
             {"replicas", reps},
             {"la_samples", std::to_string(std::max<std::uint64_t>(cap, 1000))},
             {"sx_samples", reps}},
            options.jobs);
    {
      Params p = base;
      p.n = 8;
      run_sub(suite, "stationarity", p,
              {{"steps", std::to_string(std::max<std::uint64_t>(cap * 50, 10'000))},
               {"thin", "100"},
               {"replicas", reps},
               {"horizon", "50"},
               {"audit_replicas", "10"}},
              options.jobs);
    }
    {
      Params p = base;
      p.n = 2000;
      run_sub(suite, "cycles", p, {{"graphs", std::to_string(std::min<std::uint64_t>(cap, 300))}}, options.jobs);
    }
    {
      Params p = base;
      p.n = 64;
      run_sub(suite, "trajectory", p, {{"replicas", reps}, {"alphas", "0,1"}, {"r_override", "4"}}, options.jobs);
    }
  }

  VerifyReport report;
  report.rows = std::move(suite.rows);
  ResultRecord& r = report.record;
  r.timestamp = result_timestamp();
  r.git_describe = build_git_describe();
  r.config = {{"level", options.level == VerifyLevel::Fast ? "fast" : "full"},
              {"seed", std::to_string(options.seed)}};
  if (options.replicas) r.config["replicas"] = std::to_string(*options.replicas);
  r.params = params_json(base);
  r.derived_constants = constants_json(derive_constants(validate_params(with_defaults(base))));
  Json rows = Json::array();
  std::map<std::string, int> seen;
  for (const auto& row : report.rows) {
    rows.push_back(Json{{"lemma", row.lemma}, {"check", row.check}, {"verdict", row.verdict}, {"detail", row.detail}});
    std::string key = row.lemma + "/" + row.check;
    if (int k = seen[key]++; k > 0) key += "#" + std::to_string(k + 1);
    r.verdicts[key] = row.verdict;
  }
  r.metrics["rows"] = rows;
  r.metrics["any_fail"] = report.any_fail();
  return report;
}

void write_verify_output(const VerifyReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream json(base / "verify.json");
  json << report.record.to_json().dump(2) << '\n';
  std::ofstream csv(base / "verify.csv");
  csv << report.csv();
  if (!json || !csv) throw Error(ErrorKind::InvalidConfig, "cannot write verify output into " + dir);
}

}  // namespace dynwalk
