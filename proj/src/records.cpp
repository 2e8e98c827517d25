#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>

#include "dynwalk/experiment.hpp"

#ifndef DYNWALK_GIT_DESCRIBE
#define DYNWALK_GIT_DESCRIBE "unknown"
#endif

namespace dynwalk {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_param_key(const std::string& key) {
  static const std::set<std::string> keys{"n", "d", "p", "q", "mu", "eps", "p_u", "seed", "c_burn", "k_sparse"};
  return keys.count(key) > 0;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw Error(ErrorKind::ParseError, where + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, where + ": empty key");
    if (!kv.emplace(key, value).second) throw Error(ErrorKind::ParseError, where + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config file " + path);
  return parse_key_values(in, path);
}

void write_key_values(const KeyValues& kv, std::ostream& out) {
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

ExperimentConfig experiment_config_from_kv(const KeyValues& kv) {
  ExperimentConfig config;
  KeyValues param_kv;
  for (const auto& [key, value] : kv) {
    if (key == "experiment") {
      config.experiment = value;
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "jobs") {
      try {
        config.jobs = std::stoi(value);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidConfig, "jobs must be an integer, got '" + value + "'");
      }
      if (config.jobs < 1) throw Error(ErrorKind::InvalidConfig, "jobs must be >= 1");
    } else if (is_param_key(key)) {
      param_kv[key] = value;
    } else {
      config.overrides[key] = value;
    }
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), config.experiment) == names.end()) {
    throw Error(ErrorKind::InvalidConfig, "unknown experiment '" + config.experiment + "'");
  }
  config.params = params_from_kv(param_kv);
  return config;
}

KeyValues experiment_config_to_kv(const ExperimentConfig& config) {
  KeyValues kv = params_to_kv(config.params);
  for (const auto& [k, v] : config.overrides) kv[k] = v;
  kv["experiment"] = config.experiment;
  kv["jobs"] = std::to_string(config.jobs);
  return kv;
}

Json ResultRecord::to_json() const {
  Json j;
  j["schema_version"] = schema_version;
  j["timestamp"] = timestamp;
  j["git_describe"] = git_describe;
  j["config"] = config;
  j["params"] = params;
  j["derived_constants"] = derived_constants;
  j["metrics"] = metrics;
  j["verdicts"] = verdicts;
  return j;
}

ResultRecord ResultRecord::from_json(const Json& j) {
  try {
    ResultRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.git_describe = j.at("git_describe").get<std::string>();
    r.config = j.at("config").get<KeyValues>();
    r.params = j.at("params");
    r.derived_constants = j.at("derived_constants");
    r.metrics = j.at("metrics");
    r.verdicts = j.at("verdicts").get<std::map<std::string, std::string>>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("result record: ") + e.what());
  }
}

std::string result_timestamp() {
  std::time_t now = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (*end != '\0' || v < 0) throw Error(ErrorKind::InvalidConfig, "SOURCE_DATE_EPOCH must be a non-negative integer");
    now = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string build_git_describe() { return DYNWALK_GIT_DESCRIBE; }

Json params_json(const Params& params) {
  Json j;
  j["n"] = params.n;
  j["d"] = params.d;
  j["p"] = params.p;
  j["q"] = params.q;
  j["mu"] = params.mu;
  j["eps"] = params.eps;
  const Params full = with_defaults(params);
  j["p_u"] = full.p_u ? Json(*full.p_u) : Json(nullptr);
  j["p_u_defaulted"] = !params.p_u.has_value() && full.p_u.has_value();
  j["seed"] = params.seed;
  j["c_burn"] = params.c_burn;
  j["k_sparse"] = params.k_sparse;
  return j;
}

Json constants_json(const std::optional<DerivedConstants>& constants) {
  if (!constants) return nullptr;
  const DerivedConstants& c = *constants;
  Json j;
  j["p_min"] = c.p_min;
  j["p_max"] = c.p_max;
  j["R"] = c.R;
  j["r"] = finite_or_null(c.r);
  j["k"] = c.k;
  j["h_min"] = c.h_min;
  j["h_max"] = c.h_max;
  j["t1"] = c.t1;
  j["t2"] = c.t2;
  j["alpha_max"] = c.alpha_max;
  j["log_n"] = c.log_n;
  j["log_dm1_n"] = c.log_dm1_n;
  j["log_dm1_log_n"] = c.log_dm1_log_n;
  return j;
}

Json estimate_json(const Estimate& est) {
  return Json{{"point", est.point}, {"ci", Json::array({est.ci_low, est.ci_high})}, {"se", est.se},
              {"replicas", est.replicas}, {"seed", est.seed}};
}

Json estimator_record(const std::string& op, const Params& params, const Estimate& est, std::optional<double> bound,
                      const std::string& verdict) {
  std::optional<DerivedConstants> consts;
  try {
    consts = derive_constants(validate_params(with_defaults(params)));
  } catch (const Error&) {
  }
  Json j;
  j["op"] = op;
  j["params"] = params_json(params);
  j["derived_constants"] = constants_json(consts);
  j["estimate"] = est.point;
  j["ci"] = Json::array({est.ci_low, est.ci_high});
  j["se"] = est.se;
  j["bound"] = bound ? Json(*bound) : Json(nullptr);
  j["verdict"] = verdict;
  j["seed"] = est.seed;
  j["replicas"] = est.replicas;
  return j;
}

int verdict_exit_code(const ResultRecord& record) {
  for (const auto& [name, v] : record.verdicts) {
    if (v == "fail") return kExitFailVerdict;
  }
  return 0;
}

}  // namespace dynwalk
