#include "dynwalk/params.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "dynwalk/errors.hpp"

namespace dynwalk {

namespace {

// Snap values that are integers up to rounding so that floors of exact
// logarithms (log2 1024 = 10) do not land one below.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw Error(ErrorKind::InvalidConfig, "cannot parse value '" + text + "' for key '" + key + "'");
  }
  return value;
}

}  // namespace

double open_prob_cut(double p, double q) { return p / (q * (1.0 - p) + p); }
double open_prob_noncut(double p) { return p; }

Params with_defaults(Params raw) {
  if (!raw.p_u && raw.q == 1.0 && raw.d >= 3) raw.p_u = 1.0 / (raw.d - 1);
  return raw;
}

Params validate_params(const Params& raw) {
  if (raw.n == 0) throw Error(ErrorKind::RangeError, "n must be positive");
  if (raw.d < 3) throw Error(ErrorKind::RangeError, "d must be >= 3, got " + std::to_string(raw.d));
  if ((raw.n * static_cast<std::uint64_t>(raw.d)) % 2 != 0) {
    throw Error(ErrorKind::InfeasibleDegree,
                "n*d = " + std::to_string(raw.n * raw.d) + " is odd; no d-regular graph exists");
  }
  if (!(raw.p > 0.0 && raw.p < 1.0)) throw Error(ErrorKind::RangeError, "p must lie in (0,1)");
  if (!(raw.q > 0.0) || !std::isfinite(raw.q)) throw Error(ErrorKind::RangeError, "q must be > 0");
  if (!(raw.mu > 0.0) || !std::isfinite(raw.mu)) throw Error(ErrorKind::RangeError, "mu must be > 0");
  if (!(raw.eps > 0.0) || !std::isfinite(raw.eps)) throw Error(ErrorKind::RangeError, "eps must be > 0");
  if (!raw.p_u) throw Error(ErrorKind::RangeError, "p_u must be supplied when q != 1");
  if (!(*raw.p_u > 0.0 && *raw.p_u <= 1.0)) throw Error(ErrorKind::RangeError, "p_u must lie in (0,1]");
  if (!(raw.c_burn > 0.0)) throw Error(ErrorKind::RangeError, "c_burn must be > 0");
  if (raw.k_sparse < 1) throw Error(ErrorKind::RangeError, "k_sparse must be a positive integer");
  return raw;
}

DerivedConstants derive_constants(const Params& params) {
  if (params.n < 3) throw Error(ErrorKind::RangeError, "derived constants need n >= 3");
  const double n = static_cast<double>(params.n);
  const double d = params.d;
  const double log_base = std::log(d - 1.0);

  DerivedConstants c;
  c.p_min = std::min(params.p, open_prob_cut(params.p, params.q));
  c.p_max = std::max(params.p, open_prob_cut(params.p, params.q));
  c.log_n = std::log(n);
  c.log_dm1_n = snap(c.log_n / log_base);
  c.log_dm1_log_n = snap(std::log(c.log_n) / log_base);

  c.R = c.log_dm1_n / 5.0;
  const double shrink = std::log(2.0 / (1.0 + params.p_u.value_or(1.0)));
  c.r = shrink > 0.0 ? 3.0 * std::log(c.log_n) / shrink : std::numeric_limits<double>::infinity();
  c.k = std::max(0, static_cast<int>(std::floor(c.log_dm1_log_n)));

  const int floor_l = static_cast<int>(std::floor(c.log_dm1_n));
  const int floor_ll = static_cast<int>(std::floor(c.log_dm1_log_n));
  c.h_min = floor_l + 2 * floor_ll;
  c.h_max = floor_l + static_cast<int>(std::floor(snap(c.log_dm1_n / 10.0))) - 1;

  const double speed = (d / (d - 2.0)) * (1.0 / c.p_min);
  c.t1 = 1.0 + params.c_burn + speed * (1.0 / 40.0) * c.log_dm1_n;
  c.t2 = c.t1 + params.c_burn + speed * ((81.0 / 80.0) * c.log_dm1_n + c.log_dm1_log_n);
  c.alpha_max = static_cast<std::int64_t>(std::floor(snap((4.0 / c.p_min) * c.log_dm1_n)));
  return c;
}

std::map<std::string, std::string> params_to_kv(const Params& params) {
  std::map<std::string, std::string> kv;
  kv["n"] = std::to_string(params.n);
  kv["d"] = std::to_string(params.d);
  kv["p"] = format_double(params.p);
  kv["q"] = format_double(params.q);
  kv["mu"] = format_double(params.mu);
  kv["eps"] = format_double(params.eps);
  if (params.p_u) kv["p_u"] = format_double(*params.p_u);
  kv["seed"] = std::to_string(params.seed);
  kv["c_burn"] = format_double(params.c_burn);
  kv["k_sparse"] = std::to_string(params.k_sparse);
  return kv;
}

Params params_from_kv(const std::map<std::string, std::string>& kv) {
  Params out;
  for (const auto& [key, value] : kv) {
    if (key == "n") out.n = parse_number<std::uint64_t>(key, value);
    else if (key == "d") out.d = parse_number<int>(key, value);
    else if (key == "p") out.p = parse_number<double>(key, value);
    else if (key == "q") out.q = parse_number<double>(key, value);
    else if (key == "mu") out.mu = parse_number<double>(key, value);
    else if (key == "eps") out.eps = parse_number<double>(key, value);
    else if (key == "p_u") out.p_u = parse_number<double>(key, value);
    else if (key == "seed") out.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "c_burn") out.c_burn = parse_number<double>(key, value);
    else if (key == "k_sparse") out.k_sparse = parse_number<int>(key, value);
  }
  return out;
}

}  // namespace dynwalk
