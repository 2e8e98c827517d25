#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace dynwalk {

/// Model inputs. `p_u` may be left unset when q == 1, in which case
/// `with_defaults` fills in the tree percolation threshold 1/(d-1).
struct Params {
  std::uint64_t n = 8;
  int d = 3;
  double p = 0.3;
  double q = 1.0;
  double mu = 1.0;
  double eps = 1.0;
  std::optional<double> p_u;
  std::uint64_t seed = 1;
  double c_burn = 10.0;
  int k_sparse = 8;

  bool operator==(const Params&) const = default;
};

struct DerivedConstants {
  double p_min = 0;
  double p_max = 0;
  double R = 0;           // ball radius, real; consumers floor it
  double r = 0;           // short-cycle threshold; +inf when p_u == 1
  int k = 0;              // k-root radius
  int h_min = 0;
  int h_max = 0;
  double t1 = 0;
  double t2 = 0;
  std::int64_t alpha_max = 0;
  double log_n = 0;       // natural log
  double log_dm1_n = 0;   // log base (d-1) of n
  double log_dm1_log_n = 0;

  int radius() const { return static_cast<int>(R); }
};

/// Fills p_u = 1/(d-1) for q == 1 when absent. Everything else is untouched.
Params with_defaults(Params raw);

/// Throws InfeasibleDegree or RangeError; returns the record unchanged otherwise.
Params validate_params(const Params& raw);

/// Requires validated params with n >= 3.
DerivedConstants derive_constants(const Params& params);

/// Heat-bath opening probabilities for a cut and a non-cut edge.
double open_prob_cut(double p, double q);
double open_prob_noncut(double p);

/// Flat key=value form; keys are the field names of Params.
std::map<std::string, std::string> params_to_kv(const Params& params);
Params params_from_kv(const std::map<std::string, std::string>& kv);

}  // namespace dynwalk
