#include <doctest.h>

#include <cmath>

#include "dynwalk/errors.hpp"
#include "dynwalk/params.hpp"

using namespace dynwalk;

namespace {
Params base() {
  Params p;
  p.n = 1024;
  p.d = 3;
  p.p = 0.2;
  p.q = 2;
  p.p_u = 0.5;
  return p;
}
}  // namespace

TEST_CASE("p_min and p_max at q=2, p=0.2") {
  const DerivedConstants c = derive_constants(validate_params(base()));
  CHECK(c.p_min == doctest::Approx(1.0 / 9).epsilon(1e-15));
  CHECK(c.p_max == 0.2);
}

TEST_CASE("p_min is p below q=1") {
  Params p = base();
  p.q = 0.5;
  const DerivedConstants c = derive_constants(validate_params(p));
  CHECK(c.p_min == doctest::Approx(0.2));
  CHECK(c.p_max == doctest::Approx(0.2 / (0.5 * 0.8 + 0.2)));
}

TEST_CASE("radius and k-root depth at d=3, n=1024") {
  const DerivedConstants c = derive_constants(validate_params(base()));
  CHECK(c.R == doctest::Approx(2.0));
  CHECK(c.radius() == 2);
  CHECK(c.k == 2);
  CHECK(c.h_min == 14);  // 10 + 2 floor(log2 log 1024)
  CHECK(c.h_max == 10);  // 10 + 1 - 1
}

TEST_CASE("p_u defaults to 1/(d-1) only at q=1") {
  Params p = base();
  p.p_u.reset();
  p.q = 1;
  CHECK(*with_defaults(p).p_u == doctest::Approx(0.5));
  p.q = 2;
  CHECK_FALSE(with_defaults(p).p_u.has_value());
  CHECK_THROWS_AS(validate_params(p), Error);
}

TEST_CASE("invalid parameters are rejected with their kinds") {
  auto kind_of = [](Params p) {
    try {
      validate_params(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::DomainError;
  };
  Params odd = base();
  odd.n = 7;
  CHECK(kind_of(odd) == ErrorKind::InfeasibleDegree);
  Params bad_p = base();
  bad_p.p = 1.0;
  CHECK(kind_of(bad_p) == ErrorKind::RangeError);
  Params bad_d = base();
  bad_d.d = 2;
  CHECK(kind_of(bad_d) == ErrorKind::RangeError);
}

TEST_CASE("key=value round trip") {
  Params p = base();
  p.seed = 12345678901234ULL;
  p.mu = 0.1;
  CHECK(params_from_kv(params_to_kv(p)) == p);
}

TEST_CASE("refresh probabilities") {
  CHECK(open_prob_cut(0.2, 2) == doctest::Approx(1.0 / 9));
  CHECK(open_prob_noncut(0.2) == 0.2);
  CHECK(open_prob_cut(0.3, 1) == doctest::Approx(0.3));
}
