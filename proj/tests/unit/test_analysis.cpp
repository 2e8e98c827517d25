#include <doctest.h>

#include <cmath>

#include "dynwalk/analysis.hpp"
#include "dynwalk/errors.hpp"
#include "oracles.hpp"

using namespace dynwalk;

TEST_CASE("Wilson interval contains the point and stays in [0,1]") {
  const Estimate e = wilson_estimate(30, 100, 1);
  CHECK(e.point == doctest::Approx(0.3));
  CHECK(e.ci_low < 0.3);
  CHECK(e.ci_high > 0.3);
  CHECK(e.se == doctest::Approx(std::sqrt(0.3 * 0.7 / 100)));
  const Estimate z = wilson_estimate(0, 50, 1);
  CHECK(z.ci_low == 0.0);
  CHECK(z.ci_high > 0.0);
}

TEST_CASE("one-sided verdicts") {
  Estimate e;
  e.point = 0.09;
  e.se = 0.001;
  e.replicas = 100000;
  CHECK(one_sided_verdict(e, 0.0925) == Verdict::Pass);
  CHECK(one_sided_verdict(e, 0.1) == Verdict::Fail);
  Estimate coarse = e;
  coarse.replicas = 10;
  CHECK(one_sided_verdict(coarse, 0.1) == Verdict::Warn);
}

TEST_CASE("transition bound") {
  Params p;
  p.p = 0.2;
  p.q = 2;
  p.mu = 1;
  CHECK(transition_bound(p, 1e3) == doctest::Approx(1.0 / 27));
  CHECK(transition_bound(p, 1.0) == doctest::Approx((1.0 / 27) * (1 - std::exp(-1.0))));
}

TEST_CASE("cut bound closed forms") {
  Params p;
  p.p = 0.2;
  p.q = 2;
  p.mu = 2;
  p.p_u = 0.5;
  const CutBounds b = cut_bound_formulas(p, 1.0, 4, 5, 0);
  CHECK(b.acyclic_lb == doctest::Approx(1 - std::pow(0.2 + 0.8 * std::exp(-2.0), 4)));
  CHECK(b.path_lb == 1.0);
  Params fast = p;
  fast.mu = 200;
  CHECK(cut_bound_formulas(fast, 1.0, 4, 5, 2).acyclic_lb == doctest::Approx(1 - std::pow(0.2, 4)));
  CHECK(b.last_arrival_integral <= b.last_arrival_integral_ub);
  Params slow = p;
  slow.mu = 1;
  CHECK_THROWS_AS(cut_bound_formulas(slow, 1.0, 4, 5, 2), Error);
}

TEST_CASE("last-arrival cdf") {
  CHECK(last_arrival_cdf(2, 1, 0.5) == doctest::Approx((std::exp(1.0) - 1) / (std::exp(2.0) - 1)));
  CHECK_THROWS_AS(last_arrival_cdf(2, 1, 1.5), Error);
  CHECK(last_arrival_ks(2, 1, {0.5}) >= 0.5);
}

TEST_CASE("poisson window probability against direct summation") {
  for (auto [lo, hi] : std::vector<std::pair<int, int>>{{0, 2}, {3, 9}, {10, 40}, {100, 130}}) {
    const double mean = (lo + hi) / 2.0;
    double direct = 0;
    for (int k = lo; k <= hi; ++k) direct += oracle::poisson_pmf(mean, k);
    CHECK(poisson_window_prob(lo, hi) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("poisson window grid minimises over admissible pairs") {
  const double n = 1000, c_min = 1, c_max = 3, c_mid = 1;
  const double L = std::log(n);
  double best = 1;
  std::uint64_t pairs = 0;
  for (int lo = static_cast<int>(std::ceil(c_min * L)); lo <= c_max * L; ++lo) {
    for (int hi = lo + 1; hi <= c_max * L; ++hi) {
      if (hi - lo < c_mid * L) continue;
      ++pairs;
      best = std::min(best, poisson_window_prob(lo, hi));
    }
  }
  const PoissonGridResult r = poisson_window_grid(n, c_min, c_max, c_mid);
  CHECK(r.pairs == pairs);
  CHECK(r.min_prob == doctest::Approx(best));
}

TEST_CASE("simplex integral with C=0 is the shrunk volume") {
  for (int alpha : {1, 3, 6}) {
    const double T = 10, delta = 0.5;
    const SimplexCheck s = simplex_integral_check(alpha, T, delta, 0.0, 1.0, 1000, 2000, 4);
    const double shrunk = std::pow(T - (alpha + 1) * delta, alpha) / std::tgamma(alpha + 1.0);
    CHECK(s.mc_value == doctest::Approx(shrunk).epsilon(1e-9));
    CHECK(s.volume == doctest::Approx(std::pow(T, alpha) / std::tgamma(alpha + 1.0)));
  }
}

TEST_CASE("f_alpha maximiser and gradient") {
  const double a = 0.1, b = 0.05, alpha = 1e4;
  const double h = 1e-3;
  const double gx = (f_alpha(a, b, alpha, a * alpha + h, b * alpha) - f_alpha(a, b, alpha, a * alpha - h, b * alpha)) / (2 * h);
  CHECK(std::abs(gx) < 1e-6);
  const FAlphaCheck c = f_alpha_check(a, b, alpha, 200);
  CHECK(c.argmax_within_cell);
  CHECK(c.part2_holds);
  CHECK(c.max_gap <= c.gap_bound);
  CHECK_THROWS_AS(f_alpha_check(0.3, 0.3, alpha, 10), Error);
}

TEST_CASE("first crossing interpolates") {
  const auto t = first_crossing({0, 1, 2}, {1.0, 0.5, 0.1}, 0.25);
  REQUIRE(t);
  CHECK(*t == doctest::Approx(1.625));
  CHECK_FALSE(first_crossing({0, 1}, {1.0, 0.9}, 0.25));
}

TEST_CASE("expected plug-in TV matches simulation of i.i.d. samples") {
  DistributionTable ref;
  ref.kind = DistributionTable::Kind::Vertex;
  ref.n = 5;
  ref.support = {0, 1, 2, 3, 4};
  ref.probs = {0.4, 0.3, 0.15, 0.1, 0.05};
  const std::uint64_t samples = 40;
  Rng rng(17);
  double mean = 0;
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::uint64_t> counts(5, 0);
    for (std::uint64_t s = 0; s < samples; ++s) {
      double u = rng.uniform();
      int k = 0;
      while (k < 4 && u > ref.probs[k]) u -= ref.probs[k++];
      ++counts[k];
    }
    mean += tv_distance(empirical_like(ref, counts), ref) / trials;
  }
  CHECK(expected_plugin_tv(ref, samples) == doctest::Approx(mean).epsilon(0.01));
  CHECK(plugin_tv_deviation(100) == doctest::Approx(std::sqrt(std::log(40.0) / 200)));
}

TEST_CASE("boundary sparsity counts non-trivial boundary components") {
  const Graph g = generate_regular(200, 3, 8);
  const EdgeConfig closed(g.num_edges());
  CHECK(boundary_sparsity(g, 0, 1, closed, 0).holds);
  const EdgeConfig open(g.num_edges(), true);
  const BoundarySparsity s = boundary_sparsity(g, 0, 1, open, 2);
  CHECK(s.nontrivial_count == 3);
  CHECK_FALSE(s.holds);
}

TEST_CASE("binomial absolute deviation against a full pmf sum") {
  auto full = [](int R, double pi, double c) {
    long double pmf = std::pow(1.0L - pi, R), sum = 0;
    for (int x = 0; x <= R; ++x) {
      sum += pmf * std::abs(static_cast<long double>(x) / R - c);
      pmf *= (R - x) / (x + 1.0L) * pi / (1 - pi);
    }
    return static_cast<double>(sum);
  };
  for (int R : {1, 7, 50, 400}) {
    for (double pi : {0.01, 0.2, 0.5, 0.93}) {
      for (double c : {0.0, 0.005, 0.2, 0.5, 1.0}) {
        CHECK(binomial_abs_deviation(R, pi, c) == doctest::Approx(full(R, pi, c)).epsilon(1e-10));
      }
    }
  }
  CHECK(binomial_abs_deviation(1, 0.3, 0.4) == doctest::Approx(0.3 * 0.6 + 0.7 * 0.4));
  CHECK(binomial_abs_deviation(10, 0.0, 0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(binomial_abs_deviation(0, 0.5, 0.5), Error);
}
