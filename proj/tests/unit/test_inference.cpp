#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "ineq/inference.hpp"

using namespace ineq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const AversionParam half{0.5};

AtkinsonEstimate est_of(const std::vector<double>& xs, AversionParam eps = half) {
  return estimate_from_sums(moment_sums(xs, eps));
}

}  // namespace

TEST_CASE("two-sided normal p-value") {
  CHECK(normal_two_sided_p(0.0) == 1.0);
  CHECK_THAT(normal_two_sided_p(1.959964), WithinAbs(0.04999999819288480860499021050527185444393, 1e-12));
  CHECK(normal_two_sided_p(-1.959964) == normal_two_sided_p(1.959964));
  // 2 * Phi(-8)
  CHECK_THAT(normal_two_sided_p(8.0), WithinRel(1.244192114854357e-15, 1e-9));
  CHECK_THROWS_AS(normal_two_sided_p(std::numeric_limits<double>::infinity()), validation_error);
  CHECK_THROWS_AS(normal_two_sided_p(std::numeric_limits<double>::quiet_NaN()), validation_error);
  double prev = 1.0;
  for (double t = 0.1; t < 8.0; t += 0.1) {
    const double p = normal_two_sided_p(t);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("identical arms give the null result") {
  const auto e = est_of({1, 2, 3, 10});
  const auto r = compare(e, e);
  CHECK(r.delta == 0.0);
  CHECK(r.t_stat == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK_FALSE(r.significant);
  CHECK(r.direction == Direction::none);
}

TEST_CASE("statistic divides by the standard error") {
  const auto r = test_difference(1.959964 * 0.1, 0.01, 0.05);
  CHECK_THAT(r.t_stat, WithinAbs(1.959964, 1e-12));
  CHECK_THAT(r.p_value, WithinAbs(0.05, 1e-4));
  CHECK(r.significant);
  CHECK_FALSE(test_difference(1.95 * 0.1, 0.01, 0.05).significant);
  const auto s = test_difference(-0.5, 0.01, 0.05);
  CHECK(s.significant);
  CHECK(s.direction == Direction::inequality_decreasing);
  CHECK(test_difference(0.5, 0.01, 0.05).direction == Direction::inequality_increasing);
}

TEST_CASE("unequal treatment against an equal control") {
  const auto t = est_of({1, 3});
  const auto c = est_of({2, 2});
  CHECK(c.index == 0.0);
  CHECK(c.sigma2 == 0.0);
  const auto r = compare(t, c);
  CHECK_THAT(r.delta, WithinAbs(0.06698729810778067661813841462353190826428, 1e-15));
  CHECK_THAT(r.var_delta, WithinRel(0.001121824526945169154534603655882977066047 / 2.0, 1e-12));
}

TEST_CASE("antisymmetry") {
  const auto a = est_of({1, 2, 3, 10, 0, 4});
  const auto b = est_of({2, 2, 5, 1, 1});
  const auto ab = compare(a, b);
  const auto ba = compare(b, a);
  CHECK(ab.delta == -ba.delta);
  CHECK(ab.p_value == ba.p_value);
  CHECK(ab.var_delta == ba.var_delta);
}

TEST_CASE("one-sided tests") {
  const auto g = test_difference(0.2, 0.01, 0.05, Sidedness::greater);
  CHECK_THAT(g.p_value, WithinAbs(0.5 * normal_two_sided_p(2.0), 1e-15));
  CHECK(g.significant);
  const auto l = test_difference(0.2, 0.01, 0.05, Sidedness::less);
  CHECK_THAT(l.p_value, WithinAbs(1.0 - 0.5 * normal_two_sided_p(2.0), 1e-15));
  CHECK_FALSE(l.significant);
}

TEST_CASE("comparison errors") {
  const auto a = est_of({1, 3});
  const auto b = est_of({1, 3}, AversionParam(0.3));
  try {
    compare(a, b);
    FAIL("expected epsilon mismatch");
  } catch (const validation_error& e) {
    CHECK(e.code() == errc::epsilon_mismatch);
  }
  const auto eq1 = est_of({2, 2});
  const auto eq2 = est_of({5, 5, 5});
  CHECK(compare(eq1, eq2).p_value == 1.0);
  try {
    test_difference(0.1, 0.0, 0.05);
    FAIL("expected degenerate variance");
  } catch (const validation_error& e) {
    CHECK(e.code() == errc::degenerate_variance);
  }
  CHECK_THROWS_AS(test_difference(0.1, 0.01, 0.0), validation_error);
  CHECK_THROWS_AS(test_difference(0.1, 0.01, 1.0), validation_error);
  AtkinsonEstimate tiny;
  tiny.n = 1;
  CHECK_THROWS_AS(compare(tiny, a), validation_error);
}

TEST_CASE("significance matches the p-value rule") {
  for (double d = -0.3; d <= 0.3; d += 0.01) {
    const auto r = test_difference(d, 0.01, 0.05);
    CHECK(r.significant == (r.p_value < 0.05));
  }
}
