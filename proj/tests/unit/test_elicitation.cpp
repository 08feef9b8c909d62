#include <catch_amalgamated.hpp>

#include <cmath>
#include <thread>

#include "ineq/elicitation.hpp"
#include "ineq/report.hpp"

using namespace ineq;
using Catch::Matchers::WithinAbs;

namespace {

double ede(double share, double eps) { return 1.0 - atkinson_share(1.0, share, AversionParam(eps)); }

/// A respondent whose preferences follow the utility T * (1 - A) at `eps`.
Choice respond(const Question& q, double eps) {
  const double ua = q.option_a.total * ede(q.option_a.richest_share, eps);
  const double ub = q.option_b.total * ede(q.option_b.richest_share, eps);
  return ub > ua ? Choice::b : Choice::a;
}

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const validation_error& e) {
    return e.code();
  }
  return errc::data_error;
}

}  // namespace

TEST_CASE("solve recovers the generating epsilon") {
  for (double eps : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (auto [s1, s2] : {std::pair{0.9, 0.6}, std::pair{0.99, 0.5}, std::pair{0.6, 0.95}}) {
      const double t1 = 100.0;
      const double t2 = t1 * ede(s1, eps) / ede(s2, eps);
      CHECK_THAT(solve_epsilon(t1, s1, t2, s2), WithinAbs(eps, 1e-6));
    }
  }
}

TEST_CASE("solve on the published example") {
  // Exact indifference total for (100, 0.9) against share 0.6 at 0.5.
  CHECK_THAT(solve_epsilon(100, 0.9, 80.81641154691504, 0.6), WithinAbs(0.5, 1e-7));
  // The rounded total 80.8163265 sits about 2e-6 away in epsilon.
  CHECK_THAT(solve_epsilon(100, 0.9, 80.8163265, 0.6), WithinAbs(0.5, 1e-5));
}

TEST_CASE("every retained bracket straddles the root") {
  std::vector<std::pair<double, double>> brackets;
  const double t2 = 100.0 * ede(0.9, 0.37) / ede(0.6, 0.37);
  solve_epsilon(100.0, 0.9, t2, 0.6, &brackets);
  REQUIRE(brackets.size() > 20);
  for (auto [lo, hi] : brackets) {
    const double glo = ede(0.9, lo) - ede(0.6, lo) * t2 / 100.0;
    const double ghi = ede(0.9, hi) - ede(0.6, hi) * t2 / 100.0;
    CHECK(glo * ghi <= 0.0);
    CHECK(lo < hi);
  }
  CHECK(brackets.back().second - brackets.back().first <= 1e-8);
}

TEST_CASE("solve errors") {
  CHECK(code_of([] { solve_epsilon(100, 0.7, 50, 0.7); }) == errc::degenerate_equation);
  CHECK(code_of([] { solve_epsilon(100, 0.9, 100, 0.6); }) == errc::no_root);
  CHECK(code_of([] { solve_epsilon(0, 0.9, 100, 0.6); }) == errc::out_of_domain);
  CHECK(code_of([] { solve_epsilon(100, 1.0, 100, 0.6); }) == errc::out_of_domain);
  CHECK(code_of([] { solve_epsilon(100, 0.9, 100, 0.4); }) == errc::out_of_domain);
}

TEST_CASE("questions sit at the interval midpoint with the visibility offset") {
  ElicitationSession s("id", {});
  const auto& q = s.next_question();
  CHECK(q.question_id == 1);
  CHECK(q.epsilon_mid == 0.5);
  CHECK(q.option_a.richest_share != q.option_b.richest_share);
  CHECK(q.option_a.total == 100.0);
  CHECK_THAT(q.option_b.total, WithinAbs(100.0 * ede(0.99, 0.5) / ede(0.5, 0.5) * 1.02, 1e-12));
  // Idempotent while outstanding.
  CHECK(s.next_question().question_id == 1);
  const auto v = q.option_a.values();
  CHECK(v[0] == 99.0);
  CHECK_THAT(v[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("answers narrow the interval") {
  ElicitationSession s("id", {});
  s.next_question();
  s.answer(Choice::b);
  CHECK(s.lo() == 0.5);
  CHECK(s.hi() == 0.999);
  const auto& q = s.next_question();
  CHECK(q.epsilon_mid == 0.5 * (0.5 + 0.999));
  CHECK(q.question_id == 2);
  s.answer(Choice::a);
  CHECK(s.hi() == 0.5 * (0.5 + 0.999));
  CHECK(s.history().size() == 2);
  CHECK(s.history()[0].choice == Choice::b);
  CHECK(code_of([&] { s.answer(Choice::a); }) == errc::no_outstanding_question);
}

TEST_CASE("interval width halves with every answer until convergence") {
  ElicitationSession s("id", {});
  double width = s.hi() - s.lo();
  int answers = 0;
  while (s.status() == SessionStatus::active) {
    s.next_question();
    s.answer(answers % 2 == 0 ? Choice::a : Choice::b);
    ++answers;
    const double w = s.hi() - s.lo();
    CHECK(w < width);
    CHECK_THAT(w, WithinAbs(width / 2.0, 1e-15));
    width = w;
  }
  CHECK(s.status() == SessionStatus::converged);
  CHECK(answers == static_cast<int>(std::ceil(std::log2(0.998 / 0.02))));
  CHECK(code_of([&] { s.next_question(); }) == errc::not_active);
  REQUIRE(s.epsilon());
  CHECK(*s.epsilon() == 0.5 * (s.lo() + s.hi()));
}

TEST_CASE("simulated respondents converge near their epsilon") {
  for (double truth : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    ElicitationSession s("id", {});
    int questions = 0;
    while (s.status() == SessionStatus::active) {
      s.answer(respond(s.next_question(), truth));
      ++questions;
    }
    CHECK(s.status() == SessionStatus::converged);
    CHECK(questions <= 7);
    // The 2% offset shifts the switching point upward by at most about 0.027 on this grid.
    CHECK(*s.epsilon() >= truth - 0.01);
    CHECK(*s.epsilon() <= truth + 0.04);
    if (truth == 0.5) CHECK_THAT(*s.epsilon(), WithinAbs(truth, 0.02));
  }
}

TEST_CASE("always choosing A runs to the lower bound") {
  ElicitationSession s("id", {});
  while (s.status() == SessionStatus::active) {
    s.next_question();
    s.answer(Choice::a);
  }
  CHECK(s.lo() == eps_lo_bound);
  CHECK(s.boundary() == "lower");
  CHECK(*s.epsilon() < 0.02);

  ElicitationSession t("id2", {});
  while (t.status() == SessionStatus::active) {
    t.next_question();
    t.answer(Choice::b);
  }
  CHECK(t.boundary() == "upper");
}

TEST_CASE("tolerance at the initial width converges immediately") {
  SessionParams p;
  p.tolerance = eps_hi_bound - eps_lo_bound;
  ElicitationSession s("id", p);
  CHECK(s.status() == SessionStatus::converged);
  CHECK(*s.epsilon() == 0.5);
  CHECK(s.history().empty());
}

TEST_CASE("question budget exhausts the session") {
  SessionParams p;
  p.tolerance = 1e-9;
  p.max_questions = 3;
  ElicitationSession s("id", p);
  for (int i = 0; i < 3; ++i) {
    s.next_question();
    s.answer(Choice::b);
  }
  CHECK(s.status() == SessionStatus::exhausted);
  CHECK(s.epsilon());
}

TEST_CASE("session parameter validation") {
  auto make = [](auto tweak) {
    SessionParams p;
    tweak(p);
    return code_of([&] { ElicitationSession s("x", p); });
  };
  CHECK(make([](SessionParams& p) { p.total = 0; }) == errc::out_of_domain);
  CHECK(make([](SessionParams& p) { p.s1 = 1.0; }) == errc::out_of_domain);
  CHECK(make([](SessionParams& p) { p.s_alt = 0.99; }) == errc::out_of_domain);
  CHECK(make([](SessionParams& p) { p.tolerance = 0; }) == errc::out_of_domain);
  CHECK(make([](SessionParams& p) { p.max_questions = 0; }) == errc::out_of_domain);
}

TEST_CASE("session store") {
  SessionStore store;
  const auto a = store.create({});
  const auto b = store.create({});
  CHECK(a != b);
  CHECK(a.size() == 16);
  CHECK(store.size() == 2);
  CHECK_FALSE(store.with_session("nope", [](ElicitationSession&) {}));
  std::vector<std::jthread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        store.with_session(a, [](ElicitationSession& s) {
          if (s.status() == SessionStatus::active) s.next_question();
        });
      }
    });
  }
  workers.clear();
  store.with_session(a, [](ElicitationSession& s) { CHECK(s.outstanding()->question_id == 1); });
  CHECK_THROWS_AS(store.create(SessionParams{.total = -1}), validation_error);
}

TEST_CASE("session JSON") {
  ElicitationSession s("abc", {});
  s.next_question();
  s.answer(Choice::b);
  s.next_question();
  const auto j = to_json(s);
  CHECK(j["session_id"] == "abc");
  CHECK(j["status"] == "active");
  CHECK(j["interval"][0] == 0.5);
  CHECK(j["history"].size() == 1);
  CHECK(j["history"][0]["choice"] == "B");
  CHECK(j["question"]["question_id"] == 2);
  CHECK(j["question"]["option_a"]["values"].size() == 2);
  CHECK_FALSE(j.contains("epsilon"));
}
