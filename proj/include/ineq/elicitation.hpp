#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ineq/atkinson.hpp"
#include "ineq/error.hpp"

namespace ineq {

/// Search bracket for elicited epsilons.
inline constexpr double eps_lo_bound = 0.001;
inline constexpr double eps_hi_bound = 0.999;

namespace detail {

inline void check_share(double s, const char* what) {
  if (!(s >= 0.5 && s < 1.0)) {
    throw validation_error(errc::out_of_domain, std::string(what) + " must lie in [0.5, 1)");
  }
}

inline void check_total(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw validation_error(errc::out_of_domain, std::string(what) + " must be positive and finite");
  }
}

/// Equally distributed equivalent share, 1 - A_S(s, eps).
inline double ede_share(double share, double eps) {
  return 1.0 - atkinson_share(1.0, share, AversionParam(eps));
}

}  // namespace detail

/// Epsilon at which (t1, s1) and (t2, s2) have equal utility t * (1 - A).
///
/// The two-person index does not depend on the total, so the indifference
/// condition is a one-dimensional equation in epsilon, solved by bisection on
/// [0.001, 0.999]. When `brackets` is given, every retained bracket is
/// appended to it.
inline double solve_epsilon(double t1, double s1, double t2, double s2,
                            std::vector<std::pair<double, double>>* brackets = nullptr) {
  detail::check_total(t1, "t1");
  detail::check_total(t2, "t2");
  detail::check_share(s1, "s1");
  detail::check_share(s2, "s2");
  if (s1 == s2) {
    throw validation_error(errc::degenerate_equation,
                           "equal shares make the equivalence independent of epsilon");
  }
  const double ratio = t2 / t1;
  auto residual = [&](double eps) {
    return detail::ede_share(s1, eps) - detail::ede_share(s2, eps) * ratio;
  };

  double lo = eps_lo_bound;
  double hi = eps_hi_bound;
  double g_lo = residual(lo);
  const double g_hi = residual(hi);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if ((g_lo < 0.0) == (g_hi < 0.0)) {
    throw validation_error(errc::no_root,
                           "no epsilon in (0.001, 0.999) makes the two scenarios equivalent");
  }
  constexpr double tolerance = 1e-8;
  if (brackets) brackets->emplace_back(lo, hi);
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = residual(mid);
    if (g_mid == 0.0) return mid;
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
    if (brackets) brackets->emplace_back(lo, hi);
  }
  return 0.5 * (lo + hi);
}

/// Two-member distribution: the richer member holds `richest_share` of `total`.
struct ChoiceScenario {
  double total = 100.0;
  double richest_share = 0.5;

  std::array<double, 2> values() const noexcept {
    return {total * richest_share, total * (1.0 - richest_share)};
  }
};

enum class Choice { a, b };

enum class SessionStatus { active, converged, exhausted };

inline std::string_view to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::converged: return "converged";
    case SessionStatus::exhausted: return "exhausted";
  }
  return "active";
}

struct Question {
  std::uint32_t question_id = 0;
  /// Midpoint of the interval when the question was asked.
  double epsilon_mid = 0.0;
  ChoiceScenario option_a;
  ChoiceScenario option_b;
};

struct AnsweredQuestion {
  Question question;
  Choice choice = Choice::a;
};

struct SessionParams {
  double total = 100.0;
  /// Richest share of option A, the less equal scenario.
  double s1 = 0.99;
  /// Richest share of option B, the more equal scenario.
  double s_alt = 0.5;
  double tolerance = 0.02;
  /// Option B's total is inflated by this fraction over the indifference
  /// total so that the two options are never exactly tied.
  double offset = 0.02;
  std::uint32_t max_questions = 64;

  void validate() const {
    detail::check_total(total, "total");
    detail::check_share(s1, "s1");
    detail::check_share(s_alt, "s_alt");
    if (!(s_alt < s1)) {
      throw validation_error(errc::out_of_domain, "s_alt must be more equal (smaller) than s1");
    }
    if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
      throw validation_error(errc::out_of_domain, "tolerance must be positive");
    }
    if (!(offset >= 0.0 && offset < 1.0)) {
      throw validation_error(errc::out_of_domain, "offset must lie in [0, 1)");
    }
    if (max_questions == 0) {
      throw validation_error(errc::out_of_domain, "max_questions must be positive");
    }
  }
};

/// Binary choice-experiment session narrowing an epsilon interval by bisection.
///
/// Each question offers option A, the base scenario (total, s1), against
/// option B, a more equal scenario (t*, s_alt) whose total t* makes the two
/// indifferent at the interval midpoint, inflated by the visibility offset.
/// Choosing B means the respondent is at least as inequality averse as the
/// midpoint, so the lower end moves up; choosing A moves the upper end down.
class ElicitationSession {
 public:
  ElicitationSession(std::string id, SessionParams params)
      : id_(std::move(id)), params_(params) {
    params_.validate();
    update_status();
  }

  const std::string& id() const noexcept { return id_; }
  const SessionParams& params() const noexcept { return params_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  SessionStatus status() const noexcept { return status_; }
  const std::vector<AnsweredQuestion>& history() const noexcept { return history_; }
  const std::optional<Question>& outstanding() const noexcept { return outstanding_; }

  /// Point estimate, the interval midpoint, once the session has stopped.
  std::optional<double> epsilon() const {
    if (status_ == SessionStatus::active) return std::nullopt;
    return 0.5 * (lo_ + hi_);
  }

  /// "lower" or "upper" when the final interval touches the search bracket.
  std::optional<std::string> boundary() const {
    if (status_ == SessionStatus::active) return std::nullopt;
    if (lo_ == eps_lo_bound) return "lower";
    if (hi_ == eps_hi_bound) return "upper";
    return std::nullopt;
  }

  /// The outstanding question, creating one at the interval midpoint if none.
  const Question& next_question() {
    if (status_ != SessionStatus::active) {
      throw validation_error(errc::not_active, "session is not active");
    }
    if (!outstanding_) {
      const double mid = 0.5 * (lo_ + hi_);
      const double base_ede = detail::ede_share(params_.s1, mid);
      const double alt_ede = detail::ede_share(params_.s_alt, mid);
      const double indifferent_total = params_.total * base_ede / alt_ede;
      Question q;
      q.question_id = ++question_counter_;
      q.epsilon_mid = mid;
      q.option_a = {params_.total, params_.s1};
      q.option_b = {indifferent_total * (1.0 + params_.offset), params_.s_alt};
      outstanding_ = q;
    }
    return *outstanding_;
  }

  void answer(Choice choice) {
    if (!outstanding_) {
      throw validation_error(errc::no_outstanding_question, "no question is outstanding");
    }
    const Question q = *outstanding_;
    outstanding_.reset();
    if (choice == Choice::b) {
      lo_ = q.epsilon_mid;
    } else {
      hi_ = q.epsilon_mid;
    }
    history_.push_back({q, choice});
    update_status();
  }

 private:
  void update_status() {
    if (hi_ - lo_ <= params_.tolerance) {
      status_ = SessionStatus::converged;
    } else if (history_.size() >= params_.max_questions) {
      status_ = SessionStatus::exhausted;
    } else {
      status_ = SessionStatus::active;
    }
  }

  std::string id_;
  SessionParams params_;
  double lo_ = eps_lo_bound;
  double hi_ = eps_hi_bound;
  SessionStatus status_ = SessionStatus::active;
  std::uint32_t question_counter_ = 0;
  std::optional<Question> outstanding_;
  std::vector<AnsweredQuestion> history_;
};

/// In-memory session registry. Distinct sessions may be used concurrently;
/// `with_session` serializes access to any one session.
class SessionStore {
 public:
  std::string create(const SessionParams& params) {
    auto entry = std::make_shared<Entry>();
    std::string id;
    {
      std::lock_guard lock(mutex_);
      do {
        id = make_id();
      } while (sessions_.contains(id));
      entry->session = std::make_unique<ElicitationSession>(id, params);
      sessions_.emplace(id, entry);
    }
    return id;
  }

  /// Runs `fn(session)` under the session's lock. Returns false for an
  /// unknown id.
  template <typename Fn>
  bool with_session(const std::string& id, Fn&& fn) {
    std::shared_ptr<Entry> entry;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return false;
      entry = it->second;
    }
    std::lock_guard lock(entry->mutex);
    fn(*entry->session);
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<ElicitationSession> session;
  };

  std::string make_id() {
    static constexpr char hex[] = "0123456789abcdef";
    std::string id(16, '0');
    std::uint64_t bits = rng_();
    for (auto& c : id) {
      c = hex[bits & 0xF];
      bits >>= 4;
    }
    return id;
  }

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace ineq
