#pragma once

#include <stdexcept>
#include <string>

namespace ineq {

/// Reason attached to a validation_error, so callers can branch without string matching.
enum class errc {
  empty_input,
  negative_value,
  non_finite_value,
  zero_total,
  out_of_domain,
  epsilon_mismatch,
  insufficient_sample,
  degenerate_variance,
  degenerate_equation,
  no_root,
  unknown_vertex,
  not_active,
  no_outstanding_question,
  missing_variant,
  data_error,
  bad_config,
};

inline const char* to_string(errc code) noexcept {
  switch (code) {
    case errc::empty_input: return "empty_input";
    case errc::negative_value: return "negative_value";
    case errc::non_finite_value: return "non_finite_value";
    case errc::zero_total: return "zero_total";
    case errc::out_of_domain: return "out_of_domain";
    case errc::epsilon_mismatch: return "epsilon_mismatch";
    case errc::insufficient_sample: return "insufficient_sample";
    case errc::degenerate_variance: return "degenerate_variance";
    case errc::degenerate_equation: return "degenerate_equation";
    case errc::no_root: return "no_root";
    case errc::unknown_vertex: return "unknown_vertex";
    case errc::not_active: return "not_active";
    case errc::no_outstanding_question: return "no_outstanding_question";
    case errc::missing_variant: return "missing_variant";
    case errc::data_error: return "data_error";
    case errc::bad_config: return "bad_config";
  }
  return "unknown";
}

/// Input violated a precondition. Maps to exit code 1 in the CLI.
class validation_error : public std::invalid_argument {
 public:
  validation_error(errc code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

/// A file could not be opened or read. Maps to exit code 2 in the CLI.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ineq
