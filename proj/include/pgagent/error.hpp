#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgagent {

enum class ErrorKind {
  invalid_episode,
  oracle_unavailable,
  parse_error,  // a model response could not be parsed
  precondition,
  invalid_query,
  invalid_argument,
  invalid_state,
  validation,
  migration,
  format,  // malformed file or wire text
  io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  /// True for failures of the model backend (as opposed to caller or data errors).
  [[nodiscard]] bool is_oracle_failure() const noexcept {
    return kind_ == ErrorKind::oracle_unavailable || kind_ == ErrorKind::parse_error;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace pgagent
