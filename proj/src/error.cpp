#include "pgagent/error.hpp"

namespace pgagent {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_episode: return "invalid-episode";
    case ErrorKind::oracle_unavailable: return "oracle-unavailable";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::precondition: return "precondition-violation";
    case ErrorKind::invalid_query: return "invalid-query";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_state: return "invalid-state";
    case ErrorKind::validation: return "validation-error";
    case ErrorKind::migration: return "migration-error";
    case ErrorKind::format: return "format-error";
    case ErrorKind::io: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace pgagent
