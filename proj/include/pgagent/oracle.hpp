#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgagent/action.hpp"
#include "pgagent/model.hpp"
#include "pgagent/prompt.hpp"

namespace pgagent {

struct OraclePart {
  enum class Kind { image, text };
  Kind kind = Kind::text;
  std::string value;  // image locator or prompt text
  bool operator==(const OraclePart&) const = default;
};

/// A fully rendered model request. `fields` carries the raw placeholder values that were
/// substituted into the text part, so structured backends need not re-parse the prompt.
struct OracleRequest {
  Role role = Role::page_summary;
  std::vector<OraclePart> parts;
  PromptFields fields;

  /// Stable digest of the role and the whitespace-canonicalized parts.
  [[nodiscard]] std::string request_hash() const;
  /// Digest of the canonicalized parts alone.
  [[nodiscard]] std::string inputs_digest() const;
  [[nodiscard]] std::vector<std::string> images() const;
  /// Value of a placeholder field; throws Error(invalid_argument) if absent.
  [[nodiscard]] const std::string& field(std::string_view name) const;
};

struct OracleExchange {
  Role role = Role::page_summary;
  std::vector<OraclePart> inputs;
  std::string raw_response;
  std::string parsed;  // rendering of the parsed value, empty on failure
  std::string request_hash;
  int attempt = 0;
  bool ok = false;
};

/// Transport-level model backend: returns raw text for a request, or throws
/// Error(oracle_unavailable). Must accept concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual std::string complete(const OracleRequest& request) = 0;
};

struct OracleOptions {
  int retries = 2;  // extra attempts after the first; 0 disables retrying
  int retry_backoff_ms = 0;
};

struct Decision {
  Action action;
  std::string rationale;  // the full raw response
};

/// Typed front end over a ModelBackend: renders templates, retries, parses and validates.
class Oracle {
 public:
  Oracle(std::shared_ptr<ModelBackend> backend, TemplateSet templates, OracleOptions options = {});

  std::string summarize_action(const ScreenRef& before, const Action& action);
  bool judge_jump(const ScreenRef& before, const ScreenRef& after, std::string_view action_summary);
  std::string summarize_page(const ScreenRef& page);
  /// 1-based index of the candidate summary that best matches the page.
  std::size_t select_most_similar(const ScreenRef& page, std::span<const std::string> candidates);
  /// True when the two screenshots show different pages.
  bool judge_dissimilar(const ScreenRef& a, const ScreenRef& b);
  std::string summarize_screen(const ScreenRef& screen);
  std::string global_plan(const ScreenRef& screen, std::string_view goal);
  std::string observe(const ScreenRef& screen, std::string_view goal, std::string_view history);
  std::string plan_subtask(const ScreenRef& screen, std::string_view observation,
                           std::string_view global_plan, std::string_view guidelines,
                           std::string_view history);
  Decision decide(const ScreenRef& screen, std::string_view observation, std::string_view subtask_plan,
                  std::string_view guidelines, std::string_view history);

  /// Number of successful calls per role since construction.
  [[nodiscard]] std::uint64_t call_count(Role role) const;
  void reset_counts();

  /// Called once per attempt, from the calling thread.
  void set_observer(std::function<void(const OracleExchange&)> observer);

  [[nodiscard]] ModelBackend& backend() noexcept { return *backend_; }

 private:
  template <class Parse>
  auto call(Role role, std::vector<std::string> images, PromptFields fields, Parse&& parse)
      -> decltype(parse(std::string_view{}));

  std::shared_ptr<ModelBackend> backend_;
  TemplateSet templates_;
  OracleOptions options_;
  std::array<std::atomic<std::uint64_t>, kAllRoles.size()> counts_{};
  std::mutex observer_mutex_;
  std::function<void(const OracleExchange&)> observer_;
};

/// Numbered candidate list used by the index selection prompt: "1. first\n2. second".
std::string render_candidates(std::span<const std::string> candidates);
std::vector<std::string> parse_candidates(std::string_view rendered);

/// Verdict of a yes/no role: first alphabetic token, case-insensitive.
/// Throws Error(parse_error) for anything but yes/y/true or no/n/false.
bool parse_yes_no(std::string_view response);

/// First integer in the response, range-checked to [1, count]. Throws Error(parse_error).
std::size_t parse_index(std::string_view response, std::size_t count);

std::string sha256_hex(std::string_view data);

}  // namespace pgagent
