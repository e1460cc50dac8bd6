#include "pgagent/oracle.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <thread>

#include <fmt/format.h>
#include <openssl/sha.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

std::string canonical_parts(const std::vector<OraclePart>& parts) {
  std::string out;
  for (const auto& p : parts) {
    out += p.kind == OraclePart::Kind::image ? "image" : "text";
    out.push_back('\x1f');
    out += text::collapse_whitespace(p.value);
    out.push_back('\x1e');
  }
  return out;
}

std::string non_empty(std::string_view response) {
  auto t = text::trim(response);
  if (t.empty()) fail(ErrorKind::parse_error, "empty response");
  return std::string(t);
}

bool has_numbered_line(std::string_view response) {
  for (const auto& line : text::split_lines(response)) {
    auto t = text::trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) return true;
  }
  return false;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) out += fmt::format("{:02x}", b);
  return out;
}

std::string OracleRequest::request_hash() const {
  return sha256_hex(std::string(to_string(role)) + "\n" + canonical_parts(parts));
}

std::string OracleRequest::inputs_digest() const { return sha256_hex(canonical_parts(parts)); }

std::vector<std::string> OracleRequest::images() const {
  std::vector<std::string> out;
  for (const auto& p : parts) {
    if (p.kind == OraclePart::Kind::image) out.push_back(p.value);
  }
  return out;
}

const std::string& OracleRequest::field(std::string_view name) const {
  for (const auto& [k, v] : fields) {
    if (k == name) return v;
  }
  fail(ErrorKind::invalid_argument,
       fmt::format("request for {} has no field '{}'", to_string(role), name));
}

std::string render_candidates(std::span<const std::string> candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("{}. {}", i + 1, text::collapse_whitespace(candidates[i]));
  }
  return out;
}

std::vector<std::string> parse_candidates(std::string_view rendered) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(rendered)) {
    const auto dot = line.find(". ");
    if (dot == std::string::npos) continue;
    out.push_back(line.substr(dot + 2));
  }
  return out;
}

bool parse_yes_no(std::string_view response) {
  std::size_t i = 0;
  while (i < response.size() && !std::isalpha(static_cast<unsigned char>(response[i]))) ++i;
  std::size_t j = i;
  while (j < response.size() && std::isalpha(static_cast<unsigned char>(response[j]))) ++j;
  const auto word = text::lower(response.substr(i, j - i));
  if (word == "yes" || word == "y" || word == "true") return true;
  if (word == "no" || word == "n" || word == "false") return false;
  fail(ErrorKind::parse_error, fmt::format("expected a yes/no verdict, got '{}'", text::truncate(response, 80)));
}

std::size_t parse_index(std::string_view response, std::size_t count) {
  std::size_t i = 0;
  while (i < response.size() && !std::isdigit(static_cast<unsigned char>(response[i]))) ++i;
  if (i == response.size()) {
    fail(ErrorKind::parse_error, fmt::format("no index in '{}'", text::truncate(response, 80)));
  }
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(response.data() + i, response.data() + response.size(), value);
  if (ec != std::errc{}) fail(ErrorKind::parse_error, "index out of integer range");
  (void)ptr;
  if (value < 1 || value > count) {
    fail(ErrorKind::parse_error, fmt::format("index {} outside [1, {}]", value, count));
  }
  return value;
}

Oracle::Oracle(std::shared_ptr<ModelBackend> backend, TemplateSet templates, OracleOptions options)
    : backend_(std::move(backend)), templates_(std::move(templates)), options_(options) {
  if (!backend_) fail(ErrorKind::invalid_argument, "oracle needs a backend");
  if (options_.retries < 0) fail(ErrorKind::invalid_argument, "retry count must be non-negative");
  for (Role r : kAllRoles) (void)templates_.get(r);
}

void Oracle::set_observer(std::function<void(const OracleExchange&)> observer) {
  std::lock_guard lock(observer_mutex_);
  observer_ = std::move(observer);
}

std::uint64_t Oracle::call_count(Role role) const { return counts_[static_cast<std::size_t>(role)].load(); }

void Oracle::reset_counts() {
  for (auto& c : counts_) c.store(0);
}

template <class Parse>
auto Oracle::call(Role role, std::vector<std::string> images, PromptFields fields, Parse&& parse)
    -> decltype(parse(std::string_view{})) {
  OracleRequest request;
  request.role = role;
  for (auto& img : images) request.parts.push_back({OraclePart::Kind::image, std::move(img)});
  request.parts.push_back({OraclePart::Kind::text, templates_.get(role).render(fields)});
  request.fields = std::move(fields);
  const auto hash = request.request_hash();

  std::function<void(const OracleExchange&)> observer;
  {
    std::lock_guard lock(observer_mutex_);
    observer = observer_;
  }

  std::string last_error;
  ErrorKind last_kind = ErrorKind::oracle_unavailable;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0 && options_.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.retry_backoff_ms * attempt));
    }
    OracleExchange exchange{role, request.parts, {}, {}, hash, attempt, false};
    try {
      exchange.raw_response = backend_->complete(request);
      auto value = parse(std::string_view(exchange.raw_response));
      exchange.ok = true;
      if constexpr (std::is_same_v<decltype(value), bool>) {
        exchange.parsed = value ? "yes" : "no";
      } else if constexpr (std::is_same_v<decltype(value), std::size_t>) {
        exchange.parsed = std::to_string(value);
      } else if constexpr (std::is_same_v<decltype(value), Decision>) {
        exchange.parsed = format_action(value.action);
      } else {
        exchange.parsed = value;
      }
      if (observer) observer(exchange);
      counts_[static_cast<std::size_t>(role)].fetch_add(1);
      return value;
    } catch (const Error& e) {
      if (!e.is_oracle_failure()) throw;
      last_error = e.what();
      last_kind = e.kind();
      if (observer) observer(exchange);
    }
  }
  fail(last_kind, fmt::format("{} failed after {} attempt(s): {}", to_string(role), options_.retries + 1,
                              last_error));
}

std::string Oracle::summarize_action(const ScreenRef& before, const Action& action) {
  return call(Role::action_summary, {before.locator}, {{"action", format_action(action)}}, non_empty);
}

bool Oracle::judge_jump(const ScreenRef& before, const ScreenRef& after, std::string_view action_summary) {
  return call(Role::jump_judge, {before.locator, after.locator},
              {{"action_summary", std::string(action_summary)}}, parse_yes_no);
}

std::string Oracle::summarize_page(const ScreenRef& page) {
  return call(Role::page_summary, {page.locator}, {}, non_empty);
}

std::size_t Oracle::select_most_similar(const ScreenRef& page, std::span<const std::string> candidates) {
  if (candidates.empty()) fail(ErrorKind::precondition, "index selection needs at least one candidate");
  const std::size_t count = candidates.size();
  return call(Role::index_select, {page.locator}, {{"candidates", render_candidates(candidates)}},
              [count](std::string_view r) { return parse_index(r, count); });
}

bool Oracle::judge_dissimilar(const ScreenRef& a, const ScreenRef& b) {
  return call(Role::dissimilar_judge, {a.locator, b.locator}, {}, parse_yes_no);
}

std::string Oracle::summarize_screen(const ScreenRef& screen) {
  return call(Role::screen_summary, {screen.locator}, {}, non_empty);
}

std::string Oracle::global_plan(const ScreenRef& screen, std::string_view goal) {
  if (text::trim(goal).empty()) fail(ErrorKind::precondition, "global plan needs a non-empty goal");
  return call(Role::global_plan, {screen.locator}, {{"goal", std::string(goal)}}, [](std::string_view r) {
    auto plan = non_empty(r);
    if (!has_numbered_line(plan)) fail(ErrorKind::parse_error, "global plan is not a numbered list");
    return plan;
  });
}

std::string Oracle::observe(const ScreenRef& screen, std::string_view goal, std::string_view history) {
  if (text::trim(goal).empty()) fail(ErrorKind::precondition, "observation needs a non-empty goal");
  return call(Role::observe, {screen.locator}, {{"goal", std::string(goal)}, {"history", std::string(history)}},
              non_empty);
}

std::string Oracle::plan_subtask(const ScreenRef& screen, std::string_view observation,
                                 std::string_view global_plan, std::string_view guidelines,
                                 std::string_view history) {
  return call(Role::subtask_plan, {screen.locator},
              {{"observation", std::string(observation)},
               {"global_plan", std::string(global_plan)},
               {"guidelines", std::string(guidelines)},
               {"history", std::string(history)}},
              non_empty);
}

Decision Oracle::decide(const ScreenRef& screen, std::string_view observation, std::string_view subtask_plan,
                        std::string_view guidelines, std::string_view history) {
  return call(Role::decide, {screen.locator},
              {{"observation", std::string(observation)},
               {"subtask_plan", std::string(subtask_plan)},
               {"guidelines", std::string(guidelines)},
               {"history", std::string(history)}},
              [](std::string_view r) {
                auto line = find_action_line(r);
                if (!line) fail(ErrorKind::parse_error, "response has no 'ACTION:' line");
                try {
                  return Decision{parse_action(*line), std::string(r)};
                } catch (const Error& e) {
                  fail(ErrorKind::parse_error, e.what());
                }
              });
}

}  // namespace pgagent
