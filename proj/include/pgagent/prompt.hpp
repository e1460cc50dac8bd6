#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pgagent {

/// The ten model roles: six used while building the graph or retrieving guidelines and four
/// agent roles.
enum class Role {
  action_summary,
  jump_judge,
  page_summary,
  index_select,
  dissimilar_judge,
  screen_summary,
  global_plan,
  observe,
  subtask_plan,
  decide,
};

inline constexpr std::array<Role, 10> kAllRoles = {
    Role::action_summary, Role::jump_judge,   Role::page_summary, Role::index_select,
    Role::dissimilar_judge, Role::screen_summary, Role::global_plan, Role::observe,
    Role::subtask_plan,   Role::decide,
};

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

/// Placeholders a role's template must reference, in the order the oracle fills them.
const std::vector<std::string>& required_placeholders(Role role);

using PromptFields = std::vector<std::pair<std::string, std::string>>;

/// Template text with `{name}` placeholders; `{{` and `}}` produce literal braces.
class PromptTemplate {
 public:
  /// Throws Error(validation) when a required placeholder is missing or an unknown one is used.
  PromptTemplate(Role role, std::string text);

  [[nodiscard]] Role role() const noexcept { return role_; }
  [[nodiscard]] const std::string& text() const noexcept { return text_; }
  [[nodiscard]] std::string render(const PromptFields& fields) const;

 private:
  Role role_;
  std::string text_;
};

/// One template per role, loaded from `<dir>/<role_name>.txt`.
class TemplateSet {
 public:
  static TemplateSet load_directory(const std::filesystem::path& dir);

  void set(PromptTemplate tmpl);
  [[nodiscard]] const PromptTemplate& get(Role role) const;
  [[nodiscard]] bool complete() const noexcept { return templates_.size() == kAllRoles.size(); }

 private:
  std::map<Role, PromptTemplate> templates_;
};

/// Names of the placeholders referenced by a template, in order of first use.
std::vector<std::string> placeholders_in(std::string_view text);

}  // namespace pgagent
