#include "pgagent/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pgagent/error.hpp"

namespace pgagent {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::action_summary: return "action_summary";
    case Role::jump_judge: return "jump_judge";
    case Role::page_summary: return "page_summary";
    case Role::index_select: return "index_select";
    case Role::dissimilar_judge: return "dissimilar_judge";
    case Role::screen_summary: return "screen_summary";
    case Role::global_plan: return "global_plan";
    case Role::observe: return "observe";
    case Role::subtask_plan: return "subtask_plan";
    case Role::decide: return "decide";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  for (Role r : kAllRoles) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorKind::format, "unknown role '" + std::string(name) + "'");
}

const std::vector<std::string>& required_placeholders(Role role) {
  static const std::map<Role, std::vector<std::string>> table = {
      {Role::action_summary, {"action"}},
      {Role::jump_judge, {"action_summary"}},
      {Role::page_summary, {}},
      {Role::index_select, {"candidates"}},
      {Role::dissimilar_judge, {}},
      {Role::screen_summary, {}},
      {Role::global_plan, {"goal"}},
      {Role::observe, {"goal", "history"}},
      {Role::subtask_plan, {"observation", "global_plan", "guidelines", "history"}},
      {Role::decide, {"observation", "subtask_plan", "guidelines", "history"}},
  };
  return table.at(role);
}

std::vector<std::string> placeholders_in(std::string_view text) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      if (i + 1 < text.size() && text[i + 1] == '{') {
        ++i;
        continue;
      }
      const auto close = text.find('}', i + 1);
      if (close == std::string_view::npos) fail(ErrorKind::validation, "unclosed '{' in template");
      std::string name(text.substr(i + 1, close - i - 1));
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      i = close;
    } else if (text[i] == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      ++i;
    }
  }
  return names;
}

PromptTemplate::PromptTemplate(Role role, std::string text) : role_(role), text_(std::move(text)) {
  const auto used = placeholders_in(text_);
  const auto& required = required_placeholders(role_);
  for (const auto& name : required) {
    if (std::find(used.begin(), used.end(), name) == used.end()) {
      fail(ErrorKind::validation,
           "template for " + std::string(to_string(role_)) + " is missing placeholder {" + name + "}");
    }
  }
  for (const auto& name : used) {
    if (std::find(required.begin(), required.end(), name) == required.end()) {
      fail(ErrorKind::validation,
           "template for " + std::string(to_string(role_)) + " uses unknown placeholder {" + name + "}");
    }
  }
}

std::string PromptTemplate::render(const PromptFields& fields) const {
  std::string out;
  out.reserve(text_.size());
  for (std::size_t i = 0; i < text_.size(); ++i) {
    const char c = text_[i];
    if (c == '{' && i + 1 < text_.size() && text_[i + 1] == '{') {
      out.push_back('{');
      ++i;
    } else if (c == '}' && i + 1 < text_.size() && text_[i + 1] == '}') {
      out.push_back('}');
      ++i;
    } else if (c == '{') {
      const auto close = text_.find('}', i + 1);
      const auto name = text_.substr(i + 1, close - i - 1);
      auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == name; });
      if (it == fields.end()) {
        fail(ErrorKind::invalid_argument,
             "no value for placeholder {" + name + "} of " + std::string(to_string(role_)));
      }
      out += it->second;
      i = close;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

TemplateSet TemplateSet::load_directory(const std::filesystem::path& dir) {
  TemplateSet set;
  for (Role role : kAllRoles) {
    const auto path = dir / (std::string(to_string(role)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::validation, "missing prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    set.set(PromptTemplate(role, buf.str()));
  }
  return set;
}

void TemplateSet::set(PromptTemplate tmpl) {
  const Role role = tmpl.role();
  templates_.insert_or_assign(role, std::move(tmpl));
}

const PromptTemplate& TemplateSet::get(Role role) const {
  auto it = templates_.find(role);
  if (it == templates_.end()) {
    fail(ErrorKind::invalid_state, "no template loaded for role " + std::string(to_string(role)));
  }
  return it->second;
}

}  // namespace pgagent
