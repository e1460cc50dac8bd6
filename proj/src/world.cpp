#include "pgagent/world.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent::world {

namespace {

constexpr std::string_view kLocatorPrefix = "world://page/";
constexpr std::string_view kStateMarker = "/state/";
// Value typed into a gating field when navigation passes a page whose submit button needs
// input and the task does not say what to type.
constexpr std::string_view kFiller = "sample";
constexpr std::size_t kStepLimit = 512;

std::string percent_encode(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

std::string percent_decode(std::string_view s, std::string_view locator) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size()) {
      fail(ErrorKind::invalid_argument, fmt::format("truncated escape in locator '{}'", locator));
    }
    const int hi = hex_value(s[i + 1]);
    const int lo = hex_value(s[i + 2]);
    if (hi < 0 || lo < 0) fail(ErrorKind::invalid_argument, fmt::format("bad escape in locator '{}'", locator));
    out.push_back(static_cast<char>(hi * 16 + lo));
    i += 2;
  }
  return out;
}

const Widget* field_of(const Page& page) {
  for (const auto& w : page.widgets) {
    if (w.kind == WidgetKind::field) return &w;
  }
  return nullptr;
}

const Widget* find_widget(const Page& page, std::string_view id) {
  for (const auto& w : page.widgets) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

std::string var_or_empty(const WorldState& state, const std::string& key) {
  auto it = state.vars.find(key);
  return it == state.vars.end() ? std::string() : it->second;
}

// Applies the effect of activating a widget (tap, click, key shortcut).
ApplyResult activate(const WorldSpec& spec, WorldState& state, const Page& page, const Widget& w) {
  ApplyResult r;
  if (!w.effect_value.empty()) state.vars[var_key(page.name, w.id)] = w.effect_value;
  if (!w.target.empty() && transition_allowed(page, w, state) && spec.find_page(w.target)) {
    r.page_changed = w.target != state.page;
    state.page = w.target;
  }
  return r;
}

struct Hop {
  std::size_t widget = 0;
};

// First hop of a shortest path (breadth-first in widget order) from `from` to `to`.
// Gated transitions count as traversable since the gate can always be opened by typing.
std::optional<Hop> first_hop(const WorldSpec& spec, std::string_view from, std::string_view to) {
  if (from == to) return std::nullopt;
  std::unordered_map<std::string, std::pair<std::string, std::size_t>> parent;
  std::deque<std::string> queue{std::string(from)};
  parent.emplace(std::string(from), std::pair<std::string, std::size_t>{"", 0});
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    const Page& page = spec.page(cur);
    for (std::size_t i = 0; i < page.widgets.size(); ++i) {
      const auto& w = page.widgets[i];
      if (w.target.empty() || parent.count(w.target)) continue;
      parent.emplace(w.target, std::pair{cur, i});
      if (w.target == to) {
        std::string node = w.target;
        while (parent.at(node).first != from) node = parent.at(node).first;
        return Hop{parent.at(node).second};
      }
      queue.push_back(w.target);
    }
  }
  return std::nullopt;
}

// The action that moves one step toward `target`, opening a gate first when needed.
std::optional<Action> step_toward(const WorldSpec& spec, const WorldState& state, std::string_view target) {
  auto hop = first_hop(spec, state.page, target);
  if (!hop) return std::nullopt;
  const Page& page = spec.page(state.page);
  const Widget& w = page.widgets[hop->widget];
  if (!transition_allowed(page, w, state)) return act::TypeText{std::string(kFiller)};
  return tap_widget(page, hop->widget);
}

ScreenRef make_screen(const WorldSpec& spec, const WorldState& state) { return screen_ref(spec, state); }

std::string describe_widget_tap(const Widget& w) {
  switch (w.kind) {
    case WidgetKind::field:
      return fmt::format("tap the {} field", w.label);
    case WidgetKind::list_item:
      return fmt::format("tap the {} item", w.label);
    case WidgetKind::button:
      break;
  }
  return fmt::format("tap the {} button", w.label);
}

}  // namespace

std::string_view to_string(WidgetKind k) {
  switch (k) {
    case WidgetKind::button:
      return "button";
    case WidgetKind::field:
      return "field";
    case WidgetKind::list_item:
      return "list_item";
  }
  return "button";
}

WidgetKind parse_widget_kind(std::string_view s) {
  if (s == "button") return WidgetKind::button;
  if (s == "field") return WidgetKind::field;
  if (s == "list_item" || s == "list-item") return WidgetKind::list_item;
  fail(ErrorKind::format, fmt::format("unknown widget kind '{}'", s));
}

std::string var_key(std::string_view page, std::string_view widget) {
  return fmt::format("{}.{}", page, widget);
}

const Page* WorldSpec::find_page(std::string_view n) const {
  for (const auto& p : pages) {
    if (p.name == n) return &p;
  }
  return nullptr;
}

const Page& WorldSpec::page(std::string_view n) const {
  if (const Page* p = find_page(n)) return *p;
  fail(ErrorKind::invalid_argument, fmt::format("world '{}' has no page '{}'", name, n));
}

const WorldTask* WorldSpec::find_task(std::string_view goal) const {
  const auto wanted = text::collapse_whitespace(goal);
  for (const auto& t : tasks) {
    if (text::iequals(t.goal, wanted)) return &t;
  }
  return nullptr;
}

void WorldSpec::validate() const {
  auto bad = [this](const std::string& msg) { fail(ErrorKind::validation, fmt::format("world '{}': {}", name, msg)); };
  if (pages.empty()) bad("no pages");
  if (!find_page(start_page)) bad(fmt::format("start page '{}' does not exist", start_page));
  std::set<std::string> page_names;
  std::set<std::string> labels;
  for (const auto& p : pages) {
    if (p.name.empty()) bad("page with empty name");
    if (!page_names.insert(p.name).second) bad(fmt::format("duplicate page '{}'", p.name));
    if (text::trim(p.description).empty()) bad(fmt::format("page '{}' has no description", p.name));
    std::set<std::string> ids;
    std::size_t fields = 0;
    for (const auto& w : p.widgets) {
      if (w.id.empty()) bad(fmt::format("page '{}' has a widget without id", p.name));
      if (!ids.insert(w.id).second) bad(fmt::format("page '{}' repeats widget id '{}'", p.name, w.id));
      if (!labels.insert(text::lower(w.label)).second) bad(fmt::format("widget label '{}' is not unique", w.label));
      if (w.kind == WidgetKind::field) ++fields;
      if (!w.target.empty() && !find_page(w.target)) {
        bad(fmt::format("widget {}.{} targets unknown page '{}'", p.name, w.id, w.target));
      }
      if (w.kind == WidgetKind::field && (!w.target.empty() || !w.effect_value.empty())) {
        bad(fmt::format("field {}.{} cannot navigate or carry an effect", p.name, w.id));
      }
      if (!w.requires_field.empty()) {
        const Widget* f = find_widget(p, w.requires_field);
        if (!f || f->kind != WidgetKind::field) {
          bad(fmt::format("widget {}.{} requires unknown field '{}'", p.name, w.id, w.requires_field));
        }
      }
    }
    if (fields > 1) bad(fmt::format("page '{}' has more than one field", p.name));
  }
  std::set<std::string> goals;
  for (const auto& t : tasks) {
    if (text::trim(t.goal).empty()) bad("task with empty goal");
    if (!goals.insert(text::lower(t.goal)).second) bad(fmt::format("duplicate task '{}'", t.goal));
    if (!find_page(t.target_page)) bad(fmt::format("task '{}' targets unknown page '{}'", t.goal, t.target_page));
    for (const auto& r : t.requirements) {
      const Page* p = find_page(r.page);
      if (!p || !find_widget(*p, r.widget)) {
        bad(fmt::format("task '{}' requires unknown widget {}.{}", t.goal, r.page, r.widget));
      }
    }
    WorldState s = initial_state(*this);
    bool reached = false;
    for (std::size_t i = 0; i < kStepLimit; ++i) {
      auto a = next_gold_action(*this, t, s);
      if (!a) break;
      if (std::holds_alternative<act::StatusComplete>(*a)) {
        reached = true;
        break;
      }
      apply_action(*this, s, *a);
    }
    if (!reached) bad(fmt::format("task '{}' is unreachable from '{}'", t.goal, start_page));
  }
}

WorldState initial_state(const WorldSpec& spec) { return WorldState{spec.start_page, {}}; }

std::string screen_locator(const WorldState& state) {
  std::string token;
  for (const auto& [k, v] : state.vars) {
    if (!token.empty()) token.push_back('&');
    token += percent_encode(k);
    token.push_back('=');
    token += percent_encode(v);
  }
  if (token.empty()) token = "0";
  return fmt::format("{}{}{}{}", kLocatorPrefix, percent_encode(state.page), kStateMarker, token);
}

ScreenRef screen_ref(const WorldSpec& spec, const WorldState& state) {
  ScreenRef ref;
  ref.locator = screen_locator(state);
  ref.scenario = spec.name;
  return ref;
}

WorldState parse_screen_locator(const WorldSpec& spec, std::string_view locator) {
  if (!locator.starts_with(kLocatorPrefix)) {
    fail(ErrorKind::invalid_argument, fmt::format("'{}' is not a world locator", locator));
  }
  auto rest = locator.substr(kLocatorPrefix.size());
  const auto marker = rest.find(kStateMarker);
  if (marker == std::string_view::npos) {
    fail(ErrorKind::invalid_argument, fmt::format("locator '{}' has no state token", locator));
  }
  WorldState state;
  state.page = percent_decode(rest.substr(0, marker), locator);
  if (!spec.find_page(state.page)) {
    fail(ErrorKind::invalid_argument, fmt::format("locator '{}' names unknown page '{}'", locator, state.page));
  }
  const auto token = rest.substr(marker + kStateMarker.size());
  if (token.empty()) fail(ErrorKind::invalid_argument, fmt::format("locator '{}' has an empty state", locator));
  if (token == "0") return state;
  for (const auto& pair : text::split(token, "&")) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::invalid_argument, fmt::format("malformed state entry '{}' in '{}'", pair, locator));
    }
    state.vars[percent_decode(std::string_view(pair).substr(0, eq), locator)] =
        percent_decode(std::string_view(pair).substr(eq + 1), locator);
  }
  return state;
}

Rect widget_bbox(const Page& page, std::size_t index) {
  const double m = static_cast<double>(page.widgets.size());
  const double i = static_cast<double>(index);
  return Rect{i / m, 0.4, (i + 1.0) / m, 0.6};
}

Action tap_widget(const Page& page, std::size_t index) {
  const Point c = widget_bbox(page, index).center();
  return act::Tap{c.x, c.y};
}

std::optional<std::size_t> widget_at(const Page& page, Point p) {
  for (std::size_t i = 0; i < page.widgets.size(); ++i) {
    const Rect r = widget_bbox(page, i);
    // Half-open columns so a point on a shared border belongs to exactly one widget.
    const bool last = i + 1 == page.widgets.size();
    if (p.x >= r.x0 && (p.x < r.x1 || (last && p.x <= r.x1)) && p.y >= r.y0 && p.y <= r.y1) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> widget_index(const Page& page, std::string_view widget_id) {
  for (std::size_t i = 0; i < page.widgets.size(); ++i) {
    if (page.widgets[i].id == widget_id) return i;
  }
  return std::nullopt;
}

bool transition_allowed(const Page& page, const Widget& widget, const WorldState& state) {
  if (widget.requires_field.empty()) return true;
  return !text::trim(var_or_empty(state, var_key(page.name, widget.requires_field))).empty();
}

bool goal_satisfied(const WorldTask& task, const WorldState& state) {
  if (state.page != task.target_page) return false;
  return std::all_of(task.requirements.begin(), task.requirements.end(), [&](const Requirement& r) {
    return var_or_empty(state, var_key(r.page, r.widget)) == r.value;
  });
}

ApplyResult apply_action(const WorldSpec& spec, WorldState& state, const Action& action) {
  const Page& page = spec.page(state.page);
  return std::visit(
      [&](const auto& a) -> ApplyResult {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, act::Tap>) {
          if (auto i = widget_at(page, Point{a.x, a.y})) return activate(spec, state, page, page.widgets[*i]);
          return {};
        } else if constexpr (std::is_same_v<T, act::ClickElement>) {
          if (const Widget* w = find_widget(page, a.element_id)) return activate(spec, state, page, *w);
          return {};
        } else if constexpr (std::is_same_v<T, act::TypeText>) {
          if (const Widget* f = field_of(page)) state.vars[var_key(page.name, f->id)] = a.text;
          return {};
        } else if constexpr (std::is_same_v<T, act::TypeInElement> || std::is_same_v<T, act::SelectOption>) {
          const Widget* w = find_widget(page, a.element_id);
          if (w && w->kind == WidgetKind::field) {
            if constexpr (std::is_same_v<T, act::TypeInElement>) {
              state.vars[var_key(page.name, w->id)] = a.text;
            } else {
              state.vars[var_key(page.name, w->id)] = a.value;
            }
          }
          return {};
        } else if constexpr (std::is_same_v<T, act::PressKey>) {
          if (a.key == Key::home) {
            const bool changed = state.page != spec.start_page;
            state.page = spec.start_page;
            return {false, changed};
          }
          if (a.key == Key::back) {
            if (const Widget* w = find_widget(page, "back")) return activate(spec, state, page, *w);
            return {};
          }
          // Enter submits the field: activates the first widget gated on it.
          if (const Widget* f = field_of(page)) {
            for (const auto& w : page.widgets) {
              if (w.requires_field == f->id) return activate(spec, state, page, w);
            }
          }
          return {};
        } else if constexpr (std::is_same_v<T, act::StatusComplete> || std::is_same_v<T, act::StatusImpossible>) {
          return {true, false};
        } else {
          return {};
        }
      },
      action);
}

std::string describe_action(const WorldSpec& spec, const WorldState& before, const Action& action) {
  const Page& page = spec.page(before.page);
  return std::visit(
      [&](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, act::Tap>) {
          if (auto i = widget_at(page, Point{a.x, a.y})) return describe_widget_tap(page.widgets[*i]);
          return fmt::format("tap an empty area of the {} page", page.name);
        } else if constexpr (std::is_same_v<T, act::ClickElement>) {
          if (const Widget* w = find_widget(page, a.element_id)) return describe_widget_tap(*w);
          return fmt::format("click element {} on the {} page", a.element_id, page.name);
        } else if constexpr (std::is_same_v<T, act::TypeText>) {
          if (const Widget* f = field_of(page)) return fmt::format("type \"{}\" into the {} field", a.text, f->label);
          return fmt::format("type \"{}\"", a.text);
        } else if constexpr (std::is_same_v<T, act::TypeInElement>) {
          if (const Widget* w = find_widget(page, a.element_id)) {
            return fmt::format("type \"{}\" into the {} field", a.text, w->label);
          }
          return fmt::format("type \"{}\" into element {}", a.text, a.element_id);
        } else if constexpr (std::is_same_v<T, act::SelectOption>) {
          if (const Widget* w = find_widget(page, a.element_id)) {
            return fmt::format("select \"{}\" in the {} field", a.value, w->label);
          }
          return fmt::format("select \"{}\" in element {}", a.value, a.element_id);
        } else if constexpr (std::is_same_v<T, act::Swipe>) {
          return fmt::format("swipe {}", to_string(a.direction));
        } else if constexpr (std::is_same_v<T, act::PressKey>) {
          return fmt::format("press the {} key", to_string(a.key));
        } else if constexpr (std::is_same_v<T, act::OpenApp>) {
          return fmt::format("open the {} app", a.name);
        } else if constexpr (std::is_same_v<T, act::StatusComplete>) {
          return "mark the task as complete";
        } else {
          return "mark the task as impossible";
        }
      },
      action);
}

std::optional<Action> next_gold_action(const WorldSpec& spec, const WorldTask& task, const WorldState& state) {
  if (goal_satisfied(task, state)) return act::StatusComplete{};
  for (const auto& r : task.requirements) {
    if (var_or_empty(state, var_key(r.page, r.widget)) == r.value) continue;
    if (state.page != r.page) return step_toward(spec, state, r.page);
    const Page& page = spec.page(r.page);
    const auto idx = widget_index(page, r.widget);
    if (!idx) return std::nullopt;
    const Widget& w = page.widgets[*idx];
    if (w.kind == WidgetKind::field) return act::TypeText{r.value};
    if (w.effect_value != r.value) return std::nullopt;
    if (!transition_allowed(page, w, state)) return act::TypeText{std::string(kFiller)};
    return tap_widget(page, *idx);
  }
  return step_toward(spec, state, task.target_page);
}

Action left_to_right_action(const WorldSpec& spec, const WorldTask& task, const WorldState& state) {
  if (goal_satisfied(task, state)) return act::StatusComplete{};
  const Page& page = spec.page(state.page);
  for (std::size_t i = 0; i < page.widgets.size(); ++i) {
    const auto& w = page.widgets[i];
    if (w.kind != WidgetKind::field && !w.target.empty() && transition_allowed(page, w, state)) {
      return tap_widget(page, i);
    }
  }
  for (std::size_t i = 0; i < page.widgets.size(); ++i) {
    if (!page.widgets[i].effect_value.empty()) return tap_widget(page, i);
  }
  return act::StatusImpossible{};
}

Episode solve_task(const WorldSpec& spec, const WorldTask& task, WorldState start, std::string episode_id) {
  Episode ep;
  ep.episode_id = std::move(episode_id);
  ep.task = task.goal;
  WorldState state = std::move(start);
  for (std::size_t i = 0; i < kStepLimit; ++i) {
    auto a = next_gold_action(spec, task, state);
    if (!a) {
      fail(ErrorKind::invalid_argument,
           fmt::format("task '{}' is unreachable from page '{}'", task.goal, state.page));
    }
    ep.steps.push_back({make_screen(spec, state), *a});
    if (std::holds_alternative<act::StatusComplete>(*a)) return ep;
    apply_action(spec, state, *a);
  }
  fail(ErrorKind::invalid_argument, fmt::format("task '{}' exceeded {} steps", task.goal, kStepLimit));
}

std::vector<Episode> generate_episodes(const WorldSpec& spec, std::span<const WorldTask> tasks,
                                       std::uint64_t seed) {
  std::vector<Episode> out;
  out.reserve(tasks.size());
  std::uint64_t mix = seed;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto tag = splitmix64(mix) & 0xffffffffULL;
    out.push_back(solve_task(spec, tasks[i], initial_state(spec), fmt::format("{}-{:08x}-{:03d}", spec.name, tag, i + 1)));
  }
  return out;
}

std::string transition_task(std::string_view page, std::string_view widget) {
  return fmt::format("traverse {}.{}", page, widget);
}

std::vector<Episode> coverage_episodes(const WorldSpec& spec) {
  std::vector<Episode> out;
  for (const auto& page : spec.pages) {
    for (std::size_t wi = 0; wi < page.widgets.size(); ++wi) {
      const Widget& w = page.widgets[wi];
      if (w.target.empty()) continue;
      Episode ep;
      ep.episode_id = fmt::format("{}-cov-{:03d}", spec.name, out.size() + 1);
      ep.task = transition_task(page.name, w.id);
      WorldState state = initial_state(spec);
      std::size_t guard = 0;
      while (state.page != page.name) {
        auto a = step_toward(spec, state, page.name);
        if (!a || ++guard > kStepLimit) {
          fail(ErrorKind::invalid_argument, fmt::format("page '{}' is unreachable from the start", page.name));
        }
        ep.steps.push_back({make_screen(spec, state), *a});
        apply_action(spec, state, *a);
      }
      if (!transition_allowed(page, w, state)) {
        Action fill = act::TypeText{std::string(kFiller)};
        ep.steps.push_back({make_screen(spec, state), fill});
        apply_action(spec, state, fill);
      }
      Action tap = tap_widget(page, wi);
      ep.steps.push_back({make_screen(spec, state), tap});
      apply_action(spec, state, tap);
      ep.final_screen = make_screen(spec, state);
      out.push_back(std::move(ep));
    }
  }
  return out;
}

std::vector<Episode> walk_episodes(const WorldSpec& spec, std::uint64_t seed) {
  std::uint64_t rng = seed;
  std::unordered_map<std::string, std::deque<std::size_t>> unused;
  for (const auto& page : spec.pages) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < page.widgets.size(); ++i) {
      if (!page.widgets[i].target.empty()) idx.push_back(i);
    }
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_below(rng, i)]);
    unused[page.name] = std::deque<std::size_t>(idx.begin(), idx.end());
  }
  std::vector<std::size_t> order(spec.pages.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

  std::vector<Episode> out;
  for (std::size_t start : order) {
    while (!unused[spec.pages[start].name].empty()) {
      Episode ep;
      ep.episode_id = fmt::format("{}-walk-{:04d}", spec.name, out.size() + 1);
      ep.task = fmt::format("walk {} from {}", out.size() + 1, spec.pages[start].name);
      WorldState state{spec.pages[start].name, {}};
      while (!unused[state.page].empty()) {
        const Page& page = spec.page(state.page);
        const std::size_t wi = unused[state.page].front();
        unused[state.page].pop_front();
        if (!transition_allowed(page, page.widgets[wi], state)) {
          Action fill = act::TypeText{std::string(kFiller)};
          ep.steps.push_back({make_screen(spec, state), fill});
          apply_action(spec, state, fill);
        }
        Action tap = tap_widget(page, wi);
        ep.steps.push_back({make_screen(spec, state), tap});
        apply_action(spec, state, tap);
      }
      ep.final_screen = make_screen(spec, state);
      out.push_back(std::move(ep));
    }
  }
  return out;
}

PageGraph true_page_graph(const WorldSpec& spec) {
  PageGraph g(spec.name, Platform::mobile);
  std::unordered_map<std::string, std::string> ids;
  for (const auto& page : spec.pages) {
    ids[page.name] = g.add_node(page.description, screen_locator(WorldState{page.name, {}})).node_id;
  }
  for (const auto& page : spec.pages) {
    for (const auto& w : page.widgets) {
      if (w.target.empty()) continue;
      g.add_edge(ids.at(page.name), ids.at(w.target), {describe_widget_tap(w)}, transition_task(page.name, w.id));
    }
  }
  return g;
}

WorldSpec demo_world() {
  WorldSpec w;
  w.name = "demo";
  w.start_page = "launcher";
  auto button = [](std::string id, std::string label, std::string target, std::string requires_field = {},
                   std::string effect = {}) {
    return Widget{std::move(id), std::move(label), WidgetKind::button, std::move(target), std::move(requires_field),
                  std::move(effect)};
  };
  auto field = [](std::string id, std::string label) {
    return Widget{std::move(id), std::move(label), WidgetKind::field, {}, {}, {}};
  };
  auto item = [](std::string id, std::string label, std::string target) {
    return Widget{std::move(id), std::move(label), WidgetKind::list_item, std::move(target), {}, {}};
  };
  w.pages = {
      {"launcher",
       "Home screen with app grid: Shop, Settings and Cart shortcuts",
       {button("shop_app", "Shop app", "search"), button("settings_app", "Settings app", "settings"),
        button("cart_app", "Cart app", "cart")}},
      {"search",
       "Product search page with a search input field and a search button",
       {button("back", "Back to home", "launcher"), field("query", "search input"),
        button("submit", "Search", "results", "query")}},
      {"results",
       "Search results page listing matching products",
       {button("back", "Back to search", "search"), item("first", "first result", "detail")}},
      {"detail",
       "Product detail page with price, reviews and an add to cart button",
       {button("back", "Back to results", "results"), button("add", "Add to cart", "cart", {}, "added")}},
      {"cart",
       "Shopping cart page listing selected items with a checkout button",
       {button("home", "Home", "launcher"), button("checkout", "Checkout", "checkout")}},
      {"checkout",
       "Checkout form page with a shipping address field and a place order button",
       {button("back", "Back to cart", "cart"), field("address", "shipping address"),
        button("place", "Place order", "confirmation", "address")}},
      {"confirmation", "Order confirmation page with a thank you message", {button("done", "Done", "launcher")}},
      {"settings",
       "Settings page with Wi-Fi toggle, settings search field and display options",
       {button("exit", "Exit settings", "launcher"), button("wifi", "Wi-Fi toggle", {}, {}, "on"),
        field("find", "settings search")}},
  };
  w.tasks = {
      {"Open the product search page", "search", {}},
      {"Search for wifi adapter", "results", {{"search", "query", "wifi adapter"}}},
      {"Open the first result for headphones", "detail", {{"search", "query", "headphones"}}},
      {"Add the first usb cable result to the cart",
       "cart",
       {{"search", "query", "usb cable"}, {"detail", "add", "added"}}},
      {"Open the shopping cart", "cart", {}},
      {"Check out the cart to 12 Main St", "confirmation", {{"checkout", "address", "12 Main St"}}},
      {"Turn on Wi-Fi", "settings", {{"settings", "wifi", "on"}}},
      {"Search settings for display", "settings", {{"settings", "find", "display"}}},
      {"Buy a phone case shipped to 5 Oak Ave",
       "confirmation",
       {{"search", "query", "phone case"}, {"detail", "add", "added"}, {"checkout", "address", "5 Oak Ave"}}},
      {"Search for laptop and return home", "launcher", {{"search", "query", "laptop"}}},
  };
  return w;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t uniform_below(std::uint64_t& state, std::uint64_t bound) {
  if (bound == 0) fail(ErrorKind::invalid_argument, "uniform_below needs a positive bound");
  // Rejection sampling keeps the draw unbiased and identical on every platform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t v = splitmix64(state);
    if (v < limit) return v % bound;
  }
}

WorldSpec random_world(std::uint64_t seed, const RandomWorldOptions& options) {
  if (options.pages < 1) fail(ErrorKind::invalid_argument, "random world needs at least one page");
  if (options.max_out_degree < 1 && options.pages > 1) {
    fail(ErrorKind::invalid_argument, "random world needs an out-degree of at least one");
  }
  static constexpr std::string_view kAdjectives[] = {"blue", "quiet", "rapid", "golden", "hidden", "silver",
                                                     "frozen", "bright", "gentle", "crimson", "lucky", "ancient"};
  static constexpr std::string_view kNouns[] = {"garden", "ledger", "harbor", "canvas", "orbit",  "meadow",
                                                "beacon", "ticket", "fossil", "lantern", "prism", "summit"};
  std::uint64_t rng = seed;
  auto pick = [&rng](const auto& arr) {
    return arr[uniform_below(rng, std::size(arr))];
  };

  WorldSpec w;
  w.name = fmt::format("random-{}", seed);
  const std::size_t n = options.pages;
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = fmt::format("p{:04d}", i);
  w.start_page = names[0];
  w.pages.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Page& p = w.pages[i];
    p.name = names[i];
    p.description = fmt::format("Page {} showing the {} {} panel with {} {} controls", i, pick(kAdjectives),
                                pick(kNouns), pick(kAdjectives), pick(kNouns));
  }

  std::vector<std::set<std::size_t>> targets(n);
  auto add_transition = [&](std::size_t src, std::size_t dst) {
    targets[src].insert(dst);
    Page& p = w.pages[src];
    const std::string id = fmt::format("to_{}", names[dst]);
    p.widgets.push_back(Widget{id, fmt::format("{} to {}", names[src], names[dst]), WidgetKind::button, names[dst],
                               {}, {}});
  };
  // Spanning tree: every page hangs off an earlier page with spare out-degree.
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t parent = 0;
    for (int attempt = 0;; ++attempt) {
      parent = uniform_below(rng, i);
      if (targets[parent].size() < options.max_out_degree) break;
      if (attempt > 64) {
        parent = i - 1;
        break;
      }
    }
    add_transition(parent, i);
  }
  const std::size_t capacity = n * std::min(options.max_out_degree, n > 0 ? n - 1 : 0);
  const std::size_t wanted = std::min(std::max(options.transitions, n - 1), capacity);
  std::size_t have = n - 1;
  std::size_t stalls = 0;
  while (have < wanted && stalls < 100000) {
    const std::size_t src = uniform_below(rng, n);
    const std::size_t dst = uniform_below(rng, n);
    if (src == dst || targets[src].count(dst) || targets[src].size() >= options.max_out_degree) {
      ++stalls;
      continue;
    }
    add_transition(src, dst);
    ++have;
  }
  // Fields go first in the left-to-right layout so the tree edges keep their relative order.
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<double>(uniform_below(rng, 1000)) / 1000.0 < options.field_probability) {
      Page& p = w.pages[i];
      p.widgets.insert(p.widgets.begin(), Widget{"input", fmt::format("{} input", names[i]), WidgetKind::field,
                                                 {}, {}, {}});
    }
  }

  // Tasks: reach a random page, sometimes after filling a field on another page. Candidates
  // that the shortest-path policy cannot solve are dropped.
  std::size_t attempts = 0;
  while (w.tasks.size() < options.tasks && attempts < options.tasks * 20 && n > 1) {
    ++attempts;
    WorldTask t;
    const std::size_t target = 1 + uniform_below(rng, n - 1);
    t.target_page = names[target];
    t.goal = fmt::format("Reach {}", names[target]);
    const std::size_t fp = uniform_below(rng, n);
    if (field_of(w.pages[fp]) && uniform_below(rng, 2) == 0) {
      t.requirements.push_back({names[fp], "input", std::string(pick(kNouns))});
      t.goal = fmt::format("Enter {} on {} then reach {}", t.requirements[0].value, names[fp], names[target]);
    }
    if (w.find_task(t.goal)) continue;
    WorldState s = initial_state(w);
    bool ok = false;
    for (std::size_t i = 0; i < kStepLimit; ++i) {
      auto a = next_gold_action(w, t, s);
      if (!a) break;
      if (std::holds_alternative<act::StatusComplete>(*a)) {
        ok = true;
        break;
      }
      apply_action(w, s, *a);
    }
    if (ok) w.tasks.push_back(std::move(t));
  }
  return w;
}

WorldEnvironment::WorldEnvironment(const WorldSpec& spec) : WorldEnvironment(spec, initial_state(spec)) {}

WorldEnvironment::WorldEnvironment(const WorldSpec& spec, WorldState start) : spec_(spec), state_(std::move(start)) {
  (void)spec_.page(state_.page);
}

ScreenRef WorldEnvironment::current_screen() const { return screen_ref(spec_, state_); }

StepOutcome WorldEnvironment::apply(const Action& action) {
  return StepOutcome{apply_action(spec_, state_, action).terminal};
}

}  // namespace pgagent::world
