#include "pgagent/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/kernels.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

std::set<std::string> token_set(std::string_view s) {
  std::set<std::string> out;
  for (const auto& tok : text::split(text::collapse_whitespace(s), " ")) {
    if (!tok.empty()) out.insert(text::lower(tok));
  }
  return out;
}

std::string fold(std::string_view s) { return text::lower(text::trim(s)); }

std::string rate(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("-"); }

nlohmann::json slice_json(const MetricSlice& s) {
  nlohmann::json j = {{"steps", s.steps}, {"action_match_rate", s.action_match_rate}};
  if (s.ele_acc) j["ele_acc"] = *s.ele_acc;
  if (s.op_f1) j["op_f1"] = *s.op_f1;
  if (s.step_sr) j["step_sr"] = *s.step_sr;
  return j;
}

double fraction(std::size_t hits, std::size_t total) {
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

bool match_mobile_action(const Action& gold, const Action& predicted, double threshold,
                         const std::optional<Rect>& gold_bbox) {
  if (gold.index() != predicted.index()) return false;
  if (const auto* g = std::get_if<act::Tap>(&gold)) {
    const auto& p = std::get<act::Tap>(predicted);
    if (gold_bbox && gold_bbox->contains(Point{p.x, p.y})) return true;
    return std::hypot(g->x - p.x, g->y - p.y) <= threshold;
  }
  if (const auto* g = std::get_if<act::TypeText>(&gold)) {
    return fold(g->text) == fold(std::get<act::TypeText>(predicted).text);
  }
  if (const auto* g = std::get_if<act::TypeInElement>(&gold)) {
    const auto& p = std::get<act::TypeInElement>(predicted);
    return g->element_id == p.element_id && fold(g->text) == fold(p.text);
  }
  if (const auto* g = std::get_if<act::SelectOption>(&gold)) {
    const auto& p = std::get<act::SelectOption>(predicted);
    return g->element_id == p.element_id && fold(g->value) == fold(p.value);
  }
  if (const auto* g = std::get_if<act::ClickElement>(&gold)) {
    return g->element_id == std::get<act::ClickElement>(predicted).element_id;
  }
  if (const auto* g = std::get_if<act::OpenApp>(&gold)) {
    return fold(g->name) == fold(std::get<act::OpenApp>(predicted).name);
  }
  // Swipe, PressKey and the status actions carry no tolerance.
  return gold == predicted;
}

double op_f1(std::string_view gold, std::string_view predicted) {
  const auto g = token_set(gold);
  const auto p = token_set(predicted);
  if (g.empty() && p.empty()) return 1.0;
  if (g.empty() || p.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : p) common += g.count(t);
  if (common == 0) return 0.0;
  const double precision = fraction(common, p.size());
  const double recall = fraction(common, g.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::string operation_string(const Action& action) {
  if (std::holds_alternative<act::ClickElement>(action)) return "CLICK";
  if (const auto* t = std::get_if<act::TypeInElement>(&action)) return fmt::format("TYPE {}", t->text);
  if (const auto* s = std::get_if<act::SelectOption>(&action)) return fmt::format("SELECT {}", s->value);
  if (const auto* t = std::get_if<act::TypeText>(&action)) return fmt::format("TYPE {}", t->text);
  return {};
}

std::optional<std::string> element_of(const Action& action) {
  if (const auto* c = std::get_if<act::ClickElement>(&action)) return c->element_id;
  if (const auto* t = std::get_if<act::TypeInElement>(&action)) return t->element_id;
  if (const auto* s = std::get_if<act::SelectOption>(&action)) return s->element_id;
  return std::nullopt;
}

MetricSlice web_step_metrics(std::span<const StepRecord> records, const MetricOptions& options) {
  if (records.empty()) fail(ErrorKind::precondition, "web metrics are undefined for zero records");
  const std::size_t n = records.size();
  std::vector<unsigned char> element_hit(n, 0);
  std::vector<unsigned char> step_hit(n, 0);
  std::vector<double> f1(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (!element_of(r.gold) && r.gold_elements.empty()) {
      fail(ErrorKind::validation, fmt::format("web record {}#{} has no gold element", r.episode_id, r.step));
    }
  }

  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (count > 1024)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto& r = records[i];
    std::vector<std::string> acceptable = r.gold_elements;
    if (acceptable.empty()) acceptable.push_back(*element_of(r.gold));
    const auto predicted_element = element_of(r.predicted);
    const bool element_ok = predicted_element &&
                            std::find(acceptable.begin(), acceptable.end(), *predicted_element) != acceptable.end();

    const std::string gold_op = operation_string(r.gold);
    const std::string pred_op = operation_string(r.predicted);
    bool op_exact = text::iequals(text::collapse_whitespace(gold_op), text::collapse_whitespace(pred_op));
    double score = op_f1(gold_op, pred_op);
    if (options.select_click_equivalence && std::holds_alternative<act::ClickElement>(r.gold) &&
        std::holds_alternative<act::SelectOption>(r.predicted) && element_ok) {
      op_exact = true;
      score = 1.0;
    }
    element_hit[i] = element_ok ? 1 : 0;
    step_hit[i] = element_ok && op_exact ? 1 : 0;
    f1[i] = score;
  }

  MetricSlice s;
  s.steps = n;
  s.ele_acc = fraction(kernels::count_true_parallel(element_hit), n);
  s.step_sr = fraction(kernels::count_true_parallel(step_hit), n);
  s.op_f1 = kernels::sum_parallel(f1) / static_cast<double>(n);
  s.action_match_rate = *s.step_sr;
  return s;
}

MetricSlice mobile_step_metrics(std::span<const StepRecord> records, const MetricOptions& options) {
  if (records.empty()) fail(ErrorKind::precondition, "mobile metrics are undefined for zero records");
  const std::size_t n = records.size();
  std::vector<unsigned char> hit(n, 0);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (count > 1024)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    hit[i] = match_mobile_action(records[i].gold, records[i].predicted, options.tap_threshold, records[i].gold_bbox)
                 ? 1
                 : 0;
  }
  MetricSlice s;
  s.steps = n;
  s.action_match_rate = fraction(kernels::count_true_parallel(hit), n);
  return s;
}

MetricReport evaluate_records(std::span<const StepRecord> records, Platform platform, const MetricOptions& options) {
  auto slice = [&](std::span<const StepRecord> rs) {
    return platform == Platform::web ? web_step_metrics(rs, options) : mobile_step_metrics(rs, options);
  };
  MetricReport report;
  report.platform = platform;
  report.overall = slice(records);
  std::map<std::string, std::vector<StepRecord>> groups;
  for (const auto& r : records) groups[r.scenario].push_back(r);
  for (const auto& [scenario, rs] : groups) report.per_scenario[scenario] = slice(rs);
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [k, v] : per_scenario) per[k] = slice_json(v);
  return {{"platform", std::string(pgagent::to_string(platform))}, {"per_scenario", per},
          {"overall", slice_json(overall)}};
}

std::string MetricReport::render() const {
  std::string out = fmt::format("{:<16} {:>6} {:>12} {:>8} {:>8} {:>8}\n", "Scenario", "Steps", "ActionMatch",
                                "EleAcc", "OpF1", "StepSR");
  auto line = [&](const std::string& name, const MetricSlice& s) {
    out += fmt::format("{:<16} {:>6} {:>12.4f} {:>8} {:>8} {:>8}\n", name, s.steps, s.action_match_rate,
                       rate(s.ele_acc), rate(s.op_f1), rate(s.step_sr));
  };
  for (const auto& [k, v] : per_scenario) line(k.empty() ? std::string("(none)") : k, v);
  line("Overall", overall);
  return out;
}

StatsTable StatsTable::with_sum(std::vector<StatsRow> rows) {
  StatsTable t;
  for (const auto& r : rows) {
    t.total.episodes += r.episodes;
    t.total.images += r.images;
    t.total.nodes += r.nodes;
    t.total.edges += r.edges;
  }
  t.rows = std::move(rows);
  return t;
}

std::string StatsTable::render() const {
  std::size_t width = std::string_view("Scenario").size();
  for (const auto& r : rows) width = std::max(width, r.scenario.size());
  width = std::max(width, total.scenario.size());
  std::string out = fmt::format("{:<{}}  {:>10}  {:>8}  {:>7}  {:>7}\n", "Scenario", width, "#Episodes", "#Images",
                                "#Nodes", "#Edges");
  auto line = [&](const StatsRow& r) {
    out += fmt::format("{:<{}}  {:>10}  {:>8}  {:>7}  {:>7}\n", r.scenario, width, r.episodes, r.images, r.nodes,
                       r.edges);
  };
  for (const auto& r : rows) line(r);
  line(total);
  return out;
}

nlohmann::json StatsTable::to_json() const {
  auto row = [](const StatsRow& r) {
    return nlohmann::json{{"scenario", r.scenario}, {"episodes", r.episodes}, {"images", r.images},
                          {"nodes", r.nodes},       {"edges", r.edges}};
  };
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) rs.push_back(row(r));
  return {{"rows", rs}, {"total", row(total)}};
}

CorpusManifest make_manifest(std::string scenario, std::span<const Episode> ingested) {
  CorpusManifest m;
  m.scenario = std::move(scenario);
  m.episodes = ingested.size();
  for (const auto& e : ingested) {
    m.images += episode_images(e).size();
    m.episode_ids.push_back(e.episode_id);
  }
  return m;
}

StatsTable graph_stats(std::span<const GraphCorpus> inputs) {
  std::vector<StatsRow> rows;
  for (const auto& in : inputs) {
    if (!in.graph) fail(ErrorKind::invalid_argument, "graph_stats got a null graph");
    StatsRow r;
    r.scenario = in.manifest.scenario.empty() ? in.graph->scenario() : in.manifest.scenario;
    r.episodes = in.manifest.episodes;
    r.images = in.manifest.images;
    r.nodes = in.graph->node_count();
    r.edges = in.graph->edge_count();
    rows.push_back(std::move(r));
  }
  return StatsTable::with_sum(std::move(rows));
}

}  // namespace pgagent
