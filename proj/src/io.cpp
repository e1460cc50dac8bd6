#include "pgagent/io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent::io {

using nlohmann::json;

namespace {

constexpr std::string_view kGraphFormat = "pgagent-graph";
constexpr std::string_view kEpisodeFormat = "pgagent-episodes";
constexpr std::string_view kWorldFormat = "pgagent-world";
constexpr std::string_view kTranscriptFormat = "pgagent-transcripts";
constexpr std::string_view kPredictionFormat = "pgagent-predictions";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

// Runs `body` and rewraps JSON access errors (missing keys, wrong types) as format errors.
template <class F>
auto guarded(std::string_view source, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const json::exception& e) {
    fail(ErrorKind::format, fmt::format("{}: {}", source, e.what()));
  }
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

void check_header(const json& header, std::string_view format, int version, std::string_view source) {
  if (!header.is_object() || header.value("format", "") != format) {
    fail(ErrorKind::format, fmt::format("{}: not a {} file", source, format));
  }
  const int found = header.at("version").get<int>();
  if (found != version) {
    fail(ErrorKind::migration,
         fmt::format("{}: {} version {} is not supported (this build reads version {})", source, format, found,
                     version));
  }
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\r' || c == '\t') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

Action action_field(const json& j, const char* key) { return parse_action(j.at(key).get<std::string>()); }

std::vector<std::string> string_list(const json& j) { return j.get<std::vector<std::string>>(); }

}  // namespace

void atomic_write(const fs::path& path, std::string_view bytes) {
  static std::atomic<unsigned> counter{0};
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp =
      dir / fmt::format(".{}.tmp-{}-{}", path.filename().string(), static_cast<long>(::getpid()), counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, fmt::format("cannot write {}", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::io, fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::io, fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based; report the line and the column within it.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorKind::format, fmt::format("{}:{}:{}: malformed JSON (byte offset {})", source, line, column, at));
  }
}

json to_json(const ScreenRef& s) {
  json j = {{"locator", s.locator}, {"scenario", s.scenario}};
  if (s.width_px) j["width_px"] = *s.width_px;
  if (s.height_px) j["height_px"] = *s.height_px;
  return j;
}

ScreenRef screen_from_json(const json& j) {
  ScreenRef s;
  if (j.is_string()) {
    s.locator = j.get<std::string>();
  } else {
    s.locator = j.at("locator").get<std::string>();
    s.scenario = j.value("scenario", "");
    if (j.contains("width_px")) s.width_px = j.at("width_px").get<int>();
    if (j.contains("height_px")) s.height_px = j.at("height_px").get<int>();
  }
  s.validate();
  return s;
}

json to_json(const Episode& e) {
  json steps = json::array();
  for (const auto& st : e.steps) steps.push_back({{"screen", to_json(st.screen)}, {"action", format_action(st.action)}});
  json j = {{"episode_id", e.episode_id}, {"task", e.task}, {"steps", steps}};
  j["final_screen"] = e.final_screen ? to_json(*e.final_screen) : json(nullptr);
  return j;
}

Episode episode_from_json(const json& j) {
  Episode e;
  e.episode_id = j.at("episode_id").get<std::string>();
  e.task = j.at("task").get<std::string>();
  for (const auto& st : j.at("steps")) e.steps.push_back({screen_from_json(st.at("screen")), action_field(st, "action")});
  if (j.contains("final_screen") && !j.at("final_screen").is_null()) e.final_screen = screen_from_json(j.at("final_screen"));
  e.validate();
  return e;
}

json to_json(const Guideline& g) {
  return {{"action_queue", g.action_queue},
          {"achievable_tasks", g.achievable_tasks},
          {"source_node", g.source_node},
          {"source_edge", g.source_edge},
          {"similarity_score", g.similarity_score}};
}

Guideline guideline_from_json(const json& j) {
  return Guideline{string_list(j.at("action_queue")), string_list(j.at("achievable_tasks")),
                   j.at("source_node").get<std::string>(), j.value("source_edge", ""),
                   j.at("similarity_score").get<double>()};
}

json to_json(const AgentTranscript& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json gl = json::array();
    for (const auto& g : s.guidelines_used) gl.push_back(to_json(g));
    steps.push_back({{"screen", to_json(s.screen)},
                     {"observation", s.observation},
                     {"subtask_plan", s.subtask_plan},
                     {"action", format_action(s.action)},
                     {"rationale", s.rationale},
                     {"guidelines_used", gl}});
  }
  return {{"goal", t.goal},
          {"global_plan", t.global_plan},
          {"steps", steps},
          {"terminated_by", std::string(to_string(t.terminated_by))},
          {"error_message", t.error_message}};
}

AgentTranscript transcript_from_json(const json& j) {
  AgentTranscript t;
  t.goal = j.at("goal").get<std::string>();
  t.global_plan = j.at("global_plan").get<std::string>();
  t.terminated_by = parse_termination(j.at("terminated_by").get<std::string>());
  t.error_message = j.value("error_message", "");
  for (const auto& s : j.at("steps")) {
    TranscriptStep step;
    step.screen = screen_from_json(s.at("screen"));
    step.observation = s.at("observation").get<std::string>();
    step.subtask_plan = s.at("subtask_plan").get<std::string>();
    step.action = action_field(s, "action");
    step.rationale = s.at("rationale").get<std::string>();
    for (const auto& g : s.at("guidelines_used")) step.guidelines_used.push_back(guideline_from_json(g));
    t.steps.push_back(std::move(step));
  }
  return t;
}

json to_json(const world::WorldSpec& w) {
  json pages = json::array();
  for (const auto& p : w.pages) {
    json widgets = json::array();
    for (const auto& wd : p.widgets) {
      widgets.push_back({{"id", wd.id},
                         {"label", wd.label},
                         {"kind", std::string(world::to_string(wd.kind))},
                         {"target", wd.target},
                         {"requires_field", wd.requires_field},
                         {"effect_value", wd.effect_value}});
    }
    pages.push_back({{"name", p.name}, {"description", p.description}, {"widgets", widgets}});
  }
  json tasks = json::array();
  for (const auto& t : w.tasks) {
    json reqs = json::array();
    for (const auto& r : t.requirements) reqs.push_back({{"page", r.page}, {"widget", r.widget}, {"value", r.value}});
    tasks.push_back({{"goal", t.goal}, {"target_page", t.target_page}, {"requirements", reqs}});
  }
  return {{"format", std::string(kWorldFormat)},
          {"version", world::WorldSpec::kFormatVersion},
          {"name", w.name},
          {"start_page", w.start_page},
          {"pages", pages},
          {"tasks", tasks}};
}

world::WorldSpec world_from_json(const json& j) {
  world::WorldSpec w;
  w.name = j.at("name").get<std::string>();
  w.start_page = j.at("start_page").get<std::string>();
  for (const auto& p : j.at("pages")) {
    world::Page page;
    page.name = p.at("name").get<std::string>();
    page.description = p.at("description").get<std::string>();
    for (const auto& wd : p.at("widgets")) {
      page.widgets.push_back(world::Widget{wd.at("id").get<std::string>(), wd.at("label").get<std::string>(),
                                           world::parse_widget_kind(wd.at("kind").get<std::string>()),
                                           wd.value("target", ""), wd.value("requires_field", ""),
                                           wd.value("effect_value", "")});
    }
    w.pages.push_back(std::move(page));
  }
  for (const auto& t : j.at("tasks")) {
    world::WorldTask task;
    task.goal = t.at("goal").get<std::string>();
    task.target_page = t.at("target_page").get<std::string>();
    for (const auto& r : t.at("requirements")) {
      task.requirements.push_back(
          {r.at("page").get<std::string>(), r.at("widget").get<std::string>(), r.at("value").get<std::string>()});
    }
    w.tasks.push_back(std::move(task));
  }
  return w;
}

fs::path embedding_path(const fs::path& graph_path) { return fs::path(graph_path.string() + ".emb"); }

std::string graph_to_text(const PageGraph& graph, const json& provenance) {
  bool any_embedding = false;
  json nodes = json::array();
  for (const auto& [id, n] : graph.nodes()) {
    any_embedding = any_embedding || !n.embedding.empty();
    nodes.push_back({{"node_id", id},
                     {"summary", n.summary},
                     {"image_locator", n.image_locator},
                     {"has_embedding", !n.embedding.empty()}});
  }
  json edges = json::array();
  for (const auto& [id, e] : graph.edges()) {
    edges.push_back({{"edge_id", id},
                     {"src", e.src},
                     {"dst", e.dst},
                     {"action_queue", e.action_queue},
                     {"task", e.task},
                     {"order_index", e.order_index}});
  }
  json header = {{"format", std::string(kGraphFormat)},
                 {"version", kGraphSchemaVersion},
                 {"scenario", graph.scenario()},
                 {"platform", std::string(to_string(graph.platform()))},
                 {"embedder_id", graph.embedder_id()},
                 {"embedding_dim", graph.index().dim()},
                 {"embedding_file", any_embedding ? json("sidecar") : json(nullptr)},
                 {"provenance", provenance}};
  return pretty({{"header", header}, {"nodes", nodes}, {"edges", edges}});
}

std::string embeddings_to_bytes(const PageGraph& graph) {
  std::string out(kEmbeddingMagic);
  std::uint32_t count = 0;
  std::size_t dim = 0;
  for (const auto& [id, n] : graph.nodes()) {
    if (n.embedding.empty()) continue;
    ++count;
    dim = n.embedding.size();
  }
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u32(out, count);
  for (const auto& [id, n] : graph.nodes()) {
    for (float f : n.embedding) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

void save_graph(const PageGraph& graph, const fs::path& path, const json& provenance) {
  graph.validate();
  const bool any = std::any_of(graph.nodes().begin(), graph.nodes().end(),
                               [](const auto& kv) { return !kv.second.embedding.empty(); });
  if (any) {
    atomic_write(embedding_path(path), embeddings_to_bytes(graph));
  } else {
    std::error_code ec;
    fs::remove(embedding_path(path), ec);
  }
  atomic_write(path, graph_to_text(graph, provenance));
}

LoadedGraph load_graph_file(const fs::path& path) {
  const std::string source = path.string();
  const json doc = parse_json(read_file(path), source);
  return guarded(source, [&]() -> LoadedGraph {
    const json& header = doc.at("header");
    check_header(header, kGraphFormat, kGraphSchemaVersion, source);
    LoadedGraph out;
    out.provenance = header.value("provenance", json(nullptr));
    PageGraph& g = out.graph;
    g.set_scenario(header.at("scenario").get<std::string>());
    g.set_platform(parse_platform(header.at("platform").get<std::string>()));
    g.set_embedder_id(header.at("embedder_id").get<std::string>());
    const auto dim = header.at("embedding_dim").get<std::size_t>();

    std::vector<std::vector<float>> vectors;
    std::size_t wanted = 0;
    for (const auto& n : doc.at("nodes")) wanted += n.at("has_embedding").get<bool>() ? 1 : 0;
    if (wanted > 0) {
      const auto side = embedding_path(path);
      const std::string bytes = read_file(side);
      const std::size_t head = kEmbeddingMagic.size() + 8;
      if (bytes.size() < head || std::string_view(bytes).substr(0, kEmbeddingMagic.size()) != kEmbeddingMagic) {
        fail(ErrorKind::format, fmt::format("{}: not an embedding sidecar", side.string()));
      }
      const std::uint32_t file_dim = get_u32(bytes, kEmbeddingMagic.size());
      const std::uint32_t count = get_u32(bytes, kEmbeddingMagic.size() + 4);
      if (file_dim != dim || count != wanted || bytes.size() != head + std::size_t{4} * file_dim * count) {
        fail(ErrorKind::format, fmt::format("{}: sidecar holds {} vectors of dimension {}, graph expects {} of {}",
                                            side.string(), count, file_dim, wanted, dim));
      }
      for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<float> v(file_dim);
        for (std::uint32_t k = 0; k < file_dim; ++k) {
          v[k] = std::bit_cast<float>(get_u32(bytes, head + 4 * (std::size_t{i} * file_dim + k)));
        }
        vectors.push_back(std::move(v));
      }
    }

    std::size_t next_vector = 0;
    std::set<std::string> ids;
    for (const auto& n : doc.at("nodes")) {
      PageNode node;
      node.node_id = n.at("node_id").get<std::string>();
      node.summary = n.at("summary").get<std::string>();
      node.image_locator = n.at("image_locator").get<std::string>();
      if (n.at("has_embedding").get<bool>()) node.embedding = std::move(vectors[next_vector++]);
      if (node.summary.empty()) fail(ErrorKind::validation, fmt::format("{}: node {} has an empty summary", source, node.node_id));
      if (!ids.insert(node.node_id).second) fail(ErrorKind::validation, fmt::format("{}: duplicate node {}", source, node.node_id));
      g.insert_node(std::move(node));
    }
    for (const auto& e : doc.at("edges")) {
      PageEdge edge;
      edge.edge_id = e.at("edge_id").get<std::string>();
      edge.src = e.at("src").get<std::string>();
      edge.dst = e.at("dst").get<std::string>();
      edge.action_queue = string_list(e.at("action_queue"));
      edge.task = e.at("task").get<std::string>();
      edge.order_index = e.at("order_index").get<std::uint64_t>();
      if (!g.find_node(edge.src)) {
        fail(ErrorKind::validation, fmt::format("{}: edge {} references missing src {}", source, edge.edge_id, edge.src));
      }
      if (!g.find_node(edge.dst)) {
        fail(ErrorKind::validation, fmt::format("{}: edge {} references missing dst {}", source, edge.edge_id, edge.dst));
      }
      if (edge.action_queue.empty()) {
        fail(ErrorKind::validation, fmt::format("{}: edge {} has an empty action queue", source, edge.edge_id));
      }
      if (g.find_edge(edge.edge_id)) fail(ErrorKind::validation, fmt::format("{}: duplicate edge {}", source, edge.edge_id));
      g.insert_edge(std::move(edge));
    }
    g.validate();
    return out;
  });
}

PageGraph load_graph(const fs::path& path) { return load_graph_file(path).graph; }

std::string episodes_to_text(const EpisodeFile& file) {
  std::string out = json{{"format", std::string(kEpisodeFormat)},
                         {"version", kEpisodeFormatVersion},
                         {"benchmark", file.benchmark},
                         {"scenario", file.scenario}}
                        .dump();
  out.push_back('\n');
  for (const auto& e : file.episodes) {
    out += to_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

void save_episodes(const EpisodeFile& file, const fs::path& path) {
  for (const auto& e : file.episodes) e.validate();
  atomic_write(path, episodes_to_text(file));
}

EpisodeFile parse_episodes(std::string_view text, std::string_view source) {
  EpisodeFile file;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (const auto& line : text::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    const json j = parse_json(line, where);
    guarded(where, [&] {
      if (!header_seen) {
        check_header(j, kEpisodeFormat, kEpisodeFormatVersion, where);
        file.benchmark = j.at("benchmark").get<std::string>();
        file.scenario = j.at("scenario").get<std::string>();
        header_seen = true;
        return;
      }
      try {
        file.episodes.push_back(episode_from_json(j));
      } catch (const Error& e) {
        fail(e.kind(), fmt::format("{}: {}", where, e.what()));
      }
    });
  }
  if (!header_seen) fail(ErrorKind::format, fmt::format("{}: missing episode file header", source));
  return file;
}

EpisodeFile load_episodes(const fs::path& path) { return parse_episodes(read_file(path), path.string()); }

void save_world(const world::WorldSpec& spec, const fs::path& path) {
  spec.validate();
  atomic_write(path, pretty(to_json(spec)));
}

world::WorldSpec load_world(const fs::path& path) {
  const std::string source = path.string();
  const json j = parse_json(read_file(path), source);
  auto spec = guarded(source, [&] {
    check_header(j, kWorldFormat, world::WorldSpec::kFormatVersion, source);
    return world_from_json(j);
  });
  spec.validate();
  return spec;
}

void save_transcripts(const TranscriptFile& file, const fs::path& path) {
  json ts = json::array();
  for (const auto& t : file.transcripts) ts.push_back(to_json(t));
  atomic_write(path, pretty({{"format", std::string(kTranscriptFormat)},
                             {"version", kTranscriptFormatVersion},
                             {"config", file.config},
                             {"transcripts", ts}}));
}

TranscriptFile load_transcripts(const fs::path& path) {
  const std::string source = path.string();
  const json j = parse_json(read_file(path), source);
  return guarded(source, [&] {
    check_header(j, kTranscriptFormat, kTranscriptFormatVersion, source);
    TranscriptFile f;
    f.config = j.at("config");
    for (const auto& t : j.at("transcripts")) f.transcripts.push_back(transcript_from_json(t));
    return f;
  });
}

std::string predictions_to_text(const PredictionFile& file) {
  std::string out = json{{"format", std::string(kPredictionFormat)},
                         {"version", kPredictionFormatVersion},
                         {"config", file.config}}
                        .dump();
  out.push_back('\n');
  for (const auto& p : file.predictions) {
    out += json{{"episode_id", p.episode_id}, {"step", p.step}, {"action", format_action(p.action)}}.dump();
    out.push_back('\n');
  }
  return out;
}

void save_predictions(const PredictionFile& file, const fs::path& path) { atomic_write(path, predictions_to_text(file)); }

PredictionFile load_predictions(const fs::path& path) {
  const std::string source = path.string();
  PredictionFile file;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (const auto& line : text::split_lines(read_file(path))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    const json j = parse_json(line, where);
    guarded(where, [&] {
      if (!header_seen) {
        check_header(j, kPredictionFormat, kPredictionFormatVersion, where);
        file.config = j.value("config", json(nullptr));
        header_seen = true;
        return;
      }
      try {
        file.predictions.push_back(
            {j.at("episode_id").get<std::string>(), j.at("step").get<std::size_t>(), action_field(j, "action")});
      } catch (const Error& e) {
        fail(ErrorKind::format, fmt::format("{}: {}", where, e.what()));
      }
    });
  }
  if (!header_seen) fail(ErrorKind::format, fmt::format("{}: missing predictions header", source));
  return file;
}

std::vector<StepRecord> load_step_records(const fs::path& path) {
  const std::string source = path.string();
  std::vector<StepRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(read_file(path))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = fmt::format("{}:{}", source, line_no);
    const json j = parse_json(line, where);
    guarded(where, [&] {
      StepRecord r;
      try {
        r.gold = action_field(j, "gold");
        r.predicted = action_field(j, "predicted");
      } catch (const Error& e) {
        fail(ErrorKind::format, fmt::format("{}: {}", where, e.what()));
      }
      r.scenario = j.value("scenario", "");
      r.episode_id = j.value("episode_id", "");
      r.step = j.value("step", std::size_t{0});
      if (j.contains("gold_elements")) r.gold_elements = string_list(j.at("gold_elements"));
      if (j.contains("gold_bbox")) {
        const auto b = j.at("gold_bbox").get<std::vector<double>>();
        if (b.size() != 4) fail(ErrorKind::format, fmt::format("{}: gold_bbox needs four numbers", where));
        r.gold_bbox = Rect{b[0], b[1], b[2], b[3]};
      }
      out.push_back(std::move(r));
    });
  }
  return out;
}

void save_json(const json& j, const fs::path& path) { atomic_write(path, pretty(j)); }

json load_json(const fs::path& path) { return parse_json(read_file(path), path.string()); }

DotOptions::LabelMode parse_label_mode(std::string_view s) {
  if (s == "summary") return DotOptions::LabelMode::summary;
  if (s == "id") return DotOptions::LabelMode::id;
  fail(ErrorKind::invalid_argument, fmt::format("unknown label mode '{}' (summary|id)", s));
}

std::string graph_to_dot(const PageGraph& graph, const DotOptions& options) {
  const bool by_id = options.label_mode == DotOptions::LabelMode::id;
  auto label = [&](std::string_view s) {
    return dot_escape(options.max_label_chars > 0 ? text::truncate(s, options.max_label_chars) : std::string(s));
  };
  std::string out = "digraph page_graph {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& [id, n] : graph.nodes()) {
    out += fmt::format("  \"{}\" [label=\"{}\"];\n", dot_escape(id), by_id ? dot_escape(id) : label(n.summary));
  }
  std::vector<const PageEdge*> edges;
  for (const auto& [id, e] : graph.edges()) edges.push_back(&e);
  std::stable_sort(edges.begin(), edges.end(),
                   [](const PageEdge* a, const PageEdge* b) { return a->order_index < b->order_index; });
  for (const PageEdge* e : edges) {
    out += fmt::format("  \"{}\" -> \"{}\" [label=\"{}\"];\n", dot_escape(e->src), dot_escape(e->dst),
                       by_id ? dot_escape(e->edge_id) : label(e->task));
  }
  out += "}\n";
  return out;
}

void export_dot(const PageGraph& graph, const fs::path& path, const DotOptions& options) {
  atomic_write(path, graph_to_dot(graph, options));
}

// ---------------------------------------------------------------------------------------------
// Benchmark adapters

namespace {

struct RecordError {
  std::string reason;
};

[[noreturn]] void reject(std::string reason) { throw RecordError{std::move(reason)}; }

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    reject(fmt::format("missing '{}'", key));
  }
  return j.at(key).get<std::string>();
}

ScreenRef screen_at(const json& step, const char* key, std::size_t index, const std::string& scenario) {
  if (!step.contains(key) || !step.at(key).is_string() || step.at(key).get<std::string>().empty()) {
    reject(fmt::format("step {} has no screenshot", index + 1));
  }
  ScreenRef s;
  s.locator = step.at(key).get<std::string>();
  s.scenario = scenario;
  return s;
}

std::pair<double, double> yx(const json& step, const char* key, std::size_t index) {
  if (!step.contains(key) || !step.at(key).is_array() || step.at(key).size() != 2) {
    reject(fmt::format("step {} lacks a {} pair", index + 1, key));
  }
  return {step.at(key).at(0).get<double>(), step.at(key).at(1).get<double>()};
}

SwipeDirection direction_of(double dx, double dy) {
  if (std::abs(dy) >= std::abs(dx)) return dy < 0 ? SwipeDirection::up : SwipeDirection::down;
  return dx < 0 ? SwipeDirection::left : SwipeDirection::right;
}

Action checked(Action a, std::size_t index) {
  try {
    validate_action(a);
  } catch (const Error& e) {
    reject(fmt::format("step {}: {}", index + 1, e.what()));
  }
  return a;
}

Episode adapt_generic(const json& r) {
  try {
    return episode_from_json(r);
  } catch (const Error& e) {
    reject(e.what());
  } catch (const json::exception& e) {
    reject(e.what());
  }
}

// Android-in-the-Wild style: action_type_id 3 type, 4 dual point, 5 back, 6 home, 7 enter,
// 10 complete, 11 impossible; touch/lift points are (y, x) in [0, 1].
Episode adapt_aitw(const json& r) {
  Episode e;
  e.episode_id = required_string(r, "episode_id");
  e.task = required_string(r, "goal_info");
  const std::string scenario = r.value("scenario", "");
  if (!r.contains("steps") || !r.at("steps").is_array() || r.at("steps").empty()) reject("no steps");
  const auto& steps = r.at("steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    ScreenRef screen = screen_at(st, "image_path", i, scenario);
    if (r.contains("width_px") && r.contains("height_px")) {
      screen.width_px = r.at("width_px").get<int>();
      screen.height_px = r.at("height_px").get<int>();
    }
    if (!st.contains("action_type_id")) reject(fmt::format("step {} has no action_type_id", i + 1));
    const int type = st.at("action_type_id").get<int>();
    Action a;
    switch (type) {
      case 3:
        a = act::TypeText{st.value("type_text", "")};
        break;
      case 4: {
        const auto [ty, tx] = yx(st, "touch_yx", i);
        const auto [ly, lx] = yx(st, "lift_yx", i);
        if (std::hypot(lx - tx, ly - ty) <= 0.04) {
          a = act::Tap{tx, ty};
        } else {
          a = act::Swipe{direction_of(lx - tx, ly - ty)};
        }
        break;
      }
      case 5:
        a = act::PressKey{Key::back};
        break;
      case 6:
        a = act::PressKey{Key::home};
        break;
      case 7:
        a = act::PressKey{Key::enter};
        break;
      case 10:
        a = act::StatusComplete{};
        break;
      case 11:
        a = act::StatusImpossible{};
        break;
      default:
        reject(fmt::format("step {} has unsupported action_type_id {}", i + 1, type));
    }
    e.steps.push_back({std::move(screen), checked(std::move(a), i)});
  }
  return e;
}

// Mind2Web style: actions carry {op: CLICK|TYPE|SELECT, value} and positive element candidates.
Episode adapt_mind2web(const json& r) {
  Episode e;
  e.episode_id = required_string(r, "annotation_id");
  e.task = required_string(r, "confirmed_task");
  const std::string scenario = r.value("domain", r.value("website", ""));
  if (!r.contains("actions") || !r.at("actions").is_array() || r.at("actions").empty()) reject("no actions");
  const auto& actions = r.at("actions");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& st = actions[i];
    ScreenRef screen = screen_at(st, "screenshot", i, scenario);
    if (!st.contains("pos_candidates") || !st.at("pos_candidates").is_array() || st.at("pos_candidates").empty()) {
      reject(fmt::format("step {} has no positive element candidate", i + 1));
    }
    const auto& cand = st.at("pos_candidates").at(0);
    const std::string element = cand.value("backend_node_id", "");
    if (element.empty()) reject(fmt::format("step {} candidate has no backend_node_id", i + 1));
    if (!st.contains("operation")) reject(fmt::format("step {} has no operation", i + 1));
    const auto& op = st.at("operation");
    const std::string verb = text::lower(op.value("op", ""));
    const std::string value = op.value("value", "");
    Action a;
    if (verb == "click") {
      act::ClickElement c{element, std::nullopt};
      if (cand.contains("bbox")) {
        const auto b = cand.at("bbox").get<std::vector<double>>();
        if (b.size() == 4) c.bbox = Rect{b[0], b[1], b[2], b[3]};
      }
      a = c;
    } else if (verb == "type") {
      a = act::TypeInElement{element, value};
    } else if (verb == "select") {
      a = act::SelectOption{element, value};
    } else {
      reject(fmt::format("step {} has unsupported operation '{}'", i + 1, op.value("op", "")));
    }
    e.steps.push_back({std::move(screen), checked(std::move(a), i)});
  }
  return e;
}

// GUI-Odyssey style: coordinates on a 0..1000 grid, actions CLICK, LONG_PRESS, SCROLL, TEXT,
// PRESS_BACK, PRESS_HOME, COMPLETE, INCOMPLETE.
Episode adapt_odyssey(const json& r) {
  Episode e;
  e.episode_id = required_string(r, "episode_id");
  e.task = required_string(r, "instruction");
  const std::string scenario = r.value("category", "");
  if (!r.contains("steps") || !r.at("steps").is_array() || r.at("steps").empty()) reject("no steps");
  const auto& steps = r.at("steps");
  auto point = [](const json& p) { return std::pair{p.at(0).get<double>() / 1000.0, p.at(1).get<double>() / 1000.0}; };
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& st = steps[i];
    ScreenRef screen = screen_at(st, "screenshot", i, scenario);
    const std::string verb = st.value("action", "");
    const json info = st.value("info", json(nullptr));
    Action a;
    try {
      if (verb == "CLICK" || verb == "LONG_PRESS") {
        const auto [x, y] = point(info.at(0));
        a = act::Tap{x, y};
      } else if (verb == "SCROLL") {
        if (info.is_string()) {
          auto d = parse_direction(text::lower(info.get<std::string>()));
          if (!d) reject(fmt::format("step {} has an unknown scroll direction", i + 1));
          a = act::Swipe{*d};
        } else {
          const auto [x0, y0] = point(info.at(0));
          const auto [x1, y1] = point(info.at(1));
          a = act::Swipe{direction_of(x1 - x0, y1 - y0)};
        }
      } else if (verb == "TEXT") {
        a = act::TypeText{info.get<std::string>()};
      } else if (verb == "PRESS_BACK") {
        a = act::PressKey{Key::back};
      } else if (verb == "PRESS_HOME") {
        a = act::PressKey{Key::home};
      } else if (verb == "COMPLETE") {
        a = act::StatusComplete{};
      } else if (verb == "INCOMPLETE") {
        a = act::StatusImpossible{};
      } else {
        reject(fmt::format("step {} has unsupported action '{}'", i + 1, verb));
      }
    } catch (const json::exception& ex) {
      reject(fmt::format("step {} has malformed info: {}", i + 1, ex.what()));
    }
    e.steps.push_back({std::move(screen), checked(std::move(a), i)});
  }
  return e;
}

std::string record_id(const json& r) {
  for (const char* key : {"episode_id", "annotation_id", "id"}) {
    if (r.is_object() && r.contains(key) && r.at(key).is_string()) return r.at(key).get<std::string>();
  }
  return {};
}

}  // namespace

ImportResult import_benchmark_text(std::string_view adapter, std::string_view content, std::string_view source) {
  Episode (*map)(const json&) = nullptr;
  if (adapter == "generic") map = adapt_generic;
  if (adapter == "aitw") map = adapt_aitw;
  if (adapter == "mind2web") map = adapt_mind2web;
  if (adapter == "odyssey") map = adapt_odyssey;
  if (!map) fail(ErrorKind::invalid_argument, fmt::format("unknown adapter '{}' (generic|aitw|mind2web|odyssey)", adapter));

  ImportResult result;
  result.file.benchmark = std::string(adapter);

  // Records are either one JSON array or JSON Lines. A malformed line is a rejected record;
  // a malformed array makes the whole source unreadable.
  std::vector<std::pair<std::size_t, std::optional<json>>> records;
  const auto trimmed = text::trim(content);
  if (trimmed.starts_with("[")) {
    const json all = parse_json(content, source);
    std::size_t i = 0;
    for (const auto& r : all) records.emplace_back(++i, r);
  } else {
    std::size_t line_no = 0;
    std::size_t record_no = 0;
    for (const auto& line : text::split_lines(content)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        json j = json::parse(line);
        if (j.is_object() && j.contains("format") && j.contains("version") && !j.contains("steps")) continue;
        records.emplace_back(++record_no, std::move(j));
      } catch (const json::parse_error&) {
        records.emplace_back(++record_no, std::nullopt);
        result.rejects.push_back({record_no, "", fmt::format("line {} is not valid JSON", line_no)});
      }
    }
  }

  std::set<std::string> scenarios;
  std::set<std::string> seen;
  for (const auto& [index, record] : records) {
    if (!record) continue;
    const json& r = *record;
    try {
      if (!r.is_object()) reject("record is not an object");
      Episode e = map(r);
      e.validate();
      if (!seen.insert(e.episode_id).second) reject(fmt::format("duplicate episode id '{}'", e.episode_id));
      scenarios.insert(e.steps.front().screen.scenario);
      result.file.episodes.push_back(std::move(e));
    } catch (const RecordError& err) {
      result.rejects.push_back({index, record_id(r), err.reason});
    } catch (const Error& err) {
      result.rejects.push_back({index, record_id(r), err.what()});
    } catch (const json::exception& err) {
      result.rejects.push_back({index, record_id(r), err.what()});
    }
  }
  std::sort(result.rejects.begin(), result.rejects.end(),
            [](const Reject& a, const Reject& b) { return a.record < b.record; });
  result.file.scenario = scenarios.size() == 1 ? *scenarios.begin() : (scenarios.empty() ? "" : "mixed");
  return result;
}

ImportResult import_benchmark(std::string_view adapter, const fs::path& source) {
  return import_benchmark_text(adapter, read_file(source), source.string());
}

json rejects_to_json(const std::vector<Reject>& rejects) {
  json out = json::array();
  for (const auto& r : rejects) out.push_back({{"record", r.record}, {"id", r.id}, {"reason", r.reason}});
  return out;
}

}  // namespace pgagent::io
