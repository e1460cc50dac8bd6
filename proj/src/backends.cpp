#include "pgagent/backends.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "pgagent/error.hpp"
#include "pgagent/http.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

std::string mime_for(const std::filesystem::path& p) {
  auto ext = text::lower(p.extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/png";
}

std::int64_t default_clock() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      return std::stoll(epoch);
    } catch (...) {
    }
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

ImageMode parse_image_mode(std::string_view s) {
  if (s == "base64") return ImageMode::base64;
  if (s == "url") return ImageMode::url;
  fail(ErrorKind::invalid_argument, "unknown image mode '" + std::string(s) + "' (base64|url)");
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) fail(ErrorKind::invalid_argument, "remote backend needs an endpoint");
  if (config_.model.empty()) fail(ErrorKind::invalid_argument, "remote backend needs a model name");
  http::parse_url(config_.endpoint);
}

nlohmann::json RemoteBackend::build_body(const OracleRequest& request) const {
  nlohmann::json content = nlohmann::json::array();
  for (const auto& part : request.parts) {
    if (part.kind == OraclePart::Kind::text) {
      content.push_back({{"type", "text"}, {"text", part.value}});
      continue;
    }
    std::string url;
    if (config_.image_mode == ImageMode::url) {
      url = part.value;
    } else {
      std::filesystem::path p(part.value);
      if (p.is_relative() && !config_.corpus_root.empty()) p = config_.corpus_root / p;
      std::ifstream in(p, std::ios::binary);
      if (!in) fail(ErrorKind::oracle_unavailable, "cannot resolve image locator " + part.value);
      std::ostringstream buf;
      buf << in.rdbuf();
      url = "data:" + mime_for(p) + ";base64," + base64_encode(buf.str());
    }
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  return {
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
  };
}

std::string RemoteBackend::complete(const OracleRequest& request) {
  const auto body = build_body(request);
  const auto reply =
      http::post_json(config_.endpoint, body, http::api_key_from_env(config_.api_key_env), config_.timeout_seconds);
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string joined;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") joined += part.value("text", "");
    }
    return joined;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::oracle_unavailable, std::string("malformed chat reply: ") + e.what());
  }
}

ReplayMode parse_replay_mode(std::string_view s) {
  if (s == "replay") return ReplayMode::replay;
  if (s == "record") return ReplayMode::record;
  fail(ErrorKind::invalid_argument, "unknown replay mode '" + std::string(s) + "' (replay|record)");
}

ReplayBackend::ReplayBackend(std::filesystem::path cache_file, ReplayMode mode,
                             std::shared_ptr<ModelBackend> inner)
    : path_(std::move(cache_file)), mode_(mode), inner_(std::move(inner)), clock_(default_clock) {
  if (mode_ == ReplayMode::record && !inner_) {
    fail(ErrorKind::invalid_argument, "record mode needs an inner backend");
  }
  load();
}

std::string ReplayBackend::name() const {
  return mode_ == ReplayMode::replay ? "replay" : "record:" + inner_->name();
}

void ReplayBackend::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    if (mode_ == ReplayMode::replay) fail(ErrorKind::io, "replay cache not found: " + path_.string());
    return;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kHeader) {
        fail(ErrorKind::migration,
             fmt::format("{}: unsupported replay cache header '{}', expected '{}'", path_.string(), line, kHeader));
      }
      continue;
    }
    if (text::trim(line).empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      responses_.emplace(rec.at("request_hash").get<std::string>(), rec.at("raw_response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, fmt::format("{}:{}: {}", path_.string(), line_no, e.what()));
    }
  }
}

std::size_t ReplayBackend::size() const {
  std::shared_lock lock(mutex_);
  return responses_.size();
}

std::string ReplayBackend::complete(const OracleRequest& request) {
  const auto hash = request.request_hash();
  {
    std::shared_lock lock(mutex_);
    if (auto it = responses_.find(hash); it != responses_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  if (mode_ == ReplayMode::replay) {
    fail(ErrorKind::oracle_unavailable,
         fmt::format("replay cache miss for {} request {}", to_string(request.role), hash));
  }

  std::string response = inner_->complete(request);

  std::unique_lock lock(mutex_);
  if (auto it = responses_.find(hash); it != responses_.end()) return it->second;
  const bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) fail(ErrorKind::io, "cannot append to replay cache " + path_.string());
  if (fresh) out << kHeader << '\n';
  const nlohmann::json rec = {
      {"request_hash", hash},
      {"role", std::string(to_string(request.role))},
      {"inputs_digest", request.inputs_digest()},
      {"raw_response", response},
      {"timestamp", clock_()},
  };
  out << rec.dump() << '\n';
  out.flush();
  responses_.emplace(hash, response);
  return response;
}

}  // namespace pgagent
