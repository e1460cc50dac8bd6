#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pgagent/oracle.hpp"

namespace pgagent {

enum class ImageMode { base64, url };
ImageMode parse_image_mode(std::string_view s);

struct RemoteBackendConfig {
  std::string endpoint;  // full chat-completions URL
  std::string model;
  std::string api_key_env = "PGAGENT_API_KEY";
  double timeout_seconds = 60.0;
  ImageMode image_mode = ImageMode::base64;
  std::filesystem::path corpus_root;  // relative locators are resolved against it
  double temperature = 0.0;
  int max_tokens = 1024;
};

/// Chat-completions style HTTP backend. One user message per request: image parts (base64 data
/// URLs or plain locator URLs) followed by the rendered prompt text.
class RemoteBackend final : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config);
  [[nodiscard]] std::string name() const override { return "remote:" + config_.model; }
  std::string complete(const OracleRequest& request) override;

  /// The JSON body that would be sent for a request; exposed for tests.
  [[nodiscard]] nlohmann::json build_body(const OracleRequest& request) const;

 private:
  RemoteBackendConfig config_;
};

enum class ReplayMode { replay, record };
ReplayMode parse_replay_mode(std::string_view s);

/// Record/replay cache keyed by request hash. The cache file is append-only: a versioned header
/// line followed by one JSON record per exchange. In replay mode a miss is an
/// oracle-unavailable error and nothing leaves the process; in record mode misses go to the
/// inner backend and are appended. Timestamps come from SOURCE_DATE_EPOCH when set.
class ReplayBackend final : public ModelBackend {
 public:
  static constexpr std::string_view kHeader = "# pgagent-replay-cache v1";

  ReplayBackend(std::filesystem::path cache_file, ReplayMode mode,
                std::shared_ptr<ModelBackend> inner = nullptr);

  [[nodiscard]] std::string name() const override;
  std::string complete(const OracleRequest& request) override;

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::uint64_t hits() const noexcept { return hits_; }
  [[nodiscard]] std::uint64_t misses() const noexcept { return misses_; }

  void set_clock(std::function<std::int64_t()> clock) { clock_ = std::move(clock); }

 private:
  void load();

  std::filesystem::path path_;
  ReplayMode mode_;
  std::shared_ptr<ModelBackend> inner_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> responses_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::function<std::int64_t()> clock_;
};

std::string base64_encode(std::string_view bytes);

}  // namespace pgagent
