#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pgagent {

struct EmbeddingVector {
  std::vector<float> values;
  [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Text embedding backend. Implementations are deterministic and thread-safe.
class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Identifier stored in graph files so retrieval can refuse a mismatched backend.
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual std::size_t dim() const = 0;
  /// L2-normalized embedding. Empty text is a precondition violation.
  [[nodiscard]] virtual EmbeddingVector embed(std::string_view text) const = 0;
};

std::uint32_t fnv1a32(std::string_view bytes);

/// Offline reference embedder: lower-cased byte 3-grams, FNV-1a 32-bit hash, bucket = hash mod
/// dim, sign taken from the parity of hash / dim. Texts shorter than three bytes form one gram.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 256);
  [[nodiscard]] std::string id() const override;
  [[nodiscard]] std::size_t dim() const override { return dim_; }
  [[nodiscard]] EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

struct RemoteEmbedderConfig {
  std::string endpoint;  // full URL of an embeddings endpoint
  std::string model;
  std::string api_key_env = "PGAGENT_API_KEY";
  double timeout_seconds = 30.0;
  int retries = 2;
  std::size_t dim = 1024;
};

/// Calls an OpenAI-style `/embeddings` endpoint: {"model", "input"} -> data[0].embedding.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  [[nodiscard]] std::string id() const override;
  [[nodiscard]] std::size_t dim() const override { return config_.dim; }
  [[nodiscard]] EmbeddingVector embed(std::string_view text) const override;

 private:
  RemoteEmbedderConfig config_;
};

}  // namespace pgagent
