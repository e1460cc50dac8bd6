#include "pgagent/embedding.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/http.hpp"

namespace pgagent {

namespace {

void normalize_in_place(std::vector<float>& v) {
  double norm2 = 0.0;
  for (float x : v) norm2 += static_cast<double>(x) * x;
  if (norm2 == 0.0 || !std::isfinite(norm2)) {
    fail(ErrorKind::invalid_argument, "embedding has zero or non-finite norm");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (float& x : v) x = static_cast<float>(static_cast<double>(x) * inv);
}

}  // namespace

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::invalid_argument, "embedding dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
    na += static_cast<double>(a.values[i]) * a.values[i];
    nb += static_cast<double>(b.values[i]) * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) fail(ErrorKind::invalid_argument, "embedding dimension must be positive");
}

std::string HashingEmbedder::id() const { return fmt::format("hashing-3gram-fnv1a-{}", dim_); }

EmbeddingVector HashingEmbedder::embed(std::string_view input) const {
  if (input.empty()) fail(ErrorKind::precondition, "cannot embed empty text");
  std::string lowered(input);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::vector<float> values(dim_, 0.0f);
  auto add_gram = [&](std::string_view gram) {
    const std::uint32_t h = fnv1a32(gram);
    const std::size_t bucket = h % dim_;
    const bool negative = ((h / dim_) & 1u) != 0;
    values[bucket] += negative ? -1.0f : 1.0f;
  };
  const std::string_view s(lowered);
  if (s.size() < 3) {
    add_gram(s);
  } else {
    for (std::size_t i = 0; i + 3 <= s.size(); ++i) add_gram(s.substr(i, 3));
  }
  normalize_in_place(values);
  return {std::move(values)};
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) fail(ErrorKind::invalid_argument, "remote embedder needs an endpoint");
  if (config_.dim == 0) fail(ErrorKind::invalid_argument, "remote embedder dimension must be positive");
  http::parse_url(config_.endpoint);
}

std::string RemoteEmbedder::id() const { return fmt::format("remote:{}:{}", config_.model, config_.dim); }

EmbeddingVector RemoteEmbedder::embed(std::string_view input) const {
  if (input.empty()) fail(ErrorKind::precondition, "cannot embed empty text");
  const nlohmann::json body = {{"model", config_.model}, {"input", std::string(input)}};
  const auto key = http::api_key_from_env(config_.api_key_env);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    try {
      const auto reply = http::post_json(config_.endpoint, body, key, config_.timeout_seconds);
      const auto& data = reply.at("data").at(0).at("embedding");
      std::vector<float> values;
      values.reserve(data.size());
      for (const auto& x : data) values.push_back(x.get<float>());
      if (values.size() != config_.dim) {
        fail(ErrorKind::oracle_unavailable,
             fmt::format("embedding endpoint returned dimension {}, expected {}", values.size(), config_.dim));
      }
      normalize_in_place(values);
      return {std::move(values)};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::oracle_unavailable && e.kind() != ErrorKind::invalid_argument) throw;
      last_error = e.what();
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed embedding reply: ") + e.what();
    }
  }
  fail(ErrorKind::oracle_unavailable, last_error);
}

}  // namespace pgagent
