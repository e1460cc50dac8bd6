#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pgagent {

struct ScoredId {
  std::string id;
  double score = 0.0;
  bool operator==(const ScoredId&) const = default;
};

/// Exact cosine-similarity index. Vectors are L2-normalized on insertion and stored as
/// 32-bit floats; search is brute force over all entries.
class VectorIndex {
 public:
  VectorIndex() = default;
  explicit VectorIndex(std::size_t dim) : dim_(dim) {}

  /// Dimension, 0 until fixed by the constructor or the first add().
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
  [[nodiscard]] bool empty() const noexcept { return ids_.empty(); }

  /// Rejects zero or non-finite vectors, dimension mismatches and duplicate ids.
  void add(std::string id, std::span<const float> values);

  /// Replaces the vector of an existing id, keeping its insertion position.
  void replace(const std::string& id, std::span<const float> values);

  [[nodiscard]] const std::string& id_at(std::size_t i) const { return ids_.at(i); }
  [[nodiscard]] std::span<const float> vector_at(std::size_t i) const;
  [[nodiscard]] std::optional<std::size_t> find(const std::string& id) const;
  [[nodiscard]] std::span<const float> raw() const noexcept { return data_; }

  /// min(k, size()) entries ordered by cosine descending, ties by insertion order.
  /// Throws Error(invalid_query) on a dimension mismatch or a zero query.
  [[nodiscard]] std::vector<ScoredId> top_k(std::span<const float> query, std::size_t k) const;

  /// Same contract, computed with the serial kernels.
  [[nodiscard]] std::vector<ScoredId> top_k_serial(std::span<const float> query,
                                                   std::size_t k) const;

  bool operator==(const VectorIndex& other) const {
    return dim_ == other.dim_ && ids_ == other.ids_ && data_ == other.data_;
  }

 private:
  std::vector<double> unit_query(std::span<const float> query) const;
  std::vector<float> normalized(std::span<const float> values) const;

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

}  // namespace pgagent
