#include "pgagent/vector_index.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/kernels.hpp"

namespace pgagent {

std::vector<float> VectorIndex::normalized(std::span<const float> values) const {
  if (values.empty()) fail(ErrorKind::invalid_argument, "empty vector");
  if (dim_ != 0 && values.size() != dim_) {
    fail(ErrorKind::invalid_argument,
         fmt::format("vector dimension {} does not match index dimension {}", values.size(), dim_));
  }
  double norm2 = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "non-finite vector entry");
    norm2 += static_cast<double>(v) * v;
  }
  if (norm2 == 0.0) fail(ErrorKind::invalid_argument, "zero vector cannot be indexed");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(values[i]) * inv);
  }
  return out;
}

void VectorIndex::add(std::string id, std::span<const float> values) {
  if (lookup_.contains(id)) fail(ErrorKind::invalid_argument, "duplicate index id '" + id + "'");
  auto unit = normalized(values);
  if (dim_ == 0) dim_ = unit.size();
  lookup_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), unit.begin(), unit.end());
}

void VectorIndex::replace(const std::string& id, std::span<const float> values) {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) fail(ErrorKind::invalid_argument, "unknown index id '" + id + "'");
  auto unit = normalized(values);
  std::copy(unit.begin(), unit.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
}

std::span<const float> VectorIndex::vector_at(std::size_t i) const {
  if (i >= ids_.size()) fail(ErrorKind::invalid_argument, "index entry out of range");
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> VectorIndex::find(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> VectorIndex::unit_query(std::span<const float> query) const {
  if (query.size() != dim_) {
    fail(ErrorKind::invalid_query,
         fmt::format("query dimension {} does not match index dimension {}", query.size(), dim_));
  }
  double norm2 = 0.0;
  for (float v : query) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_query, "non-finite query entry");
    norm2 += static_cast<double>(v) * v;
  }
  if (norm2 == 0.0) fail(ErrorKind::invalid_query, "zero query vector");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> q(query.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<double>(query[i]) * inv;
  return q;
}

std::vector<ScoredId> VectorIndex::top_k(std::span<const float> query, std::size_t k) const {
  if (ids_.empty() || k == 0) return {};
  const auto q = unit_query(query);
  std::vector<double> scores(ids_.size());
  kernels::cosine_scores_parallel(data_, dim_, q, scores);
  std::vector<ScoredId> out;
  for (std::size_t i : kernels::select_top_k(scores, k)) out.push_back({ids_[i], scores[i]});
  return out;
}

std::vector<ScoredId> VectorIndex::top_k_serial(std::span<const float> query, std::size_t k) const {
  if (ids_.empty() || k == 0) return {};
  const auto q = unit_query(query);
  std::vector<double> scores(ids_.size());
  kernels::cosine_scores_serial(data_, dim_, q, scores);
  std::vector<ScoredId> out;
  for (std::size_t i : kernels::select_top_k(scores, k)) out.push_back({ids_[i], scores[i]});
  return out;
}

}  // namespace pgagent
