#include "pgagent/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pgagent::kernels {

namespace {

inline double dot_row(const float* row, const double* q, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim; ++j) acc += static_cast<double>(row[j]) * q[j];
  return std::clamp(acc, -1.0, 1.0);
}

}  // namespace

void cosine_scores_serial(std::span<const float> rows, std::size_t dim,
                          std::span<const double> unit_query, std::span<double> scores) {
  assert(unit_query.size() == dim);
  assert(rows.size() == scores.size() * dim);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = dot_row(rows.data() + i * dim, unit_query.data(), dim);
  }
}

void cosine_scores_parallel(std::span<const float> rows, std::size_t dim,
                            std::span<const double> unit_query, std::span<double> scores) {
  assert(unit_query.size() == dim);
  assert(rows.size() == scores.size() * dim);
  const auto n = static_cast<std::ptrdiff_t>(scores.size());
  const float* base = rows.data();
  const double* q = unit_query.data();
  double* out = scores.data();
  // each row is reduced by one thread in index order, so results match the serial kernel bit for bit
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = dot_row(base + static_cast<std::size_t>(i) * dim, q, dim);
  }
}

std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  order.resize(k);
  return order;
}

std::size_t count_true_serial(std::span<const unsigned char> flags) {
  std::size_t n = 0;
  for (auto f : flags) n += f ? 1 : 0;
  return n;
}

std::size_t count_true_parallel(std::span<const unsigned char> flags) {
  long long n = 0;
  const auto size = static_cast<std::ptrdiff_t>(flags.size());
  const unsigned char* data = flags.data();
#pragma omp parallel for reduction(+ : n) if (size > 4096)
  for (std::ptrdiff_t i = 0; i < size; ++i) n += data[i] ? 1 : 0;
  return static_cast<std::size_t>(n);
}

double sum_serial(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double sum_parallel(std::span<const double> values) {
  // fixed-size blocks summed in order keep the result independent of the thread count
  constexpr std::size_t block = 1024;
  const std::size_t blocks = (values.size() + block - 1) / block;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static) if (nb > 4)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block;
    const std::size_t end = std::min(values.size(), begin + block);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i];
    partial[static_cast<std::size_t>(b)] = s;
  }
  return sum_serial(partial);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace pgagent::kernels
