#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops. Every kernel has an OpenMP version and a serial reference
// that the tests and bench/ compare against each other.
namespace pgagent::kernels {

/// scores[i] = clamp(sum_j rows[i*dim + j] * query[j], -1, 1), accumulated in double.
void cosine_scores_serial(std::span<const float> rows, std::size_t dim,
                          std::span<const double> unit_query, std::span<double> scores);
void cosine_scores_parallel(std::span<const float> rows, std::size_t dim,
                            std::span<const double> unit_query, std::span<double> scores);

/// Indices of the k best scores, ordered by score descending then index ascending.
std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k);

/// Number of true entries; used for batched metric evaluation.
std::size_t count_true_serial(std::span<const unsigned char> flags);
std::size_t count_true_parallel(std::span<const unsigned char> flags);

double sum_serial(std::span<const double> values);
double sum_parallel(std::span<const double> values);

int max_threads();

}  // namespace pgagent::kernels
