#include <doctest.h>

#include <random>

#include "pgagent/kernels.hpp"

using namespace pgagent;

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels agree with the serial references") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1, 1);
    for (std::size_t rows : {0u, 1u, 7u, 513u, 4096u}) {
      const std::size_t dim = 33;
      std::vector<float> data(rows * dim);
      for (auto& x : data) x = u(rng);
      std::vector<double> q(dim);
      for (auto& x : q) x = u(rng);
      std::vector<double> a(rows), b(rows);
      kernels::cosine_scores_serial(data, dim, q, a);
      kernels::cosine_scores_parallel(data, dim, q, b);
      CHECK(a == b);
    }
    std::vector<unsigned char> flags(100001);
    for (auto& f : flags) f = rng() % 3 == 0;
    CHECK(kernels::count_true_serial(flags) == kernels::count_true_parallel(flags));
    std::vector<double> vals(100001);
    for (auto& v : vals) v = u(rng);
    CHECK(kernels::sum_serial(vals) == doctest::Approx(kernels::sum_parallel(vals)).epsilon(1e-12));
    CHECK(kernels::max_threads() >= 1);
  }

  TEST_CASE("scores are clamped to the cosine range") {
    const std::vector<float> row = {1.0000001f};
    const std::vector<double> q = {1.0};
    std::vector<double> s(1);
    kernels::cosine_scores_serial(row, 1, q, s);
    CHECK(s[0] == 1.0);
  }

  TEST_CASE("top-k selection breaks ties by index") {
    const std::vector<double> scores = {0.5, 0.9, 0.5, 0.9, 0.1};
    CHECK(kernels::select_top_k(scores, 3) == std::vector<std::size_t>{1, 3, 0});
    CHECK(kernels::select_top_k(scores, 10).size() == 5);
    CHECK(kernels::select_top_k(scores, 0).empty());
  }
}
