#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "rispls/kernels.hpp"
#include "rispls/parallel.hpp"
#include "rispls/rng.hpp"

using namespace rispls;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

}  // namespace

TEST_CASE("gemm backends agree across shapes and transposes") {
  Rng rng(42);
  std::tuple<int, int, int> shapes[] = {{3, 5, 4}, {130, 70, 33}, {1, 17, 9},
                                        {257, 129, 64}};
  for (int trans_a = 0; trans_a < 2; ++trans_a)
    for (int trans_b = 0; trans_b < 2; ++trans_b)
      for (auto [m, n, k] : shapes) {
        std::vector<double> a = random_vec(static_cast<std::size_t>(m) * k, rng);
        std::vector<double> b = random_vec(static_cast<std::size_t>(k) * n, rng);
        std::size_t lda = trans_a ? m : k;
        std::size_t ldb = trans_b ? k : n;
        std::vector<double> c_ref(static_cast<std::size_t>(m) * n, 0.5);
        std::vector<double> c_omp = c_ref, c_blas = c_ref;
        gemm_reference(trans_a, trans_b, m, n, k, 1.3, a.data(), lda, b.data(), ldb,
                       0.7, c_ref.data(), n);
        gemm_omp(trans_a, trans_b, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.7,
                 c_omp.data(), n);
        GemmBackend old = set_gemm_backend(GemmBackend::blas);
        gemm(trans_a, trans_b, m, n, k, 1.3, a.data(), lda, b.data(), ldb, 0.7,
             c_blas.data(), n);
        set_gemm_backend(old);
        double max_omp = 0, max_blas = 0;
        for (std::size_t i = 0; i < c_ref.size(); ++i) {
          max_omp = std::max(max_omp, std::fabs(c_ref[i] - c_omp[i]));
          max_blas = std::max(max_blas, std::fabs(c_ref[i] - c_blas[i]));
        }
        // omp path shares the reference accumulation order exactly
        CHECK(max_omp == 0.0);
        CHECK(max_blas < 1e-10);
      }
}

TEST_CASE("gemm is reproducible run to run") {
  Rng rng(7);
  std::vector<double> a = random_vec(200 * 96, rng);
  std::vector<double> b = random_vec(96 * 150, rng);
  std::vector<double> c1(200 * 150, 0.0), c2(200 * 150, 0.0);
  gemm(false, false, 200, 150, 96, 1.0, a.data(), 96, b.data(), 150, 0.0, c1.data(),
       150);
  gemm(false, false, 200, 150, 96, 1.0, a.data(), 96, b.data(), 150, 0.0, c2.data(),
       150);
  CHECK(c1 == c2);
}

TEST_CASE("force_serial routes to the reference kernel") {
  Rng rng(3);
  std::vector<double> a = random_vec(80 * 80, rng);
  std::vector<double> b = random_vec(80 * 80, rng);
  std::vector<double> c1(80 * 80, 0.0), c2(80 * 80, 0.0);
  gemm_reference(false, false, 80, 80, 80, 1.0, a.data(), 80, b.data(), 80, 0.0,
                 c1.data(), 80);
  bool prev = set_force_serial(true);
  gemm(false, false, 80, 80, 80, 1.0, a.data(), 80, b.data(), 80, 0.0, c2.data(), 80);
  set_force_serial(prev);
  CHECK(c1 == c2);
}
