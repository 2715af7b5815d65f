#include "rispls/kernels.hpp"

#include <cblas.h>
#include <omp.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "rispls/parallel.hpp"

extern "C" void openblas_set_num_threads(int);

namespace rispls {

namespace {

std::atomic<bool> g_force_serial{false};
GemmBackend g_backend = GemmBackend::blas;
bool g_init_done = false;

}  // namespace

void init_threading() {
  if (g_init_done) return;
  g_init_done = true;
  if (const char* env = std::getenv("RISPLS_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  // One BLAS thread per call; OpenMP owns all parallelism.
  openblas_set_num_threads(1);
  if (const char* env = std::getenv("RISPLS_GEMM")) {
    std::string s(env);
    if (s == "ref") g_backend = GemmBackend::reference;
    else if (s == "omp") g_backend = GemmBackend::omp;
    else if (s == "blas") g_backend = GemmBackend::blas;
  }
}

int max_threads() { return omp_get_max_threads(); }

bool set_force_serial(bool on) { return g_force_serial.exchange(on); }
bool force_serial() { return g_force_serial.load(); }

GemmBackend gemm_backend() {
  init_threading();
  return g_backend;
}

GemmBackend set_gemm_backend(GemmBackend b) {
  GemmBackend old = g_backend;
  g_backend = b;
  return old;
}

namespace {

inline const double* row_ptr(const double* a, std::size_t lda, std::size_t i) {
  return a + i * lda;
}

// Plain ikj/dot kernels. Accumulation over k runs in index order so the
// result for each element does not depend on blocking or thread count.
void gemm_rows_serial(bool trans_a, bool trans_b, std::size_t r0, std::size_t r1,
                      std::size_t n, std::size_t k, double alpha, const double* a,
                      std::size_t lda, const double* b, std::size_t ldb, double beta,
                      double* c, std::size_t ldc) {
  for (std::size_t i = r0; i < r1; ++i) {
    double* crow = c + i * ldc;
    if (beta == 0.0) {
      std::memset(crow, 0, n * sizeof(double));
    } else if (beta != 1.0) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    if (!trans_b) {
      for (std::size_t p = 0; p < k; ++p) {
        double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        av *= alpha;
        if (av == 0.0) continue;
        const double* brow = row_ptr(b, ldb, p);
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const double* bcol = row_ptr(b, ldb, j);
        double acc = 0.0;
        if (trans_a) {
          for (std::size_t p = 0; p < k; ++p) acc += a[p * lda + i] * bcol[p];
        } else {
          const double* arow = row_ptr(a, lda, i);
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * bcol[p];
        }
        crow[j] += alpha * acc;
      }
    }
  }
}

constexpr std::size_t kRowBlock = 64;

void gemm_blas_block(bool trans_a, bool trans_b, std::size_t r0, std::size_t rows,
                     std::size_t n, std::size_t k, double alpha, const double* a,
                     std::size_t lda, const double* b, std::size_t ldb, double beta,
                     double* c, std::size_t ldc) {
  const double* ablk = trans_a ? a + r0 : a + r0 * lda;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(rows),
              static_cast<int>(n), static_cast<int>(k), alpha, ablk,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c + r0 * ldc,
              static_cast<int>(ldc));
}

}  // namespace

void gemm_reference(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                    std::size_t k, double alpha, const double* a, std::size_t lda,
                    const double* b, std::size_t ldb, double beta, double* c,
                    std::size_t ldc) {
  gemm_rows_serial(trans_a, trans_b, 0, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm_omp(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
              std::size_t k, double alpha, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double beta, double* c,
              std::size_t ldc) {
  std::size_t nblocks = (m + kRowBlock - 1) / kRowBlock;
  if (force_serial() || omp_in_parallel() || nblocks <= 1 || m * n * k < (1u << 16)) {
    gemm_rows_serial(trans_a, trans_b, 0, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(nblocks); ++blk) {
    std::size_t r0 = static_cast<std::size_t>(blk) * kRowBlock;
    std::size_t r1 = r0 + kRowBlock < m ? r0 + kRowBlock : m;
    gemm_rows_serial(trans_a, trans_b, r0, r1, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  }
}

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  init_threading();
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * ldc;
      if (beta == 0.0) std::memset(crow, 0, n * sizeof(double));
      else if (beta != 1.0)
        for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
    return;
  }
  GemmBackend be = force_serial() ? GemmBackend::reference : g_backend;
  switch (be) {
    case GemmBackend::reference:
      gemm_reference(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      return;
    case GemmBackend::omp:
      gemm_omp(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      return;
    case GemmBackend::blas: {
      // Fixed-size row blocks distributed over OpenMP workers: the dgemm
      // call shape per block does not depend on the thread count, so
      // per-element results are reproducible for any RISPLS_THREADS.
      std::size_t nblocks = (m + kRowBlock - 1) / kRowBlock;
      if (omp_in_parallel() || nblocks <= 1 || m * n * k < (1u << 18)) {
        gemm_blas_block(trans_a, trans_b, 0, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        return;
      }
#pragma omp parallel for schedule(dynamic, 1)
      for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(nblocks); ++blk) {
        std::size_t r0 = static_cast<std::size_t>(blk) * kRowBlock;
        std::size_t rows = r0 + kRowBlock < m ? kRowBlock : m - r0;
        gemm_blas_block(trans_a, trans_b, r0, rows, n, k, alpha, a, lda, b, ldb, beta,
                        c, ldc);
      }
      return;
    }
  }
}

}  // namespace rispls
