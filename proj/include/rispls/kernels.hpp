#pragma once

#include <cstddef>

namespace rispls {

enum class GemmBackend { reference, omp, blas };

// Production backend. Defaults to blas; RISPLS_GEMM=ref|omp|blas overrides.
GemmBackend gemm_backend();
GemmBackend set_gemm_backend(GemmBackend b);

// C = alpha * op(A) * op(B) + beta * C, row-major.
// op(A) is m x k, op(B) is k x n. Leading dimensions are those of the
// stored (untransposed) matrices. Every backend computes each C element
// with a fixed accumulation order for a given shape, so results are
// reproducible run-to-run and independent of the worker count.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc);

// Serial reference used by tests and as the comparison baseline in the
// kernel benchmark.
void gemm_reference(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                    std::size_t k, double alpha, const double* a, std::size_t lda,
                    const double* b, std::size_t ldb, double beta, double* c,
                    std::size_t ldc);

// OpenMP-parallel blocked kernel (no BLAS), same accumulation order per
// element as gemm_reference.
void gemm_omp(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
              std::size_t k, double alpha, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double beta, double* c,
              std::size_t ldc);

}  // namespace rispls
