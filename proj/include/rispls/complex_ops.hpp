#pragma once

#include <complex>
#include <vector>

#include "rispls/tensor.hpp"

namespace rispls {

using cplx = std::complex<double>;
// Row-major complex matrices outside the autodiff graph.
using CMat = std::vector<cplx>;

// Complex tensor as a pair of equally-shaped real tensors. All complex
// arithmetic is composed from real ops, so the autodiff rules stay real.
struct ComplexPair {
  Tensor re;
  Tensor im;

  std::size_t rows() const { return re->rows(); }
  std::size_t cols() const { return re->cols(); }
  cplx at(std::size_t i) const { return {re->values[i], im->values[i]}; }
};

ComplexPair make_complex(Shape shape, bool requires_grad = false);
ComplexPair make_complex(Shape shape, const CMat& values, bool requires_grad = false);
void check_pair(const ComplexPair& a);

ComplexPair cadd(const ComplexPair& a, const ComplexPair& b);
ComplexPair csub(const ComplexPair& a, const ComplexPair& b);
ComplexPair conj_pair(const ComplexPair& a);
ComplexPair cneg(const ComplexPair& a);

// Elementwise product (scalar broadcast follows the real ops).
ComplexPair cmul(const ComplexPair& a, const ComplexPair& b);

// op(A) * op(B) with optional conjugation; conj+trans together give the
// Hermitian transpose.
ComplexPair cmatmul(const ComplexPair& a, const ComplexPair& b, bool trans_a = false,
                    bool conj_a = false, bool trans_b = false, bool conj_b = false);

// A (m x n) times column vector x (n) -> m x 1.
ComplexPair cmatvec(const ComplexPair& a, const ComplexPair& x);

// sum_i conj(a_i) * b_i over all elements -> 1 x 1 complex.
ComplexPair hermitian_dot(const ComplexPair& a, const ComplexPair& b);

// |a|^2 elementwise -> real tensor.
Tensor abs2(const ComplexPair& a);

// Row-wise squared norm of a complex matrix -> (rows x 1).
Tensor row_norm2(const ComplexPair& a);

// Scales row i of a by real s[i].
ComplexPair cscale_rows(const ComplexPair& a, const Tensor& s);

// Gathers rows of both parts.
ComplexPair cgather_rows(const ComplexPair& a, IndexVec idx);

ComplexPair cconcat(const std::vector<ComplexPair>& parts, int axis);
ComplexPair cslice(const ComplexPair& a, std::size_t r0, std::size_t r1,
                   std::size_t c0, std::size_t c1);

// Real 2m x 2n block representation [[Re, -Im], [Im, Re]]; products and
// transposes of these blocks mirror the complex algebra, which is how the
// differentiable complex inverse is built.
Tensor complex_block(const ComplexPair& a);
ComplexPair from_complex_block(const Tensor& blk, std::size_t m, std::size_t n);

}  // namespace rispls
