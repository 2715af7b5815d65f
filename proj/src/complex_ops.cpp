#include "rispls/complex_ops.hpp"

namespace rispls {

ComplexPair make_complex(Shape shape, bool requires_grad) {
  return {make_tensor(shape, requires_grad), make_tensor(shape, requires_grad)};
}

ComplexPair make_complex(Shape shape, const CMat& values, bool requires_grad) {
  std::vector<double> re(values.size()), im(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    re[i] = values[i].real();
    im[i] = values[i].imag();
  }
  return {make_tensor(shape, std::move(re), requires_grad),
          make_tensor(Shape(shape), std::move(im), requires_grad)};
}

void check_pair(const ComplexPair& a) {
  if (a.re->shape != a.im->shape)
    throw dimension_error("complex pair: re " + shape_str(a.re->shape) + " vs im " +
                          shape_str(a.im->shape));
}

ComplexPair cadd(const ComplexPair& a, const ComplexPair& b) {
  return {add(a.re, b.re), add(a.im, b.im)};
}

ComplexPair csub(const ComplexPair& a, const ComplexPair& b) {
  return {sub(a.re, b.re), sub(a.im, b.im)};
}

ComplexPair conj_pair(const ComplexPair& a) { return {a.re, neg(a.im)}; }

ComplexPair cneg(const ComplexPair& a) { return {neg(a.re), neg(a.im)}; }

ComplexPair cmul(const ComplexPair& a, const ComplexPair& b) {
  // (ar + j ai)(br + j bi)
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}

ComplexPair cmatmul(const ComplexPair& a, const ComplexPair& b, bool trans_a,
                    bool conj_a, bool trans_b, bool conj_b) {
  Tensor ar = a.re, ai = a.im, br = b.re, bi = b.im;
  if (conj_a) ai = neg(ai);
  if (conj_b) bi = neg(bi);
  Tensor rr = matmul(ar, br, trans_a, trans_b);
  Tensor ii = matmul(ai, bi, trans_a, trans_b);
  Tensor ri = matmul(ar, bi, trans_a, trans_b);
  Tensor ir = matmul(ai, br, trans_a, trans_b);
  return {sub(rr, ii), add(ri, ir)};
}

ComplexPair cmatvec(const ComplexPair& a, const ComplexPair& x) {
  if (a.cols() != x.rows() || x.cols() != 1)
    throw dimension_error("cmatvec: " + shape_str(a.re->shape) + " times " +
                          shape_str(x.re->shape));
  return cmatmul(a, x);
}

ComplexPair hermitian_dot(const ComplexPair& a, const ComplexPair& b) {
  if (a.re->size() != b.re->size())
    throw dimension_error("hermitian_dot: " + shape_str(a.re->shape) + " vs " +
                          shape_str(b.re->shape));
  ComplexPair prod = cmul(conj_pair(a), b);
  return {sum_all(prod.re), sum_all(prod.im)};
}

Tensor abs2(const ComplexPair& a) {
  return add(mul(a.re, a.re), mul(a.im, a.im));
}

Tensor row_norm2(const ComplexPair& a) { return sum_axis(abs2(a), 1); }

ComplexPair cscale_rows(const ComplexPair& a, const Tensor& s) {
  return {scale_rows(a.re, s), scale_rows(a.im, s)};
}

ComplexPair cgather_rows(const ComplexPair& a, IndexVec idx) {
  return {gather_rows(a.re, idx), gather_rows(a.im, idx)};
}

ComplexPair cconcat(const std::vector<ComplexPair>& parts, int axis) {
  std::vector<Tensor> re, im;
  re.reserve(parts.size());
  im.reserve(parts.size());
  for (const auto& p : parts) {
    re.push_back(p.re);
    im.push_back(p.im);
  }
  return {concat(re, axis), concat(im, axis)};
}

ComplexPair cslice(const ComplexPair& a, std::size_t r0, std::size_t r1,
                   std::size_t c0, std::size_t c1) {
  return {slice(a.re, r0, r1, c0, c1), slice(a.im, r0, r1, c0, c1)};
}

Tensor complex_block(const ComplexPair& a) {
  Tensor top = concat({a.re, neg(a.im)}, 1);
  Tensor bot = concat({a.im, a.re}, 1);
  return concat({top, bot}, 0);
}

ComplexPair from_complex_block(const Tensor& blk, std::size_t m, std::size_t n) {
  if (blk->rows() != 2 * m || blk->cols() != 2 * n)
    throw dimension_error("from_complex_block: " + shape_str(blk->shape));
  return {slice(blk, 0, m, 0, n), slice(blk, m, 2 * m, 0, n)};
}

}  // namespace rispls
