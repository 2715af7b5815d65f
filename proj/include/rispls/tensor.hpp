#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rispls/common.hpp"

namespace rispls {

class TensorNode;
using Tensor = std::shared_ptr<TensorNode>;
using Shape = std::vector<std::size_t>;
using IndexVec = std::shared_ptr<const std::vector<std::int64_t>>;

// One node of a reverse-mode computation graph: a real-valued array, its
// gradient, and the rule for pushing the gradient to its parents. Complex
// quantities are built as pairs of these (see complex_ops.hpp).
class TensorNode {
 public:
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated iff requires_grad, same length as values
  bool requires_grad = false;
  std::vector<Tensor> parents;
  std::function<void(TensorNode&)> backward_fn;
  std::string name;
  // Filled by max reductions: flat index of the winning element per output.
  std::vector<std::size_t> argmax;

  std::size_t size() const { return values.size(); }
  // 2-D view: rank-1 tensors behave as a single column.
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const {
    std::size_t c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return c;
  }
  double scalar() const;
  void ensure_grad();
  void zero_grad();
};

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

Tensor make_tensor(Shape shape, bool requires_grad = false);
Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
// Braced value lists would otherwise prefer the bool overload when they
// hold a single 0/1 literal.
inline Tensor make_tensor(Shape shape, std::initializer_list<double> values,
                          bool requires_grad = false) {
  return make_tensor(std::move(shape), std::vector<double>(values), requires_grad);
}
Tensor make_scalar(double v, bool requires_grad = false);

// Disables gradient tracking (and backward-rule capture) while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();

 private:
  bool prev_;
};
bool grad_enabled();

// Reverse topological sweep from a scalar root; each reachable node is
// visited exactly once. Grads accumulate across calls until zeroed.
void backward(const Tensor& root);

// --- structural ops -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);
Tensor transpose(const Tensor& a);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor zero_pad(const Tensor& a, std::size_t target_cols);
Tensor slice(const Tensor& a, std::size_t r0, std::size_t r1, std::size_t c0,
             std::size_t c1);
Tensor reshape(const Tensor& a, Shape shape);
Tensor gather_rows(const Tensor& a, IndexVec idx);

// --- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log2_op(const Tensor& a);
Tensor reciprocal(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor sin_op(const Tensor& a);
Tensor cos_op(const Tensor& a);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// Row/column broadcasts over a 2-D tensor.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
Tensor add_colvec(const Tensor& x, const Tensor& v);
Tensor scale_rows(const Tensor& x, const Tensor& s);

// --- reductions -----------------------------------------------------------

Tensor sum_all(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);
// Hard max along an axis; gradient routes to the argmax element only, ties
// broken toward the lowest index. The winner indices are stored in the
// result's argmax field.
Tensor max_axis(const Tensor& a, int axis);

// --- attention building blocks ---------------------------------------------

// u: E x (D*B), a: D*B attention vectors stacked head-major. Returns E x D
// where out[e,d] = dot(u[e, d*B:(d+1)*B], a[d*B:(d+1)*B]).
Tensor head_dot(const Tensor& u, const Tensor& a, std::size_t heads);
// m: E x (D*B), alpha: E x D. Scales each head chunk of row e by alpha[e,d].
Tensor head_scale(const Tensor& m, const Tensor& alpha);
// Column-wise softmax within contiguous segments of rows. seg must be
// sorted ascending with values in [0, n_segments).
Tensor segment_softmax(const Tensor& logits, IndexVec seg, std::size_t n_segments);
// out[s, :] = sum of rows of x whose segment id is s.
Tensor segment_sum(const Tensor& x, IndexVec seg, std::size_t n_segments);

// --- linear algebra ---------------------------------------------------------

// Inverse of a square matrix via LU with partial pivoting; backward uses
// d(A^-1) = -A^-1 dA A^-1. min_pivot (if non-null) receives the smallest
// absolute pivot for conditioning diagnostics.
Tensor matrix_inverse(const Tensor& a, double* min_pivot = nullptr);

}  // namespace rispls
