#include "rispls/tensor.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "rispls/kernels.hpp"
#include "rispls/parallel.hpp"

namespace rispls {

namespace {

thread_local bool g_grad_enabled = true;

constexpr std::size_t kOmpThreshold = 1 << 15;

// Elementwise loop, OpenMP when large. fn(i) writes element i; per-element
// work is independent so results do not depend on the schedule.
template <typename F>
void for_each(std::size_t n, F&& fn) {
  if (n >= kOmpThreshold && !omp_in_parallel() && !force_serial()) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      fn(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

[[noreturn]] void dim_fail(const std::string& op, const Shape& a, const Shape& b) {
  throw dimension_error(op + ": incompatible shapes " + shape_str(a) + " and " +
                        shape_str(b));
}

}  // namespace

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

double TensorNode::scalar() const {
  if (size() != 1) throw usage_error("scalar() on tensor of shape " + shape_str(shape));
  return values[0];
}

void TensorNode::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void TensorNode::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0);
}

Tensor make_tensor(Shape shape, bool requires_grad) {
  auto t = std::make_shared<TensorNode>();
  t->shape = std::move(shape);
  t->values.assign(shape_size(t->shape), 0.0);
  t->requires_grad = requires_grad && g_grad_enabled;
  if (t->requires_grad) t->ensure_grad();
  return t;
}

Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_size(shape))
    throw dimension_error("make_tensor: " + std::to_string(values.size()) +
                          " values for shape " + shape_str(shape));
  auto t = std::make_shared<TensorNode>();
  t->shape = std::move(shape);
  t->values = std::move(values);
  t->requires_grad = requires_grad && g_grad_enabled;
  if (t->requires_grad) t->ensure_grad();
  return t;
}

Tensor make_scalar(double v, bool requires_grad) {
  return make_tensor({1}, {v}, requires_grad);
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

namespace {

// Creates a result node wired to its parents. The backward rule is only
// attached when some parent needs a gradient and grad mode is on.
Tensor make_node(Shape shape, std::vector<Tensor> parents,
                 std::function<void(TensorNode&)> bw) {
  auto t = std::make_shared<TensorNode>();
  t->shape = std::move(shape);
  t->values.assign(shape_size(t->shape), 0.0);
  bool req = false;
  if (g_grad_enabled)
    for (const auto& p : parents)
      if (p && p->requires_grad) req = true;
  t->requires_grad = req;
  if (req) {
    t->ensure_grad();
    t->parents = std::move(parents);
    t->backward_fn = std::move(bw);
  }
  return t;
}

}  // namespace

void backward(const Tensor& root) {
  if (!root || root->size() != 1)
    throw usage_error("backward: root must be a scalar tensor");
  if (!root->requires_grad) return;

  // Iterative post-order DFS; each node enters the order exactly once.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p && p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Intermediates are scratch for this sweep; only leaves accumulate across
  // repeated calls.
  for (TensorNode* n : order)
    if (n->backward_fn) n->zero_grad();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// --- structural ops ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  std::size_t m = trans_a ? a->cols() : a->rows();
  std::size_t ka = trans_a ? a->rows() : a->cols();
  std::size_t kb = trans_b ? b->cols() : b->rows();
  std::size_t n = trans_b ? b->rows() : b->cols();
  if (ka != kb) dim_fail("matmul", a->shape, b->shape);
  std::size_t lda = a->cols(), ldb = b->cols();

  TensorNode* ap = a.get();
  TensorNode* bp = b.get();
  auto out = make_node({m, n}, {a, b}, [=](TensorNode& self) {
    const double* g = self.grad.data();
    std::size_t k = ka;
    if (ap->requires_grad) {
      double* da = ap->grad.data();
      if (!trans_a) {
        // dA += G * op(B)^T
        if (!trans_b)
          gemm(false, true, m, k, n, 1.0, g, n, bp->values.data(), ldb, 1.0, da, lda);
        else
          gemm(false, false, m, k, n, 1.0, g, n, bp->values.data(), ldb, 1.0, da, lda);
      } else {
        // dA (stored k x m) += op(B) * G^T
        if (!trans_b)
          gemm(false, true, k, m, n, 1.0, bp->values.data(), ldb, g, n, 1.0, da, lda);
        else
          gemm(true, true, k, m, n, 1.0, bp->values.data(), ldb, g, n, 1.0, da, lda);
      }
    }
    if (bp->requires_grad) {
      double* db = bp->grad.data();
      if (!trans_b) {
        // dB += op(A)^T * G
        if (!trans_a)
          gemm(true, false, k, n, m, 1.0, ap->values.data(), lda, g, n, 1.0, db, ldb);
        else
          gemm(false, false, k, n, m, 1.0, ap->values.data(), lda, g, n, 1.0, db, ldb);
      } else {
        // dB (stored n x k) += G^T * op(A)
        if (!trans_a)
          gemm(true, false, n, k, m, 1.0, g, n, ap->values.data(), lda, 1.0, db, ldb);
        else
          gemm(true, true, n, k, m, 1.0, g, n, ap->values.data(), lda, 1.0, db, ldb);
      }
    }
  });
  gemm(trans_a, trans_b, m, n, ka, 1.0, a->values.data(), lda, b->values.data(), ldb,
       0.0, out->values.data(), n);
  return out;
}

Tensor transpose(const Tensor& a) {
  std::size_t r = a->rows(), c = a->cols();
  TensorNode* ap = a.get();
  auto out = make_node({c, r}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < r; ++j) ap->grad[j * c + i] += self.grad[i * r + j];
  });
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->values[j * r + i] = a->values[i * c + j];
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw usage_error("concat: no inputs");
  if (axis != 0 && axis != 1) throw usage_error("concat: axis must be 0 or 1");
  std::size_t rows0 = parts[0]->rows(), cols0 = parts[0]->cols();
  std::size_t rtot = 0, ctot = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p->cols() != cols0) dim_fail("concat", parts[0]->shape, p->shape);
      rtot += p->rows();
    } else {
      if (p->rows() != rows0) dim_fail("concat", parts[0]->shape, p->shape);
      ctot += p->cols();
    }
  }
  Shape oshape = axis == 0 ? Shape{rtot, cols0} : Shape{rows0, ctot};

  std::vector<Tensor> parents(parts.begin(), parts.end());
  auto parts_copy = parts;
  auto out = make_node(oshape, parents, [parts_copy, axis](TensorNode& self) {
    std::size_t ocols = self.cols();
    std::size_t off = 0;
    for (const auto& p : parts_copy) {
      std::size_t pr = p->rows(), pc = p->cols();
      if (p->requires_grad) {
        if (axis == 0) {
          const double* g = self.grad.data() + off * ocols;
          for (std::size_t i = 0; i < pr * pc; ++i) p->grad[i] += g[i];
        } else {
          for (std::size_t i = 0; i < pr; ++i) {
            const double* g = self.grad.data() + i * ocols + off;
            double* d = p->grad.data() + i * pc;
            for (std::size_t j = 0; j < pc; ++j) d[j] += g[j];
          }
        }
      }
      off += axis == 0 ? pr : pc;
    }
  });
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::size_t pr = p->rows(), pc = p->cols();
    if (axis == 0) {
      std::memcpy(out->values.data() + off * cols0, p->values.data(),
                  pr * pc * sizeof(double));
      off += pr;
    } else {
      for (std::size_t i = 0; i < pr; ++i)
        std::memcpy(out->values.data() + i * ctot + off, p->values.data() + i * pc,
                    pc * sizeof(double));
      off += pc;
    }
  }
  return out;
}

Tensor zero_pad(const Tensor& a, std::size_t target_cols) {
  std::size_t r = a->rows(), c = a->cols();
  if (target_cols < c)
    throw dimension_error("zero_pad: target width " + std::to_string(target_cols) +
                          " < current width " + std::to_string(c));
  TensorNode* ap = a.get();
  auto out = make_node({r, target_cols}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < r; ++i) {
      const double* g = self.grad.data() + i * target_cols;
      double* d = ap->grad.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) d[j] += g[j];
    }
  });
  for (std::size_t i = 0; i < r; ++i)
    std::memcpy(out->values.data() + i * target_cols, a->values.data() + i * c,
                c * sizeof(double));
  return out;
}

Tensor slice(const Tensor& a, std::size_t r0, std::size_t r1, std::size_t c0,
             std::size_t c1) {
  std::size_t r = a->rows(), c = a->cols();
  if (r1 > r || c1 > c || r0 > r1 || c0 > c1)
    throw dimension_error("slice: range out of bounds for " + shape_str(a->shape));
  std::size_t or_ = r1 - r0, oc = c1 - c0;
  TensorNode* ap = a.get();
  auto out = make_node({or_, oc}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < or_; ++i) {
      const double* g = self.grad.data() + i * oc;
      double* d = ap->grad.data() + (r0 + i) * c + c0;
      for (std::size_t j = 0; j < oc; ++j) d[j] += g[j];
    }
  });
  for (std::size_t i = 0; i < or_; ++i)
    std::memcpy(out->values.data() + i * oc, a->values.data() + (r0 + i) * c + c0,
                oc * sizeof(double));
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a->size())
    throw dimension_error("reshape: cannot view " + shape_str(a->shape) + " as " +
                          shape_str(shape));
  TensorNode* ap = a.get();
  auto out = make_node(shape, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) ap->grad[i] += self.grad[i];
  });
  out->values = a->values;
  return out;
}

Tensor gather_rows(const Tensor& a, IndexVec idx) {
  std::size_t c = a->cols();
  std::size_t r = a->rows();
  for (auto i : *idx)
    if (i < 0 || static_cast<std::size_t>(i) >= r)
      throw dimension_error("gather_rows: index out of range");
  std::size_t n = idx->size();
  TensorNode* ap = a.get();
  auto out = make_node({n, c}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    // scatter-add; rows may repeat, so this stays serial in row order
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = self.grad.data() + i * c;
      double* d = ap->grad.data() + static_cast<std::size_t>((*idx)[i]) * c;
      for (std::size_t j = 0; j < c; ++j) d[j] += g[j];
    }
  });
  for_each(n, [&](std::size_t i) {
    std::memcpy(out->values.data() + i * c,
                a->values.data() + static_cast<std::size_t>((*idx)[i]) * c,
                c * sizeof(double));
  });
  return out;
}

// --- elementwise ------------------------------------------------------------

namespace {

// Generic unary op: f computes the value, dfdx computes the local
// derivative from (x, y).
Tensor unary_op(const Tensor& a, double (*f)(double), double (*dfdx)(double, double),
                const char* /*name*/) {
  TensorNode* ap = a.get();
  auto out = make_node(a->shape, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for_each(self.size(), [&](std::size_t i) {
      ap->grad[i] += self.grad[i] * dfdx(ap->values[i], self.values[i]);
    });
  });
  for_each(a->size(), [&](std::size_t i) { out->values[i] = f(a->values[i]); });
  return out;
}

enum class BinKind { add, sub, mul };

Tensor binary_op(const Tensor& a, const Tensor& b, BinKind kind) {
  const bool a_scalar = a->size() == 1, b_scalar = b->size() == 1;
  if (!a_scalar && !b_scalar && a->size() != b->size())
    dim_fail("elementwise", a->shape, b->shape);
  const Shape& oshape = a_scalar ? b->shape : a->shape;
  TensorNode* ap = a.get();
  TensorNode* bp = b.get();
  auto out = make_node(oshape, {a, b}, [=](TensorNode& self) {
    std::size_t n = self.size();
    if (ap->requires_grad) {
      if (a_scalar && n > 1) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double g = self.grad[i];
          if (kind == BinKind::mul) g *= bp->values[b_scalar ? 0 : i];
          acc += g;
        }
        ap->grad[0] += acc;
      } else {
        for_each(n, [&](std::size_t i) {
          double g = self.grad[i];
          if (kind == BinKind::mul) g *= bp->values[b_scalar ? 0 : i];
          ap->grad[i] += g;
        });
      }
    }
    if (bp->requires_grad) {
      if (b_scalar && n > 1) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double g = self.grad[i];
          if (kind == BinKind::sub) g = -g;
          if (kind == BinKind::mul) g = self.grad[i] * ap->values[a_scalar ? 0 : i];
          acc += g;
        }
        bp->grad[0] += acc;
      } else {
        for_each(n, [&](std::size_t i) {
          double g = self.grad[i];
          if (kind == BinKind::sub) g = -g;
          if (kind == BinKind::mul) g = self.grad[i] * ap->values[a_scalar ? 0 : i];
          bp->grad[i] += g;
        });
      }
    }
  });
  std::size_t n = out->size();
  for_each(n, [&](std::size_t i) {
    double x = ap->values[a_scalar ? 0 : i];
    double y = bp->values[b_scalar ? 0 : i];
    switch (kind) {
      case BinKind::add: out->values[i] = x + y; break;
      case BinKind::sub: out->values[i] = x - y; break;
      case BinKind::mul: out->values[i] = x * y; break;
    }
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::add); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::mul); }

Tensor neg(const Tensor& a) {
  return unary_op(
      a, [](double x) { return -x; }, [](double, double) { return -1.0; }, "neg");
}

Tensor exp_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; },
      "exp");
}

Tensor log2_op(const Tensor& a) {
  for (double v : a->values)
    if (v <= 0.0) throw domain_error("log2: nonpositive input " + std::to_string(v));
  return unary_op(
      a, [](double x) { return std::log2(x); },
      [](double x, double) { return 1.0 / (x * 0.6931471805599453); }, "log2");
}

Tensor reciprocal(const Tensor& a) {
  for (double v : a->values)
    if (v == 0.0) throw domain_error("reciprocal: zero input");
  return unary_op(
      a, [](double x) { return 1.0 / x; },
      [](double, double y) { return -y * y; }, "reciprocal");
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor leaky_relu(const Tensor& a, double slope) {
  TensorNode* ap = a.get();
  auto out = make_node(a->shape, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for_each(self.size(), [&](std::size_t i) {
      ap->grad[i] += self.grad[i] * (ap->values[i] > 0.0 ? 1.0 : slope);
    });
  });
  for_each(a->size(), [&](std::size_t i) {
    double x = a->values[i];
    out->values[i] = x > 0.0 ? x : slope * x;
  });
  return out;
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor sqrt_op(const Tensor& a) {
  for (double v : a->values)
    if (v < 0.0) throw domain_error("sqrt: negative input");
  // subgradient 0 at x == 0 so ReLU(x) -> sqrt chains stay finite
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; }, "sqrt");
}

Tensor sin_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::sin(x); },
      [](double x, double) { return std::cos(x); }, "sin");
}

Tensor cos_op(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::cos(x); },
      [](double x, double) { return -std::sin(x); }, "cos");
}

Tensor add_scalar(const Tensor& a, double c) {
  TensorNode* ap = a.get();
  auto out = make_node(a->shape, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for_each(self.size(), [&](std::size_t i) { ap->grad[i] += self.grad[i]; });
  });
  for_each(a->size(), [&](std::size_t i) { out->values[i] = a->values[i] + c; });
  return out;
}

Tensor mul_scalar(const Tensor& a, double c) {
  TensorNode* ap = a.get();
  auto out = make_node(a->shape, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for_each(self.size(), [&](std::size_t i) { ap->grad[i] += self.grad[i] * c; });
  });
  for_each(a->size(), [&](std::size_t i) { out->values[i] = a->values[i] * c; });
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  std::size_t r = x->rows(), c = x->cols();
  if (v->size() != c) dim_fail("add_rowvec", x->shape, v->shape);
  TensorNode* xp = x.get();
  TensorNode* vp = v.get();
  auto out = make_node(x->shape, {x, v}, [=](TensorNode& self) {
    if (xp->requires_grad)
      for_each(r * c, [&](std::size_t i) { xp->grad[i] += self.grad[i]; });
    if (vp->requires_grad)
      for (std::size_t i = 0; i < r; ++i) {
        const double* g = self.grad.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) vp->grad[j] += g[j];
      }
  });
  for_each(r, [&](std::size_t i) {
    const double* xr = x->values.data() + i * c;
    double* o = out->values.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) o[j] = xr[j] + v->values[j];
  });
  return out;
}

Tensor add_colvec(const Tensor& x, const Tensor& v) {
  std::size_t r = x->rows(), c = x->cols();
  if (v->size() != r) dim_fail("add_colvec", x->shape, v->shape);
  TensorNode* xp = x.get();
  TensorNode* vp = v.get();
  auto out = make_node(x->shape, {x, v}, [=](TensorNode& self) {
    if (xp->requires_grad)
      for_each(r * c, [&](std::size_t i) { xp->grad[i] += self.grad[i]; });
    if (vp->requires_grad)
      for (std::size_t i = 0; i < r; ++i) {
        const double* g = self.grad.data() + i * c;
        double acc = 0;
        for (std::size_t j = 0; j < c; ++j) acc += g[j];
        vp->grad[i] += acc;
      }
  });
  for_each(r, [&](std::size_t i) {
    const double* xr = x->values.data() + i * c;
    double* o = out->values.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) o[j] = xr[j] + v->values[i];
  });
  return out;
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  std::size_t r = x->rows(), c = x->cols();
  if (s->size() != r) dim_fail("scale_rows", x->shape, s->shape);
  TensorNode* xp = x.get();
  TensorNode* sp = s.get();
  auto out = make_node(x->shape, {x, s}, [=](TensorNode& self) {
    if (xp->requires_grad)
      for_each(r, [&](std::size_t i) {
        const double* g = self.grad.data() + i * c;
        double* d = xp->grad.data() + i * c;
        double sv = sp->values[i];
        for (std::size_t j = 0; j < c; ++j) d[j] += g[j] * sv;
      });
    if (sp->requires_grad)
      for_each(r, [&](std::size_t i) {
        const double* g = self.grad.data() + i * c;
        const double* xv = xp->values.data() + i * c;
        double acc = 0;
        for (std::size_t j = 0; j < c; ++j) acc += g[j] * xv[j];
        sp->grad[i] += acc;
      });
  });
  for_each(r, [&](std::size_t i) {
    const double* xr = x->values.data() + i * c;
    double* o = out->values.data() + i * c;
    double sv = s->values[i];
    for (std::size_t j = 0; j < c; ++j) o[j] = xr[j] * sv;
  });
  return out;
}

// --- reductions ---------------------------------------------------------------

Tensor sum_all(const Tensor& a) {
  TensorNode* ap = a.get();
  auto out = make_node({1}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    double g = self.grad[0];
    for_each(ap->size(), [&](std::size_t i) { ap->grad[i] += g; });
  });
  double acc = 0;
  for (double v : a->values) acc += v;
  out->values[0] = acc;
  return out;
}

Tensor sum_axis(const Tensor& a, int axis) {
  std::size_t r = a->rows(), c = a->cols();
  if (axis != 0 && axis != 1) throw usage_error("sum_axis: axis must be 0 or 1");
  TensorNode* ap = a.get();
  if (axis == 1) {
    auto out = make_node({r, 1}, {a}, [=](TensorNode& self) {
      if (!ap->requires_grad) return;
      for_each(r, [&](std::size_t i) {
        double g = self.grad[i];
        double* d = ap->grad.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) d[j] += g;
      });
    });
    for_each(r, [&](std::size_t i) {
      const double* x = a->values.data() + i * c;
      double acc = 0;
      for (std::size_t j = 0; j < c; ++j) acc += x[j];
      out->values[i] = acc;
    });
    return out;
  }
  auto out = make_node({1, c}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < r; ++i) {
      double* d = ap->grad.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) d[j] += self.grad[j];
    }
  });
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = a->values.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) out->values[j] += x[j];
  }
  return out;
}

Tensor max_axis(const Tensor& a, int axis) {
  std::size_t r = a->rows(), c = a->cols();
  if (axis != 0 && axis != 1) throw usage_error("max_axis: axis must be 0 or 1");
  std::size_t nout = axis == 1 ? r : c;
  std::size_t nred = axis == 1 ? c : r;
  if (nred == 0) throw domain_error("max_axis: empty reduction axis");
  auto am = std::make_shared<std::vector<std::size_t>>(nout);
  TensorNode* ap = a.get();
  auto out = make_node(axis == 1 ? Shape{r, 1} : Shape{1, c}, {a},
                       [=](TensorNode& self) {
                         if (!ap->requires_grad) return;
                         for (std::size_t i = 0; i < nout; ++i)
                           ap->grad[(*am)[i]] += self.grad[i];
                       });
  for (std::size_t i = 0; i < nout; ++i) {
    std::size_t best = axis == 1 ? i * c : i;
    double bv = a->values[best];
    for (std::size_t j = 1; j < nred; ++j) {
      std::size_t idx = axis == 1 ? i * c + j : j * c + i;
      if (a->values[idx] > bv) {  // strict: ties keep the lowest index
        bv = a->values[idx];
        best = idx;
      }
    }
    out->values[i] = bv;
    (*am)[i] = best;
  }
  out->argmax.assign(am->begin(), am->end());
  return out;
}

// --- attention building blocks -------------------------------------------------

Tensor head_dot(const Tensor& u, const Tensor& a, std::size_t heads) {
  std::size_t e = u->rows(), w = u->cols();
  if (heads == 0 || w % heads != 0 || a->size() != w)
    dim_fail("head_dot", u->shape, a->shape);
  std::size_t b = w / heads;
  TensorNode* up = u.get();
  TensorNode* app = a.get();
  auto out = make_node({e, heads}, {u, a}, [=](TensorNode& self) {
    if (up->requires_grad)
      for_each(e, [&](std::size_t i) {
        const double* g = self.grad.data() + i * heads;
        double* d = up->grad.data() + i * w;
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t j = 0; j < b; ++j) d[h * b + j] += g[h] * app->values[h * b + j];
      });
    if (app->requires_grad)
      for (std::size_t i = 0; i < e; ++i) {
        const double* g = self.grad.data() + i * heads;
        const double* uv = up->values.data() + i * w;
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t j = 0; j < b; ++j) app->grad[h * b + j] += g[h] * uv[h * b + j];
      }
  });
  for_each(e, [&](std::size_t i) {
    const double* uv = u->values.data() + i * w;
    double* o = out->values.data() + i * heads;
    for (std::size_t h = 0; h < heads; ++h) {
      double acc = 0;
      const double* av = a->values.data() + h * b;
      const double* uh = uv + h * b;
      for (std::size_t j = 0; j < b; ++j) acc += uh[j] * av[j];
      o[h] = acc;
    }
  });
  return out;
}

Tensor head_scale(const Tensor& m, const Tensor& alpha) {
  std::size_t e = m->rows(), w = m->cols();
  std::size_t heads = alpha->cols();
  if (alpha->rows() != e || heads == 0 || w % heads != 0)
    dim_fail("head_scale", m->shape, alpha->shape);
  std::size_t b = w / heads;
  TensorNode* mp = m.get();
  TensorNode* alp = alpha.get();
  auto out = make_node({e, w}, {m, alpha}, [=](TensorNode& self) {
    if (mp->requires_grad)
      for_each(e, [&](std::size_t i) {
        const double* g = self.grad.data() + i * w;
        const double* av = alp->values.data() + i * heads;
        double* d = mp->grad.data() + i * w;
        for (std::size_t h = 0; h < heads; ++h)
          for (std::size_t j = 0; j < b; ++j) d[h * b + j] += g[h * b + j] * av[h];
      });
    if (alp->requires_grad)
      for_each(e, [&](std::size_t i) {
        const double* g = self.grad.data() + i * w;
        const double* mv = mp->values.data() + i * w;
        double* d = alp->grad.data() + i * heads;
        for (std::size_t h = 0; h < heads; ++h) {
          double acc = 0;
          for (std::size_t j = 0; j < b; ++j) acc += g[h * b + j] * mv[h * b + j];
          d[h] += acc;
        }
      });
  });
  for_each(e, [&](std::size_t i) {
    const double* mv = m->values.data() + i * w;
    const double* av = alpha->values.data() + i * heads;
    double* o = out->values.data() + i * w;
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t j = 0; j < b; ++j) o[h * b + j] = mv[h * b + j] * av[h];
  });
  return out;
}

namespace {

// Segment boundaries for sorted contiguous ids: begin[s] .. begin[s+1].
std::vector<std::size_t> segment_starts(const std::vector<std::int64_t>& seg,
                                        std::size_t n_segments) {
  std::vector<std::size_t> starts(n_segments + 1, 0);
  for (std::size_t i = 1; i < seg.size(); ++i)
    if (seg[i] < seg[i - 1]) throw usage_error("segments must be sorted");
  std::size_t pos = 0;
  for (std::size_t s = 0; s <= n_segments; ++s) {
    while (pos < seg.size() && static_cast<std::size_t>(seg[pos]) < s) ++pos;
    starts[s] = pos;
  }
  return starts;
}

}  // namespace

Tensor segment_softmax(const Tensor& logits, IndexVec seg, std::size_t n_segments) {
  std::size_t e = logits->rows(), d = logits->cols();
  if (seg->size() != e) dim_fail("segment_softmax", logits->shape, {seg->size()});
  auto starts = std::make_shared<std::vector<std::size_t>>(
      segment_starts(*seg, n_segments));
  TensorNode* lp = logits.get();
  auto out = make_node({e, d}, {logits}, [=](TensorNode& self) {
    if (!lp->requires_grad) return;
    for_each(n_segments, [&](std::size_t s) {
      std::size_t b0 = (*starts)[s], b1 = (*starts)[s + 1];
      for (std::size_t h = 0; h < d; ++h) {
        double dot = 0;
        for (std::size_t i = b0; i < b1; ++i)
          dot += self.values[i * d + h] * self.grad[i * d + h];
        for (std::size_t i = b0; i < b1; ++i)
          lp->grad[i * d + h] +=
              self.values[i * d + h] * (self.grad[i * d + h] - dot);
      }
    });
  });
  for_each(n_segments, [&](std::size_t s) {
    std::size_t b0 = (*starts)[s], b1 = (*starts)[s + 1];
    if (b0 == b1) return;
    for (std::size_t h = 0; h < d; ++h) {
      double mx = logits->values[b0 * d + h];
      for (std::size_t i = b0 + 1; i < b1; ++i)
        mx = std::max(mx, logits->values[i * d + h]);
      double z = 0;
      for (std::size_t i = b0; i < b1; ++i) {
        double v = std::exp(logits->values[i * d + h] - mx);
        out->values[i * d + h] = v;
        z += v;
      }
      double inv = 1.0 / z;
      for (std::size_t i = b0; i < b1; ++i) out->values[i * d + h] *= inv;
    }
  });
  return out;
}

Tensor segment_sum(const Tensor& x, IndexVec seg, std::size_t n_segments) {
  std::size_t e = x->rows(), c = x->cols();
  if (seg->size() != e) dim_fail("segment_sum", x->shape, {seg->size()});
  auto starts = std::make_shared<std::vector<std::size_t>>(
      segment_starts(*seg, n_segments));
  TensorNode* xp = x.get();
  auto out = make_node({n_segments, c}, {x}, [=](TensorNode& self) {
    if (!xp->requires_grad) return;
    for_each(n_segments, [&](std::size_t s) {
      const double* g = self.grad.data() + s * c;
      for (std::size_t i = (*starts)[s]; i < (*starts)[s + 1]; ++i) {
        double* d = xp->grad.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) d[j] += g[j];
      }
    });
  });
  for_each(n_segments, [&](std::size_t s) {
    double* o = out->values.data() + s * c;
    for (std::size_t i = (*starts)[s]; i < (*starts)[s + 1]; ++i) {
      const double* xv = x->values.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) o[j] += xv[j];
    }
  });
  return out;
}

// --- linear algebra -------------------------------------------------------------

namespace {

// LU inverse with partial pivoting; returns the minimum absolute pivot.
double lu_inverse(std::size_t n, std::vector<double> a, double* inv) {
  std::vector<std::size_t> piv(n);
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double bv = std::fabs(a[col * n + col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      double v = std::fabs(a[i * n + col]);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    if (bv == 0.0) throw domain_error("matrix_inverse: singular matrix");
    min_pivot = std::min(min_pivot, bv);
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[best * n + j]);
      std::swap(piv[col], piv[best]);
    }
    double d = 1.0 / a[col * n + col];
    for (std::size_t i = col + 1; i < n; ++i) {
      double f = a[i * n + col] * d;
      a[i * n + col] = f;
      for (std::size_t j = col + 1; j < n; ++j) a[i * n + j] -= f * a[col * n + j];
    }
  }
  // solve A X = I column by column
  std::vector<double> x(n);
  for (std::size_t rhs = 0; rhs < n; ++rhs) {
    for (std::size_t i = 0; i < n; ++i) x[i] = piv[i] == rhs ? 1.0 : 0.0;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= a[i * n + j] * x[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) x[i] -= a[i * n + j] * x[j];
      x[i] /= a[i * n + i];
    }
    for (std::size_t i = 0; i < n; ++i) inv[i * n + rhs] = x[i];
  }
  return min_pivot;
}

}  // namespace

Tensor matrix_inverse(const Tensor& a, double* min_pivot) {
  std::size_t n = a->rows();
  if (a->cols() != n) throw dimension_error("matrix_inverse: not square");
  TensorNode* ap = a.get();
  auto out = make_node({n, n}, {a}, [=](TensorNode& self) {
    if (!ap->requires_grad) return;
    // dA = -Ainv^T * G * Ainv^T
    std::vector<double> tmp(n * n);
    gemm(true, false, n, n, n, 1.0, self.values.data(), n, self.grad.data(), n, 0.0,
         tmp.data(), n);
    gemm(false, true, n, n, n, -1.0, tmp.data(), n, self.values.data(), n, 1.0,
         ap->grad.data(), n);
  });
  double mp = lu_inverse(n, a->values, out->values.data());
  if (min_pivot) *min_pivot = mp;
  return out;
}

}  // namespace rispls
