#include <doctest.h>

#include "fd_check.hpp"
#include "reference_impls.hpp"
#include "rispls/complex_ops.hpp"
#include "rispls/rng.hpp"

using namespace rispls;

namespace {

ComplexPair random_pair(Shape shape, Rng& rng, bool req = true) {
  std::size_t n = shape_size(shape);
  CMat v(n);
  for (auto& x : v) x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return make_complex(std::move(shape), v, req);
}

}  // namespace

TEST_CASE("abs2 and hermitian_dot basics") {
  ComplexPair z = make_complex({1}, {cplx(3, 4)});
  CHECK(abs2(z)->values[0] == doctest::Approx(25.0));

  // unit vector: <x, x> = 1 + 0j
  CMat unit = {cplx(0.6, 0.0), cplx(0.0, 0.8)};
  ComplexPair x = make_complex({2, 1}, unit);
  ComplexPair d = hermitian_dot(x, x);
  CHECK(d.re->values[0] == doctest::Approx(1.0));
  CHECK(std::fabs(d.im->values[0]) < 1e-12);
}

TEST_CASE("hermitian_dot of a vector with itself is real") {
  Rng rng(17);
  for (int it = 0; it < 50; ++it) {
    ComplexPair a = random_pair({5, 1}, rng, false);
    ComplexPair d = hermitian_dot(a, a);
    CHECK(std::fabs(d.im->values[0]) < 1e-12);
    CHECK(d.re->values[0] >= 0.0);
  }
}

TEST_CASE("abs2 is nonnegative") {
  Rng rng(23);
  ComplexPair a = random_pair({4, 3}, rng, false);
  Tensor t = abs2(a);
  for (double v : t->values) CHECK(v >= 0.0);
}

TEST_CASE("cmatvec matches the scalar complex loop") {
  Rng rng(31);
  for (int it = 0; it < 20; ++it) {
    std::size_t m = 1 + rng.next_u64() % 4, n = 1 + rng.next_u64() % 4;
    ComplexPair a = random_pair({m, n}, rng, false);
    ComplexPair x = random_pair({n, 1}, rng, false);
    CMat av(m * n), xv(n);
    for (std::size_t i = 0; i < m * n; ++i) av[i] = a.at(i);
    for (std::size_t i = 0; i < n; ++i) xv[i] = x.at(i);
    CMat expect = refimpl::cmatvec(av, xv, m, n);
    ComplexPair y = cmatvec(a, x);
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(std::fabs(y.re->values[i] - expect[i].real()) < 1e-12);
      CHECK(std::fabs(y.im->values[i] - expect[i].imag()) < 1e-12);
    }
  }
}

TEST_CASE("hermitian ops conjugate the first argument") {
  // <a, b> with a = j, b = 1 gives conj(j)*1 = -j
  ComplexPair a = make_complex({1}, {cplx(0, 1)});
  ComplexPair b = make_complex({1}, {cplx(1, 0)});
  ComplexPair d = hermitian_dot(a, b);
  CHECK(d.re->values[0] == doctest::Approx(0.0));
  CHECK(d.im->values[0] == doctest::Approx(-1.0));
}

TEST_CASE("complex gradients flow through the pair composition") {
  Rng rng(41);
  ComplexPair a = random_pair({3, 2}, rng);
  ComplexPair x = random_pair({2, 1}, rng);
  auto build = [&] { return sum_all(abs2(cmatvec(a, x))); };
  CHECK(fdcheck::max_rel_err(build, {a.re, a.im, x.re, x.im}) < 1e-4);
}

TEST_CASE("complex block representation round-trips and multiplies") {
  Rng rng(53);
  ComplexPair a = random_pair({3, 2}, rng, false);
  ComplexPair b = random_pair({2, 4}, rng, false);
  Tensor blk = matmul(complex_block(a), complex_block(b));
  ComplexPair ab = from_complex_block(blk, 3, 4);
  ComplexPair direct = cmatmul(a, b);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(ab.re->values[i] == doctest::Approx(direct.re->values[i]));
    CHECK(ab.im->values[i] == doctest::Approx(direct.im->values[i]));
  }
}

TEST_CASE("shape mismatch raises dimension errors") {
  ComplexPair a = make_complex({2, 2});
  ComplexPair x = make_complex({3, 1});
  CHECK_THROWS_AS(cmatvec(a, x), dimension_error);
  CHECK_THROWS_AS(hermitian_dot(a, x), dimension_error);
}
