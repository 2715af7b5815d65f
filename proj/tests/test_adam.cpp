#include <doctest.h>

#include <cmath>

#include "rispls/params.hpp"

using namespace rispls;

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamStore store;
  Rng rng(1);
  Tensor w = store.add_matrix("w", 2, 3, 3, 2, rng);
  std::vector<double> before = w->values;
  AdamState state = AdamState::init(store, {});
  adam_step(store, state);
  CHECK(w->values == before);
  CHECK(state.step_count == 1);
}

TEST_CASE("large constant gradient gives a signed lr-sized step") {
  ParamStore store;
  Tensor w = store.add("w", make_tensor({2}, {0.0, 0.0}, true));
  AdamConfig cfg;
  cfg.lr = 1e-3;
  AdamState state = AdamState::init(store, cfg);
  w->grad[0] = 1e9;
  w->grad[1] = -1e9;
  adam_step(store, state);
  CHECK(w->values[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(w->values[1] == doctest::Approx(1e-3).epsilon(1e-6));
  // grads zeroed afterwards
  CHECK(w->grad[0] == 0.0);
}

TEST_CASE("quadratic bowl converges within 2000 steps") {
  ParamStore store;
  Tensor x = store.add("x", make_tensor({3}, {4.0, -7.0, 2.5}, true));
  const std::vector<double> target = {1.0, -2.0, 0.5};
  AdamConfig cfg;
  cfg.lr = 0.05;
  AdamState state = AdamState::init(store, cfg);
  for (int step = 0; step < 2000; ++step) {
    Tensor diff = sub(x, make_tensor({3}, std::vector<double>(target)));
    backward(sum_all(mul(diff, diff)));
    adam_step(store, state);
  }
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::fabs(x->values[i] - target[i]) < 1e-3);
}

TEST_CASE("NaN gradient raises a training error naming the parameter") {
  ParamStore store;
  Tensor w = store.add("stage1.w1", make_tensor({1}, {0.0}, true));
  AdamState state = AdamState::init(store, {});
  w->grad[0] = std::nan("");
  CHECK_THROWS_WITH_AS(adam_step(store, state), doctest::Contains("stage1.w1"),
                       training_error);
}

TEST_CASE("moment buffers align with parameter lengths") {
  ParamStore store;
  Rng rng(2);
  store.add_matrix("a", 3, 4, 4, 3, rng);
  store.add_matrix("b", 2, 2, 2, 2, rng);
  AdamState state = AdamState::init(store, {});
  REQUIRE(state.first_moment.size() == 2);
  CHECK(state.first_moment[0].size() == 12);
  CHECK(state.second_moment[1].size() == 4);
}

TEST_CASE("duplicate parameter path is rejected") {
  ParamStore store;
  store.add("p", make_tensor({1}, {0.0}, true));
  CHECK_THROWS_AS(store.add("p", make_tensor({1}, {0.0}, true)), usage_error);
  CHECK_THROWS_AS(store.find("missing"), usage_error);
}
