#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rispls/rng.hpp"
#include "rispls/tensor.hpp"

namespace rispls {

// Learnable weights keyed by a stable path name, in insertion order. The
// order fixes Adam's update sequence and the checkpoint layout.
class ParamStore {
 public:
  // Glorot-uniform init over [-sqrt(6/(fan_in+fan_out)), +...].
  Tensor add_matrix(const std::string& path, std::size_t rows, std::size_t cols,
                    std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor add_zeros(const std::string& path, Shape shape);
  Tensor add(const std::string& path, Tensor t);

  const Tensor& find(const std::string& path) const;
  bool contains(const std::string& path) const;

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::size_t total_size() const;
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment buffers aligned with a ParamStore's items.
struct AdamState {
  AdamConfig cfg;
  std::size_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  static AdamState init(const ParamStore& params, AdamConfig cfg);
};

// One Adam update with bias correction; zeroes all grads afterwards.
// Throws training_error naming the parameter if a gradient is NaN.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace rispls
