#include "rispls/params.hpp"

#include <cmath>

namespace rispls {

Tensor ParamStore::add_matrix(const std::string& path, std::size_t rows,
                              std::size_t cols, std::size_t fan_in,
                              std::size_t fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  Tensor t = make_tensor({rows, cols}, std::move(v), true);
  return add(path, std::move(t));
}

Tensor ParamStore::add_zeros(const std::string& path, Shape shape) {
  Tensor t = make_tensor(std::move(shape), true);
  return add(path, std::move(t));
}

Tensor ParamStore::add(const std::string& path, Tensor t) {
  if (contains(path)) throw usage_error("duplicate parameter path: " + path);
  t->name = path;
  t->requires_grad = true;
  t->ensure_grad();
  items_.emplace_back(path, t);
  return items_.back().second;
}

const Tensor& ParamStore::find(const std::string& path) const {
  for (const auto& [name, t] : items_)
    if (name == path) return t;
  throw usage_error("unknown parameter path: " + path);
}

bool ParamStore::contains(const std::string& path) const {
  for (const auto& [name, t] : items_)
    if (name == path) return true;
  return false;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t->size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : items_) t->zero_grad();
}

AdamState AdamState::init(const ParamStore& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  for (const auto& [name, t] : params.items()) {
    s.first_moment.emplace_back(t->size(), 0.0);
    s.second_moment.emplace_back(t->size(), 0.0);
  }
  return s;
}

void adam_step(ParamStore& params, AdamState& state) {
  if (state.first_moment.size() != params.items().size())
    throw config_error("adam_step: state does not match parameter store");
  ++state.step_count;
  const auto& cfg = state.cfg;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
  for (std::size_t pi = 0; pi < params.items().size(); ++pi) {
    const auto& [name, t] = params.items()[pi];
    auto& m = state.first_moment[pi];
    auto& v = state.second_moment[pi];
    double* w = t->values.data();
    const double* g = t->grad.data();
    for (std::size_t i = 0; i < t->size(); ++i) {
      if (std::isnan(g[i]))
        throw training_error("NaN gradient in parameter " + name);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
  params.zero_grads();
}

}  // namespace rispls
