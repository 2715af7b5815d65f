#pragma once

#include "rispls/channel.hpp"
#include "rispls/metrics.hpp"

namespace testutil {

using namespace rispls;

inline ScenarioConfig desk_config(std::uint64_t seed = 1) {
  ScenarioConfig cfg;
  cfg.n_t = 4;
  cfg.l = 4;
  cfg.k = 2;
  cfg.m = 2;
  cfg.seed = seed;
  return cfg;
}

inline ChannelRealization random_channel(const ScenarioConfig& cfg,
                                         std::uint64_t sample = 0) {
  return sample_scenario(cfg, Rng(cfg.seed).split(sample));
}

// Feasible random design with total power = frac * p_max.
inline TransmitDesign random_design(const ChannelRealization& ch, double p_max,
                                    Rng& rng, double frac = 0.8) {
  TransmitDesign d;
  d.phi.resize(ch.l);
  for (auto& p : d.phi) p = rng.uniform(0.0, kTwoPi);
  d.w.resize(ch.k * ch.n_t);
  d.z.resize(ch.m * ch.n_t);
  double power = 0;
  for (auto& v : d.w) {
    v = {rng.normal(), rng.normal()};
    power += std::norm(v);
  }
  for (auto& v : d.z) {
    v = {rng.normal(), rng.normal()};
    power += std::norm(v);
  }
  double f = std::sqrt(frac * p_max / power);
  for (auto& v : d.w) v *= f;
  for (auto& v : d.z) v *= f;
  return d;
}

inline DesignTensors design_tensors(const TransmitDesign& d, std::size_t n_t,
                                    bool requires_grad = true) {
  DesignTensors dt;
  dt.phi = make_tensor({d.phi.size(), 1}, std::vector<double>(d.phi),
                       requires_grad);
  dt.w = make_complex({d.w.size() / n_t, n_t}, d.w, requires_grad);
  dt.z = make_complex({d.z.size() / n_t, n_t}, d.z, requires_grad);
  return dt;
}

}  // namespace testutil
