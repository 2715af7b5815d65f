#pragma once

#include "rispls/metrics.hpp"

namespace rispls {

// Multi-restart projected gradient ascent settings. Defaults converge on
// (N_T,L,K,M)=(4,4,2,2) instances in well under a second each.
struct OracleConfig {
  int restarts = 8;
  int steps = 1500;
  double step_size = 0.05;
  double decay = 0.5;       // step size multiplier applied every decay_every
  int decay_every = 500;
  double tolerance = 0.0;   // early stop on relative objective change; 0 = off
  std::uint64_t seed = 1;

  void validate() const {
    if (restarts < 1 || steps < 1)
      throw config_error("oracle: restarts and steps must be >= 1");
  }
};

// Projected gradient ascent on the smoothed SEE (gamma = 1, no clamp),
// jointly over {w, z, phi}, projecting onto the power ball and wrapping
// phases each step. Returns the best hard-clamped SEE across restarts and
// its design. Deterministic given (ch, cfg.seed).
std::pair<TransmitDesign, double> gradient_oracle(const ChannelRealization& ch,
                                                  double p_max, double p_c,
                                                  const OracleConfig& cfg);

// Feasible floor baseline: uniform random phases, MRT beams with an equal
// power split, AN on nulling directions when K+1 <= N_T (random unit
// vectors otherwise).
TransmitDesign random_mrt(const ChannelRealization& ch, double p_max, Rng rng);

// Plain (non-differentiable) hybrid-ZF helper: rows of G are taken as
// given; returns V = G^H (G G^H)^-1 column c as a length-n_t vector.
CMat zf_column(const CMat& g_rows, std::size_t rows, std::size_t n_t, std::size_t c);

}  // namespace rispls
