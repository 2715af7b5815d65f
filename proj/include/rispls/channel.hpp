#pragma once

#include <span>
#include <vector>

#include "rispls/complex_ops.hpp"
#include "rispls/rng.hpp"

namespace rispls {

struct Vec2 {
  double x = 0, y = 0;
};

inline double dist(Vec2 a, Vec2 b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}
inline double bearing(Vec2 from, Vec2 to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

// Scenario geometry and propagation constants. dB/dBm fields are converted
// once via the *_linear()/*_watt() accessors; all sampling math runs in
// watts and linear gains.
struct ScenarioConfig {
  std::size_t n_t = 4;  // BS antennas
  std::size_t l = 4;    // RIS reflecting elements
  std::size_t k = 2;    // legitimate users
  std::size_t m = 2;    // eavesdroppers
  Vec2 bs_pos{0, 0};
  Vec2 ris_pos{10, 0};
  Vec2 lu_center{50, 50};
  double lu_radius = 10;
  Vec2 eve_center{25, 25};
  double eve_radius = 10;
  double rho_db = -20;          // path loss at 1 m
  double alpha = 2.8;           // fading exponent
  double rician_beta_db = 3;    // Rician factor, both RIS-side links
  double carrier_hz = 1.8e9;
  double noise_dbm = -80;
  double eve_noise_dbm = -80;
  double p_max_dbm = 30;
  double p_c_watt = 0.5;
  std::uint64_t seed = 1;

  double rho_linear() const { return db_to_linear(rho_db); }
  double beta_linear() const { return db_to_linear(rician_beta_db); }
  double noise_watt() const { return dbm_to_watt(noise_dbm); }
  double eve_noise_watt() const { return dbm_to_watt(eve_noise_dbm); }
  double p_max_watt() const { return dbm_to_watt(p_max_dbm); }
  double wavelength() const { return kSpeedOfLight / carrier_hz; }

  void validate() const;
};

// One CSI draw. Matrices are row-major; H is L x N_T, per-LU/Eve direct
// links are length N_T, RIS-side links length L.
struct ChannelRealization {
  std::size_t n_t = 0, l = 0, k = 0, m = 0;
  CMat H;
  std::vector<CMat> h_b;  // K entries of length N_T
  std::vector<CMat> h_r;  // K entries of length L
  std::vector<CMat> f_b;  // M entries of length N_T
  std::vector<CMat> f_r;  // M entries of length L
  std::vector<double> sigma2;    // per LU, watts
  std::vector<double> sigma2_e;  // per Eve, watts
};

// ULA response a_n(phi): entry i = exp(-j*pi*i*sin(phi)) for half-wavelength
// spacing.
CMat steering_vector(std::size_t n, double phi);

// Amplitude path gain sqrt(rho * d^-alpha).
double amplitude_gain(const ScenarioConfig& cfg, double d);

ChannelRealization sample_scenario(const ScenarioConfig& cfg, Rng rng);

// Plain effective CSI: h_eff_k = h_b_k + H^H diag(e^{j phi})^H h_r_k.
void effective_csi(const ChannelRealization& ch, std::span<const double> phi,
                   std::vector<CMat>& h_eff, std::vector<CMat>& f_eff);

// Differentiable effective CSI for a batch with shared dims. phi is a
// (batch*L) x 1 tensor; outputs stack per-sample rows: h is (batch*K) x N_T,
// f is (batch*M) x N_T.
struct CsiTensors {
  ComplexPair h;
  ComplexPair f;
};
CsiTensors effective_csi_graph(std::span<const ChannelRealization> batch,
                               const Tensor& phi);

// Raw CSI blocks of a batch as constant tensors (reused by graph builders).
struct ChannelTensors {
  ComplexPair H;    // (batch*L) x N_T
  ComplexPair h_b;  // (batch*K) x N_T
  ComplexPair h_r;  // (batch*K) x L  (row k holds h_r_k^T)
  ComplexPair f_b;  // (batch*M) x N_T
  ComplexPair f_r;  // (batch*M) x L
};
ChannelTensors channel_tensors(std::span<const ChannelRealization> batch);

CsiTensors effective_csi_graph(const ChannelTensors& ct, std::size_t batch,
                               std::size_t n_t, std::size_t l, std::size_t k,
                               std::size_t m, const Tensor& phi);

}  // namespace rispls
