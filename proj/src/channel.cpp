#include "rispls/channel.hpp"

#include <cmath>

namespace rispls {

void ScenarioConfig::validate() const {
  if (n_t < 1 || k < 1 || m < 1)
    throw config_error("scenario: counts must be >= 1");
  if (lu_radius <= 0 || eve_radius <= 0)
    throw config_error("scenario: radii must be positive");
  if (!std::isfinite(p_max_dbm)) throw config_error("scenario: p_max must be finite");
}

CMat steering_vector(std::size_t n, double phi) {
  if (n < 1) throw usage_error("steering_vector: n must be >= 1");
  CMat a(n);
  double s = std::sin(phi);
  for (std::size_t i = 0; i < n; ++i) {
    double arg = -kPi * static_cast<double>(i) * s;  // 2pi/lambda * i * lambda/2
    a[i] = {std::cos(arg), std::sin(arg)};
  }
  return a;
}

double amplitude_gain(const ScenarioConfig& cfg, double d) {
  return std::sqrt(cfg.rho_linear() * std::pow(d, -cfg.alpha));
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

Vec2 disk_point(Vec2 center, double radius, Rng& rng) {
  double r = radius * std::sqrt(rng.uniform());
  double th = kTwoPi * rng.uniform();
  return {center.x + r * std::cos(th), center.y + r * std::sin(th)};
}

cplx circular_gaussian(Rng& rng) {
  double re = rng.normal();
  double im = rng.normal();
  return {re * kInvSqrt2, im * kInvSqrt2};
}

// Rician mixing factors; an infinite beta collapses to the pure LoS limit.
void rician_factors(double beta, double& los, double& nlos) {
  if (std::isinf(beta)) {
    los = 1.0;
    nlos = 0.0;
  } else {
    los = std::sqrt(beta / (1.0 + beta));
    nlos = std::sqrt(1.0 / (1.0 + beta));
  }
}

CMat rician_vector(std::size_t n, double gain, double beta, double aod, Rng& rng) {
  double los, nlos;
  rician_factors(beta, los, nlos);
  CMat v = steering_vector(n, aod);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = gain * (los * v[i] + nlos * circular_gaussian(rng));
  return v;
}

}  // namespace

ChannelRealization sample_scenario(const ScenarioConfig& cfg, Rng rng) {
  cfg.validate();
  ChannelRealization ch;
  ch.n_t = cfg.n_t;
  ch.l = cfg.l;
  ch.k = cfg.k;
  ch.m = cfg.m;

  // Disjoint streams per block so e.g. changing K leaves Eve draws intact.
  Rng rng_lu = rng.split(0);
  Rng rng_eve = rng.split(1);
  Rng rng_H = rng.split(2);
  Rng rng_hb = rng.split(3);
  Rng rng_hr = rng.split(4);
  Rng rng_fb = rng.split(5);
  Rng rng_fr = rng.split(6);

  std::vector<Vec2> lu_pos(cfg.k), eve_pos(cfg.m);
  for (auto& p : lu_pos) p = disk_point(cfg.lu_center, cfg.lu_radius, rng_lu);
  for (auto& p : eve_pos) p = disk_point(cfg.eve_center, cfg.eve_radius, rng_eve);

  double beta = cfg.beta_linear();

  // BS-RIS link: Rician with ULA responses on both ends.
  if (cfg.l > 0) {
    double gain = amplitude_gain(cfg, dist(cfg.bs_pos, cfg.ris_pos));
    double los, nlos;
    rician_factors(beta, los, nlos);
    CMat a_rx = steering_vector(cfg.l, bearing(cfg.ris_pos, cfg.bs_pos));
    CMat a_tx = steering_vector(cfg.n_t, bearing(cfg.bs_pos, cfg.ris_pos));
    ch.H.resize(cfg.l * cfg.n_t);
    for (std::size_t i = 0; i < cfg.l; ++i)
      for (std::size_t j = 0; j < cfg.n_t; ++j)
        ch.H[i * cfg.n_t + j] =
            gain * (los * a_rx[i] * std::conj(a_tx[j]) +
                    nlos * circular_gaussian(rng_H));
  }

  ch.h_b.resize(cfg.k);
  ch.h_r.resize(cfg.k);
  ch.sigma2.assign(cfg.k, cfg.noise_watt());
  for (std::size_t k = 0; k < cfg.k; ++k) {
    double g_direct = amplitude_gain(cfg, dist(cfg.bs_pos, lu_pos[k]));
    ch.h_b[k].resize(cfg.n_t);
    for (auto& v : ch.h_b[k]) v = g_direct * circular_gaussian(rng_hb);
    if (cfg.l > 0) {
      double g_ris = amplitude_gain(cfg, dist(cfg.ris_pos, lu_pos[k]));
      ch.h_r[k] = rician_vector(cfg.l, g_ris, beta,
                                bearing(cfg.ris_pos, lu_pos[k]), rng_hr);
    }
  }

  ch.f_b.resize(cfg.m);
  ch.f_r.resize(cfg.m);
  ch.sigma2_e.assign(cfg.m, cfg.eve_noise_watt());
  for (std::size_t m = 0; m < cfg.m; ++m) {
    double g_direct = amplitude_gain(cfg, dist(cfg.bs_pos, eve_pos[m]));
    ch.f_b[m].resize(cfg.n_t);
    for (auto& v : ch.f_b[m]) v = g_direct * circular_gaussian(rng_fb);
    if (cfg.l > 0) {
      double g_ris = amplitude_gain(cfg, dist(cfg.ris_pos, eve_pos[m]));
      ch.f_r[m] = rician_vector(cfg.l, g_ris, beta,
                                bearing(cfg.ris_pos, eve_pos[m]), rng_fr);
    }
  }
  return ch;
}

void effective_csi(const ChannelRealization& ch, std::span<const double> phi,
                   std::vector<CMat>& h_eff, std::vector<CMat>& f_eff) {
  if (phi.size() != ch.l)
    throw dimension_error("effective_csi: phi length " + std::to_string(phi.size()) +
                          " != L " + std::to_string(ch.l));
  CMat shift(ch.l);
  for (std::size_t l = 0; l < ch.l; ++l)
    shift[l] = {std::cos(phi[l]), -std::sin(phi[l])};  // conj(e^{j phi})

  auto cascade = [&](const CMat& r_link, CMat& out) {
    for (std::size_t a = 0; a < ch.n_t; ++a) {
      cplx acc = 0;
      for (std::size_t l = 0; l < ch.l; ++l)
        acc += std::conj(ch.H[l * ch.n_t + a]) * shift[l] * r_link[l];
      out[a] += acc;
    }
  };

  h_eff.assign(ch.k, CMat(ch.n_t));
  for (std::size_t k = 0; k < ch.k; ++k) {
    h_eff[k] = ch.h_b[k];
    if (ch.l > 0) cascade(ch.h_r[k], h_eff[k]);
  }
  f_eff.assign(ch.m, CMat(ch.n_t));
  for (std::size_t m = 0; m < ch.m; ++m) {
    f_eff[m] = ch.f_b[m];
    if (ch.l > 0) cascade(ch.f_r[m], f_eff[m]);
  }
}

ChannelTensors channel_tensors(std::span<const ChannelRealization> batch) {
  if (batch.empty()) throw usage_error("channel_tensors: empty batch");
  std::size_t n_t = batch[0].n_t, l = batch[0].l, k = batch[0].k, m = batch[0].m;
  std::size_t s = batch.size();
  for (const auto& ch : batch)
    if (ch.n_t != n_t || ch.l != l || ch.k != k || ch.m != m)
      throw dimension_error("channel_tensors: mixed dimensions in batch");

  CMat H(s * l * n_t), hb(s * k * n_t), hr(s * k * l), fb(s * m * n_t), fr(s * m * l);
  for (std::size_t i = 0; i < s; ++i) {
    const auto& ch = batch[i];
    std::copy(ch.H.begin(), ch.H.end(), H.begin() + i * l * n_t);
    for (std::size_t kk = 0; kk < k; ++kk) {
      std::copy(ch.h_b[kk].begin(), ch.h_b[kk].end(),
                hb.begin() + (i * k + kk) * n_t);
      if (l > 0)
        std::copy(ch.h_r[kk].begin(), ch.h_r[kk].end(), hr.begin() + (i * k + kk) * l);
    }
    for (std::size_t mm = 0; mm < m; ++mm) {
      std::copy(ch.f_b[mm].begin(), ch.f_b[mm].end(),
                fb.begin() + (i * m + mm) * n_t);
      if (l > 0)
        std::copy(ch.f_r[mm].begin(), ch.f_r[mm].end(), fr.begin() + (i * m + mm) * l);
    }
  }
  ChannelTensors ct;
  ct.H = make_complex({s * l, n_t}, H);
  ct.h_b = make_complex({s * k, n_t}, hb);
  ct.h_r = make_complex({s * k, l}, hr);
  ct.f_b = make_complex({s * m, n_t}, fb);
  ct.f_r = make_complex({s * m, l}, fr);
  return ct;
}

namespace {

ComplexPair ctranspose(const ComplexPair& a) {
  return {transpose(a.re), transpose(a.im)};
}

// diag(c) * A for complex per-row scalars c (length = rows of A).
ComplexPair crow_scale_complex(const ComplexPair& a, const Tensor& c_re,
                               const Tensor& c_im) {
  Tensor re = sub(scale_rows(a.re, c_re), scale_rows(a.im, c_im));
  Tensor im = add(scale_rows(a.re, c_im), scale_rows(a.im, c_re));
  return {re, im};
}

}  // namespace

CsiTensors effective_csi_graph(const ChannelTensors& ct, std::size_t batch,
                               std::size_t n_t, std::size_t l, std::size_t k,
                               std::size_t m, const Tensor& phi) {
  if (phi->size() != batch * l)
    throw dimension_error("effective_csi_graph: phi size " +
                          std::to_string(phi->size()) + " != batch*L");
  if (l == 0) return {ct.h_b, ct.f_b};

  Tensor cphi = cos_op(phi);
  Tensor nsphi = neg(sin_op(phi));  // conj(e^{j phi})

  std::vector<ComplexPair> h_rows, f_rows;
  h_rows.reserve(batch);
  f_rows.reserve(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    Tensor u_re = slice(cphi, s * l, (s + 1) * l, 0, 1);
    Tensor u_im = slice(nsphi, s * l, (s + 1) * l, 0, 1);
    ComplexPair Hs = cslice(ct.H, s * l, (s + 1) * l, 0, n_t);

    auto cascade = [&](const ComplexPair& links) {
      // links: rows x L (row i is the RIS-side vector of receiver i)
      ComplexPair lt = ctranspose(links);                       // L x rows
      ComplexPair shifted = crow_scale_complex(lt, u_re, u_im); // diag(conj u) lt
      ComplexPair casc = cmatmul(Hs, shifted, true, true);      // H^H ... : N_T x rows
      return ctranspose(casc);                                  // rows x N_T
    };

    ComplexPair hb_s = cslice(ct.h_b, s * k, (s + 1) * k, 0, n_t);
    ComplexPair hr_s = cslice(ct.h_r, s * k, (s + 1) * k, 0, l);
    h_rows.push_back(cadd(hb_s, cascade(hr_s)));

    ComplexPair fb_s = cslice(ct.f_b, s * m, (s + 1) * m, 0, n_t);
    ComplexPair fr_s = cslice(ct.f_r, s * m, (s + 1) * m, 0, l);
    f_rows.push_back(cadd(fb_s, cascade(fr_s)));
  }
  if (batch == 1) return {h_rows[0], f_rows[0]};
  return {cconcat(h_rows, 0), cconcat(f_rows, 0)};
}

CsiTensors effective_csi_graph(std::span<const ChannelRealization> batch,
                               const Tensor& phi) {
  ChannelTensors ct = channel_tensors(batch);
  const auto& b0 = batch[0];
  return effective_csi_graph(ct, batch.size(), b0.n_t, b0.l, b0.k, b0.m, phi);
}

}  // namespace rispls
