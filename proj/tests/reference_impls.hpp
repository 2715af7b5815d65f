#pragma once

// Independent scalar-loop reimplementations used as oracles. These are
// deliberately naive (plain loops over std::complex) and share no code
// with the library paths they check.

#include <algorithm>
#include <complex>
#include <vector>

#include "rispls/channel.hpp"
#include "rispls/metrics.hpp"

namespace refimpl {

using rispls::ChannelRealization;
using rispls::cplx;
using rispls::CMat;
using rispls::TransmitDesign;

inline std::vector<double> matmul(const std::vector<double>& a,
                                  const std::vector<double>& b, std::size_t m,
                                  std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

inline CMat cmatvec(const CMat& a, const CMat& x, std::size_t m, std::size_t n) {
  CMat y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
  return y;
}

// Effective CSI recomputed from raw blocks: h_b + H^H diag(e^{-j phi}) h_r.
inline CMat effective(const ChannelRealization& ch, const CMat& direct,
                      const CMat& ris_link, const std::vector<double>& phi) {
  CMat out = direct;
  for (std::size_t a = 0; a < ch.n_t; ++a) {
    cplx acc = 0;
    for (std::size_t l = 0; l < ch.l; ++l) {
      cplx shift(std::cos(phi[l]), -std::sin(phi[l]));
      acc += std::conj(ch.H[l * ch.n_t + a]) * shift * ris_link[l];
    }
    out[a] += acc;
  }
  return out;
}

inline double power_gain(const CMat& rx, const cplx* tx, std::size_t n) {
  cplx acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(rx[i]) * tx[i];
  return std::norm(acc);
}

struct Rates {
  std::vector<double> rate;     // K
  std::vector<double> leakage;  // M x K
};

inline Rates rates(const ChannelRealization& ch, const TransmitDesign& d) {
  Rates out;
  std::vector<CMat> h(ch.k), f(ch.m);
  for (std::size_t k = 0; k < ch.k; ++k)
    h[k] = effective(ch, ch.h_b[k], ch.h_r.empty() ? CMat{} : ch.h_r[k], d.phi);
  for (std::size_t m = 0; m < ch.m; ++m)
    f[m] = effective(ch, ch.f_b[m], ch.f_r.empty() ? CMat{} : ch.f_r[m], d.phi);

  out.rate.resize(ch.k);
  for (std::size_t k = 0; k < ch.k; ++k) {
    double sig = power_gain(h[k], d.w.data() + k * ch.n_t, ch.n_t);
    double den = ch.sigma2[k];
    for (std::size_t kk = 0; kk < ch.k; ++kk)
      if (kk != k) den += power_gain(h[k], d.w.data() + kk * ch.n_t, ch.n_t);
    for (std::size_t mm = 0; mm < ch.m; ++mm)
      den += power_gain(h[k], d.z.data() + mm * ch.n_t, ch.n_t);
    out.rate[k] = std::log2(1.0 + sig / den);
  }
  out.leakage.assign(ch.m * ch.k, 0.0);
  for (std::size_t m = 0; m < ch.m; ++m)
    for (std::size_t k = 0; k < ch.k; ++k) {
      double sig = power_gain(f[m], d.w.data() + k * ch.n_t, ch.n_t);
      double den = ch.sigma2_e[m];
      for (std::size_t kk = 0; kk < ch.k; ++kk)
        if (kk != k) den += power_gain(f[m], d.w.data() + kk * ch.n_t, ch.n_t);
      for (std::size_t mm = 0; mm < ch.m; ++mm)
        den += power_gain(f[m], d.z.data() + mm * ch.n_t, ch.n_t);
      out.leakage[m * ch.k + k] = std::log2(1.0 + sig / den);
    }
  return out;
}

inline double see(const ChannelRealization& ch, const TransmitDesign& d, double p_c) {
  Rates r = rates(ch, d);
  double num = 0;
  for (std::size_t k = 0; k < ch.k; ++k) {
    double worst = 0;
    for (std::size_t m = 0; m < ch.m; ++m)
      worst = std::max(worst, r.leakage[m * ch.k + k]);
    num += std::max(0.0, r.rate[k] - worst);
  }
  double power = 0;
  for (const auto& v : d.w) power += std::norm(v);
  for (const auto& v : d.z) power += std::norm(v);
  return num / (power + p_c);
}

inline double training_loss(const ChannelRealization& ch, const TransmitDesign& d,
                            double gamma, double p_c) {
  Rates r = rates(ch, d);
  double num = 0;
  for (std::size_t k = 0; k < ch.k; ++k) {
    double worst = 0;
    for (std::size_t m = 0; m < ch.m; ++m)
      worst = std::max(worst, r.leakage[m * ch.k + k]);
    num += r.rate[k] - gamma * worst;  // soft: no clamp
  }
  double power = 0;
  for (const auto& v : d.w) power += std::norm(v);
  for (const auto& v : d.z) power += std::norm(v);
  return -num / (power + p_c);
}

// --- scalar-loop attention oracle ------------------------------------------

// One attention operator instance on an explicit small graph.
struct AttnOracleInput {
  std::size_t heads, proj, f_in, f_edge;           // D, B
  std::vector<double> w_src, w_nbr, w_edge, attn;  // stacked head-major
  std::vector<std::vector<double>> x;              // node features (all nodes)
  std::vector<std::vector<double>> edge_feat;      // per directed arc
  std::vector<std::pair<int, int>> arcs;           // (src, dst)
  double slope = 0.01;
};

// Appendix-style update for one target node; with_self adds W_S x_i and the
// edge term (edge-based operator); without, plain weighted neighbor sum.
inline std::vector<double> attn_node(const AttnOracleInput& in, int i,
                                     bool edge_based) {
  std::size_t D = in.heads, B = in.proj, F = in.f_in, FE = in.f_edge;
  std::vector<double> out(D * B, 0.0);
  // neighbors of i
  std::vector<int> nbr;
  std::vector<const std::vector<double>*> efeat;
  for (std::size_t e = 0; e < in.arcs.size(); ++e)
    if (in.arcs[e].second == i) {
      nbr.push_back(in.arcs[e].first);
      efeat.push_back(edge_based ? &in.edge_feat[e] : nullptr);
    }
  for (std::size_t d = 0; d < D; ++d) {
    auto proj_vec = [&](const std::vector<double>& w, const std::vector<double>& v,
                        std::size_t fin) {
      std::vector<double> r(B, 0.0);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < fin; ++c)
          r[b] += w[(d * B + b) * fin + c] * v[c];
      return r;
    };
    std::vector<double> ws_xi = proj_vec(in.w_src, in.x[i], F);
    std::vector<double> logits(nbr.size());
    for (std::size_t j = 0; j < nbr.size(); ++j) {
      std::vector<double> u = proj_vec(in.w_nbr, in.x[nbr[j]], F);
      if (edge_based) {
        std::vector<double> we = proj_vec(in.w_edge, *efeat[j], FE);
        for (std::size_t b = 0; b < B; ++b) u[b] += we[b];
      }
      double dot = 0;
      for (std::size_t b = 0; b < B; ++b) {
        double pre = ws_xi[b] + u[b];
        double act = pre > 0 ? pre : in.slope * pre;
        dot += in.attn[d * B + b] * act;
      }
      logits[j] = dot;
    }
    double z = 0;
    std::vector<double> alpha(nbr.size());
    for (std::size_t j = 0; j < nbr.size(); ++j) z += std::exp(logits[j]);
    for (std::size_t j = 0; j < nbr.size(); ++j) alpha[j] = std::exp(logits[j]) / z;

    std::vector<double> agg(B, edge_based ? 0.0 : 0.0);
    for (std::size_t j = 0; j < nbr.size(); ++j) {
      std::vector<double> u = proj_vec(in.w_nbr, in.x[nbr[j]], F);
      if (edge_based) {
        std::vector<double> we = proj_vec(in.w_edge, *efeat[j], FE);
        for (std::size_t b = 0; b < B; ++b) u[b] += we[b];
      }
      for (std::size_t b = 0; b < B; ++b) agg[b] += alpha[j] * u[b];
    }
    if (edge_based)
      for (std::size_t b = 0; b < B; ++b) agg[b] += ws_xi[b];
    for (std::size_t b = 0; b < B; ++b) out[d * B + b] = agg[b];
  }
  return out;
}

}  // namespace refimpl
