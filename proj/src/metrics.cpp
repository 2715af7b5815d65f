#include "rispls/metrics.hpp"

#include <cmath>

namespace rispls {

double design_power(const TransmitDesign& d) {
  double p = 0;
  for (const auto& v : d.w) p += std::norm(v);
  for (const auto& v : d.z) p += std::norm(v);
  return p;
}

namespace {

// |a^H b|^2 for length-n rows.
double abs2_hdot(const cplx* a, const cplx* b, std::size_t n) {
  cplx acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += std::conj(a[i]) * b[i];
  return std::norm(acc);
}

double sinr_rate(const cplx* rx, const TransmitDesign& d, std::size_t n_t,
                 std::size_t k_target, std::size_t k_count, std::size_t m_count,
                 double sigma2) {
  double sig = abs2_hdot(rx, d.w.data() + k_target * n_t, n_t);
  double denom = sigma2;
  for (std::size_t kk = 0; kk < k_count; ++kk)
    if (kk != k_target) denom += abs2_hdot(rx, d.w.data() + kk * n_t, n_t);
  for (std::size_t mm = 0; mm < m_count; ++mm)
    denom += abs2_hdot(rx, d.z.data() + mm * n_t, n_t);
  return std::log2(1.0 + sig / denom);
}

}  // namespace

SeeBreakdown see(const ChannelRealization& ch, const TransmitDesign& d, double p_c) {
  std::vector<CMat> h_eff, f_eff;
  effective_csi(ch, d.phi, h_eff, f_eff);

  SeeBreakdown out;
  out.rate.resize(ch.k);
  out.leakage.assign(ch.m * ch.k, 0.0);
  out.secrecy.resize(ch.k);
  for (std::size_t k = 0; k < ch.k; ++k)
    out.rate[k] = sinr_rate(h_eff[k].data(), d, ch.n_t, k, ch.k, ch.m, ch.sigma2[k]);
  for (std::size_t m = 0; m < ch.m; ++m)
    for (std::size_t k = 0; k < ch.k; ++k)
      out.leakage[m * ch.k + k] =
          sinr_rate(f_eff[m].data(), d, ch.n_t, k, ch.k, ch.m, ch.sigma2_e[m]);

  double sum_sec = 0;
  for (std::size_t k = 0; k < ch.k; ++k) {
    double worst = 0;
    for (std::size_t m = 0; m < ch.m; ++m)
      worst = std::max(worst, out.leakage[m * ch.k + k]);
    out.secrecy[k] = std::max(0.0, out.rate[k] - worst);
    sum_sec += out.secrecy[k];
  }
  out.total_power = design_power(d);
  out.see = sum_sec / (out.total_power + p_c);
  return out;
}

double rate_lu(const ChannelRealization& ch, const TransmitDesign& d, std::size_t k) {
  std::vector<CMat> h_eff, f_eff;
  effective_csi(ch, d.phi, h_eff, f_eff);
  return sinr_rate(h_eff[k].data(), d, ch.n_t, k, ch.k, ch.m, ch.sigma2[k]);
}

double rate_eve(const ChannelRealization& ch, const TransmitDesign& d, std::size_t m,
                std::size_t k) {
  std::vector<CMat> h_eff, f_eff;
  effective_csi(ch, d.phi, h_eff, f_eff);
  return sinr_rate(f_eff[m].data(), d, ch.n_t, k, ch.k, ch.m, ch.sigma2_e[m]);
}

namespace {

// |row_i(a)^H row_j(b)|^2 for index pairs -> (pairs) x 1 tensor.
Tensor pair_abs2(const ComplexPair& a, const ComplexPair& b, IndexVec ia, IndexVec ib) {
  ComplexPair ag = cgather_rows(a, ia);
  ComplexPair bg = cgather_rows(b, ib);
  ComplexPair prod = cmul(conj_pair(ag), bg);
  Tensor dot_re = sum_axis(prod.re, 1);
  Tensor dot_im = sum_axis(prod.im, 1);
  return add(mul(dot_re, dot_re), mul(dot_im, dot_im));
}

IndexVec make_indices(std::vector<std::int64_t> v) {
  return std::make_shared<const std::vector<std::int64_t>>(std::move(v));
}

}  // namespace

LossTensors training_loss_graph(std::span<const ChannelRealization> batch,
                                const CsiTensors& csi, const DesignTensors& design,
                                double gamma, double p_c) {
  std::size_t s = batch.size();
  std::size_t k = batch[0].k, m = batch[0].m;

  // receiver/transmitter index pairs, receiver-major
  std::vector<std::int64_t> hw_rx, hw_tx, hz_rx, hz_tx, fw_rx, fw_tx, fz_rx, fz_tx;
  for (std::size_t si = 0; si < s; ++si) {
    for (std::size_t kr = 0; kr < k; ++kr) {
      for (std::size_t kt = 0; kt < k; ++kt) {
        hw_rx.push_back(si * k + kr);
        hw_tx.push_back(si * k + kt);
      }
      for (std::size_t mt = 0; mt < m; ++mt) {
        hz_rx.push_back(si * k + kr);
        hz_tx.push_back(si * m + mt);
      }
    }
    for (std::size_t mr = 0; mr < m; ++mr) {
      for (std::size_t kt = 0; kt < k; ++kt) {
        fw_rx.push_back(si * m + mr);
        fw_tx.push_back(si * k + kt);
      }
      for (std::size_t mt = 0; mt < m; ++mt) {
        fz_rx.push_back(si * m + mr);
        fz_tx.push_back(si * m + mt);
      }
    }
  }

  Tensor p_hw = reshape(pair_abs2(csi.h, design.w, make_indices(std::move(hw_rx)),
                                  make_indices(std::move(hw_tx))),
                        {s * k, k});
  Tensor p_hz =
      m > 0 ? reshape(pair_abs2(csi.h, design.z, make_indices(std::move(hz_rx)),
                                make_indices(std::move(hz_tx))),
                      {s * k, m})
            : Tensor{};

  // noise and own-signal mask constants
  std::vector<double> sig_mask(s * k * k, 0.0), noise_lu(s * k);
  for (std::size_t si = 0; si < s; ++si)
    for (std::size_t kk = 0; kk < k; ++kk) {
      sig_mask[(si * k + kk) * k + kk] = 1.0;
      noise_lu[si * k + kk] = batch[si].sigma2[kk];
    }
  Tensor mask = make_tensor({s * k, k}, std::move(sig_mask));
  Tensor noise = make_tensor({s * k, 1}, std::move(noise_lu));

  Tensor signal = sum_axis(mul(p_hw, mask), 1);
  Tensor interf = sub(sum_axis(p_hw, 1), signal);
  Tensor denom = add(interf, noise);
  if (m > 0) denom = add(denom, sum_axis(p_hz, 1));
  Tensor rates = log2_op(add_scalar(mul(signal, reciprocal(denom)), 1.0));

  Tensor leakage;  // (s*k) x m
  if (m > 0) {
    Tensor q_fw = reshape(pair_abs2(csi.f, design.w, make_indices(std::move(fw_rx)),
                                    make_indices(std::move(fw_tx))),
                          {s * m, k});
    Tensor q_fz = reshape(pair_abs2(csi.f, design.z, make_indices(std::move(fz_rx)),
                                    make_indices(std::move(fz_tx))),
                          {s * m, m});
    std::vector<double> noise_eve(s * m);
    for (std::size_t si = 0; si < s; ++si)
      for (std::size_t mm = 0; mm < m; ++mm)
        noise_eve[si * m + mm] = batch[si].sigma2_e[mm];
    Tensor total = add(add(sum_axis(q_fw, 1), sum_axis(q_fz, 1)),
                       make_tensor({s * m, 1}, std::move(noise_eve)));
    // denominator for (m, k): totals minus the intercepted stream itself
    Tensor eve_denom = add_colvec(neg(q_fw), total);
    Tensor leak_mk = log2_op(add_scalar(mul(q_fw, reciprocal(eve_denom)), 1.0));
    // reorder rows from (s,m) x k to (s,k) x m
    std::vector<std::int64_t> perm(s * k * m);
    for (std::size_t si = 0; si < s; ++si)
      for (std::size_t kk = 0; kk < k; ++kk)
        for (std::size_t mm = 0; mm < m; ++mm)
          perm[(si * k + kk) * m + mm] = (si * m + mm) * k + kk;
    leakage = reshape(gather_rows(reshape(leak_mk, {s * m * k, 1}),
                                  make_indices(std::move(perm))),
                      {s * k, m});
  }

  Tensor soft_secrecy = rates;
  if (m > 0 && gamma != 0.0)
    soft_secrecy = sub(rates, mul_scalar(max_axis(leakage, 1), gamma));

  std::vector<std::int64_t> sample_of_lu(s * k), sample_of_eve(s * m);
  for (std::size_t si = 0; si < s; ++si) {
    for (std::size_t kk = 0; kk < k; ++kk) sample_of_lu[si * k + kk] = si;
    for (std::size_t mm = 0; mm < m; ++mm) sample_of_eve[si * m + mm] = si;
  }
  IndexVec seg_lu = make_indices(std::move(sample_of_lu));
  IndexVec seg_eve = make_indices(std::move(sample_of_eve));

  Tensor numerator = segment_sum(soft_secrecy, seg_lu, s);
  Tensor power = segment_sum(row_norm2(design.w), seg_lu, s);
  if (m > 0) power = add(power, segment_sum(row_norm2(design.z), seg_eve, s));
  Tensor loss = neg(mul(numerator, reciprocal(add_scalar(power, p_c))));

  for (std::size_t si = 0; si < s; ++si)
    if (std::isnan(loss->values[si]))
      throw training_error("NaN loss at batch sample " + std::to_string(si));

  LossTensors out;
  out.per_sample = loss;
  out.mean = mul_scalar(sum_all(loss), 1.0 / static_cast<double>(s));
  out.rates = rates;
  out.leakage = leakage;
  return out;
}

Tensor training_loss(const ChannelRealization& ch, const DesignTensors& design,
                     double gamma, double p_c) {
  std::span<const ChannelRealization> batch(&ch, 1);
  CsiTensors csi = effective_csi_graph(batch, design.phi);
  return training_loss_graph(batch, csi, design, gamma, p_c).per_sample;
}

}  // namespace rispls
