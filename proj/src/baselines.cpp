#include "rispls/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace rispls {

CMat zf_column(const CMat& g_rows, std::size_t rows, std::size_t n_t, std::size_t c) {
  // gram = G G^H (rows x rows)
  CMat gram(rows * rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < rows; ++j) {
      cplx acc = 0;
      for (std::size_t t = 0; t < n_t; ++t)
        acc += g_rows[i * n_t + t] * std::conj(g_rows[j * n_t + t]);
      gram[i * rows + j] = acc;
    }
  // solve gram * x = e_c by Gaussian elimination with partial pivoting
  CMat a = gram;
  CMat x(rows, 0.0);
  x[c] = 1.0;
  std::vector<std::size_t> perm(rows);
  for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
  for (std::size_t col = 0; col < rows; ++col) {
    std::size_t best = col;
    for (std::size_t i = col + 1; i < rows; ++i)
      if (std::abs(a[i * rows + col]) > std::abs(a[best * rows + col])) best = i;
    if (std::abs(a[best * rows + col]) == 0.0)
      throw domain_error("zf_column: singular Gram matrix");
    if (best != col) {
      for (std::size_t j = 0; j < rows; ++j) std::swap(a[col * rows + j], a[best * rows + j]);
      std::swap(x[col], x[best]);
    }
    for (std::size_t i = col + 1; i < rows; ++i) {
      cplx f = a[i * rows + col] / a[col * rows + col];
      for (std::size_t j = col; j < rows; ++j) a[i * rows + j] -= f * a[col * rows + j];
      x[i] -= f * x[col];
    }
  }
  for (std::size_t i = rows; i-- > 0;) {
    for (std::size_t j = i + 1; j < rows; ++j) x[i] -= a[i * rows + j] * x[j];
    x[i] /= a[i * rows + i];
  }
  // v = G^H x
  CMat v(n_t, 0.0);
  for (std::size_t t = 0; t < n_t; ++t) {
    cplx acc = 0;
    for (std::size_t i = 0; i < rows; ++i) acc += std::conj(g_rows[i * n_t + t]) * x[i];
    v[t] = acc;
  }
  return v;
}

namespace {

double vec_norm(const CMat& v) {
  double n = 0;
  for (const auto& c : v) n += std::norm(c);
  return std::sqrt(n);
}

void scale_design(TransmitDesign& d, double f) {
  for (auto& v : d.w) v *= f;
  for (auto& v : d.z) v *= f;
}

void wrap_phases(std::vector<double>& phi) {
  for (auto& p : phi) {
    p = std::fmod(p, kTwoPi);
    if (p < 0) p += kTwoPi;
  }
}

}  // namespace

TransmitDesign random_mrt(const ChannelRealization& ch, double p_max, Rng rng) {
  TransmitDesign d;
  d.phi.resize(ch.l);
  Rng rng_phi = rng.split(0);
  Rng rng_z = rng.split(1);
  for (auto& p : d.phi) p = rng_phi.uniform(0.0, kTwoPi);

  std::vector<CMat> h_eff, f_eff;
  effective_csi(ch, d.phi, h_eff, f_eff);

  double per_vec = p_max / static_cast<double>(ch.k + ch.m);
  double amp = std::sqrt(per_vec);
  d.w.assign(ch.k * ch.n_t, 0.0);
  for (std::size_t k = 0; k < ch.k; ++k) {
    double n = vec_norm(h_eff[k]);
    for (std::size_t t = 0; t < ch.n_t; ++t)
      d.w[k * ch.n_t + t] = amp * h_eff[k][t] / n;
  }

  d.z.assign(ch.m * ch.n_t, 0.0);
  bool can_null = ch.k + 1 <= ch.n_t;
  for (std::size_t m = 0; m < ch.m; ++m) {
    CMat dir(ch.n_t);
    if (can_null) {
      CMat g_rows((ch.k + 1) * ch.n_t);
      for (std::size_t k = 0; k < ch.k; ++k)
        for (std::size_t t = 0; t < ch.n_t; ++t)
          g_rows[k * ch.n_t + t] = std::conj(h_eff[k][t]);
      for (std::size_t t = 0; t < ch.n_t; ++t)
        g_rows[ch.k * ch.n_t + t] = std::conj(f_eff[m][t]);
      dir = zf_column(g_rows, ch.k + 1, ch.n_t, ch.k);
    } else {
      for (auto& v : dir) v = {rng_z.normal(), rng_z.normal()};
    }
    double n = vec_norm(dir);
    for (std::size_t t = 0; t < ch.n_t; ++t) d.z[m * ch.n_t + t] = amp * dir[t] / n;
  }
  return d;
}

std::pair<TransmitDesign, double> gradient_oracle(const ChannelRealization& ch,
                                                  double p_max, double p_c,
                                                  const OracleConfig& cfg) {
  cfg.validate();
  std::size_t r = static_cast<std::size_t>(cfg.restarts);
  std::size_t n_t = ch.n_t, l = ch.l, k = ch.k, m = ch.m;

  // restart-batched leaves
  Tensor phi = make_tensor({r * l, 1}, true);
  ComplexPair w = make_complex({r * k, n_t}, true);
  ComplexPair z = make_complex({r * m, n_t}, true);

  Rng root(cfg.seed);
  for (std::size_t ri = 0; ri < r; ++ri) {
    Rng rr = root.split(ri);
    for (std::size_t i = 0; i < l; ++i)
      phi->values[ri * l + i] = rr.uniform(0.0, kTwoPi);
    double power = 0;
    for (std::size_t i = 0; i < k * n_t; ++i) {
      double re = rr.normal(), im = rr.normal();
      w.re->values[ri * k * n_t + i] = re;
      w.im->values[ri * k * n_t + i] = im;
      power += re * re + im * im;
    }
    for (std::size_t i = 0; i < m * n_t; ++i) {
      double re = rr.normal(), im = rr.normal();
      z.re->values[ri * m * n_t + i] = re;
      z.im->values[ri * m * n_t + i] = im;
      power += re * re + im * im;
    }
    double target = p_max * rr.uniform(0.25, 1.0);
    double f = std::sqrt(target / power);
    for (std::size_t i = 0; i < k * n_t; ++i) {
      w.re->values[ri * k * n_t + i] *= f;
      w.im->values[ri * k * n_t + i] *= f;
    }
    for (std::size_t i = 0; i < m * n_t; ++i) {
      z.re->values[ri * m * n_t + i] *= f;
      z.im->values[ri * m * n_t + i] *= f;
    }
  }

  std::vector<ChannelRealization> reps(r, ch);
  ChannelTensors ct = channel_tensors(reps);

  TransmitDesign best_design;
  double best_see = -1.0;

  auto extract = [&](std::size_t ri) {
    TransmitDesign d;
    d.phi.assign(phi->values.begin() + ri * l, phi->values.begin() + (ri + 1) * l);
    d.w.resize(k * n_t);
    d.z.resize(m * n_t);
    for (std::size_t i = 0; i < k * n_t; ++i)
      d.w[i] = {w.re->values[ri * k * n_t + i], w.im->values[ri * k * n_t + i]};
    for (std::size_t i = 0; i < m * n_t; ++i)
      d.z[i] = {z.re->values[ri * m * n_t + i], z.im->values[ri * m * n_t + i]};
    return d;
  };

  auto evaluate_hard = [&]() {
    for (std::size_t ri = 0; ri < r; ++ri) {
      TransmitDesign d = extract(ri);
      double v = see(ch, d, p_c).see;
      if (v > best_see) {
        best_see = v;
        best_design = std::move(d);
      }
    }
  };

  double prev_obj = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    double eta = cfg.step_size *
                 std::pow(cfg.decay, static_cast<double>(step / cfg.decay_every));

    phi->zero_grad();
    w.re->zero_grad();
    w.im->zero_grad();
    z.re->zero_grad();
    z.im->zero_grad();

    CsiTensors csi = effective_csi_graph(ct, r, n_t, l, k, m, phi);
    LossTensors lt = training_loss_graph(reps, csi, {phi, w, z}, 1.0, p_c);
    Tensor obj = sum_all(lt.per_sample);
    backward(obj);

    auto descend = [&](Tensor& t) {
      for (std::size_t i = 0; i < t->size(); ++i) t->values[i] -= eta * t->grad[i];
    };
    descend(phi);
    descend(w.re);
    descend(w.im);
    descend(z.re);
    descend(z.im);

    // project each restart onto the power ball and wrap phases
    for (std::size_t ri = 0; ri < r; ++ri) {
      double power = 0;
      for (std::size_t i = 0; i < k * n_t; ++i)
        power += w.re->values[ri * k * n_t + i] * w.re->values[ri * k * n_t + i] +
                 w.im->values[ri * k * n_t + i] * w.im->values[ri * k * n_t + i];
      for (std::size_t i = 0; i < m * n_t; ++i)
        power += z.re->values[ri * m * n_t + i] * z.re->values[ri * m * n_t + i] +
                 z.im->values[ri * m * n_t + i] * z.im->values[ri * m * n_t + i];
      if (power > p_max) {
        double f = std::sqrt(p_max / power);
        for (std::size_t i = 0; i < k * n_t; ++i) {
          w.re->values[ri * k * n_t + i] *= f;
          w.im->values[ri * k * n_t + i] *= f;
        }
        for (std::size_t i = 0; i < m * n_t; ++i) {
          z.re->values[ri * m * n_t + i] *= f;
          z.im->values[ri * m * n_t + i] *= f;
        }
      }
      for (std::size_t i = 0; i < l; ++i) {
        double& p = phi->values[ri * l + i];
        p = std::fmod(p, kTwoPi);
        if (p < 0) p += kTwoPi;
      }
    }

    if ((step + 1) % 100 == 0) evaluate_hard();

    double cur = obj->values[0];
    if (cfg.tolerance > 0 && step > cfg.decay_every &&
        std::fabs(cur - prev_obj) < cfg.tolerance * std::max(1.0, std::fabs(cur)))
      break;
    prev_obj = cur;
  }
  evaluate_hard();

  // best_design is feasible by construction of the projection; tidy phases
  wrap_phases(best_design.phi);
  return {best_design, best_see};
}

}  // namespace rispls
