#include "rispls/stage2.hpp"

#include <cstdio>

namespace rispls {

namespace {
constexpr double kSlope = 0.01;
constexpr double kDegenerateNorm2 = 1e-24;

IndexVec sample_ids(std::size_t batch, std::size_t per) {
  auto v = std::make_shared<std::vector<std::int64_t>>(batch * per);
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t i = 0; i < per; ++i)
      (*v)[s * per + i] = static_cast<std::int64_t>(s);
  return v;
}

}  // namespace

const char* head_name(HeadKind h) {
  return h == HeadKind::beam_direct ? "beam_direct" : "model_based";
}

HeadKind head_from_name(const std::string& s) {
  if (s == "beam_direct" || s == "beam-direct") return HeadKind::beam_direct;
  if (s == "model_based" || s == "model-based") return HeadKind::model_based;
  throw usage_error("unknown head: " + s);
}

Stage2Params Stage2Params::init(ParamStore& store, std::size_t n_t, Rng& rng) {
  using D = Stage2Dims;
  Stage2Params p;
  p.w4 = store.add_matrix("s2.fil.w4", D::feat, 2 * n_t, 2 * n_t, D::feat, rng);
  p.w5 = store.add_matrix("s2.fil.w5", D::feat, 2 * n_t, 2 * n_t, D::feat, rng);
  for (std::size_t t = 0; t < D::layers; ++t) {
    std::size_t f_in = t == 0 ? D::feat : D::gl_out(0);
    std::size_t proj = t == 0 ? D::gl1_proj : D::gl2_proj;
    std::string prefix = "s2.gl" + std::to_string(t + 1);
    p.gl[t].cross_lu = make_attention_params(store, prefix + ".cross_lu", D::gl_heads,
                                             proj, f_in, 0, rng);
    p.gl[t].cross_eve = make_attention_params(store, prefix + ".cross_eve",
                                              D::gl_heads, proj, f_in, 0, rng);
    p.gl[t].same_lu = make_attention_params(store, prefix + ".same_lu", D::gl_heads,
                                            proj, f_in, 0, rng);
    p.gl[t].same_eve = make_attention_params(store, prefix + ".same_eve", D::gl_heads,
                                             proj, f_in, 0, rng);
  }
  std::size_t emb = D::gl_out(1);  // 2560
  p.w7 = store.add_matrix("s2.bd.w7", D::head_hidden, emb, emb, D::head_hidden, rng);
  p.eta1 = store.add_zeros("s2.bd.eta1", {D::head_hidden});
  p.w6 = store.add_matrix("s2.bd.w6", 2 * n_t, D::head_hidden, D::head_hidden,
                          2 * n_t, rng);
  p.eta2 = store.add_zeros("s2.bd.eta2", {2 * n_t});
  p.w9 = store.add_matrix("s2.bd.w9", D::head_hidden, emb, emb, D::head_hidden, rng);
  p.eta3 = store.add_zeros("s2.bd.eta3", {D::head_hidden});
  p.w8 = store.add_matrix("s2.bd.w8", 2 * n_t, D::head_hidden, D::head_hidden,
                          2 * n_t, rng);
  p.eta4 = store.add_zeros("s2.bd.eta4", {2 * n_t});

  p.mb_u_w1 = store.add_matrix("s2.mb.u.w1", D::head_hidden, emb, emb,
                               D::head_hidden, rng);
  p.mb_u_b1 = store.add_zeros("s2.mb.u.b1", {D::head_hidden});
  p.mb_u_w2 = store.add_matrix("s2.mb.u.w2", 2, D::head_hidden, D::head_hidden, 2,
                               rng);
  p.mb_u_b2 = store.add_zeros("s2.mb.u.b2", {2});
  p.mb_e_w1 = store.add_matrix("s2.mb.e.w1", D::head_hidden, emb, emb,
                               D::head_hidden, rng);
  p.mb_e_b1 = store.add_zeros("s2.mb.e.b1", {D::head_hidden});
  p.mb_e_w2 = store.add_matrix("s2.mb.e.w2", 2, D::head_hidden, D::head_hidden, 2,
                               rng);
  p.mb_e_b2 = store.add_zeros("s2.mb.e.b2", {2});
  return p;
}

std::pair<Tensor, Tensor> stage2_feature_init(const Stage2Graph& g,
                                              const Stage2Params& p) {
  if (g.aug_u->cols() != Stage2Dims::feat || g.aug_e->cols() != Stage2Dims::feat)
    throw config_error("stage2 feature init: augmentation width " +
                       std::to_string(g.aug_u->cols()) + " != " +
                       std::to_string(Stage2Dims::feat));
  Tensor u = add(leaky_relu(matmul(g.csi_lu, p.w4, false, true), kSlope), g.aug_u);
  Tensor e = add(leaky_relu(matmul(g.csi_eve, p.w5, false, true), kSlope), g.aug_e);
  return {u, e};
}

Stage2Feats stage2_gnn_layer(const Stage2Graph& g, const Stage2Params::GnnLayer& lp,
                             const Stage2Feats& prev, bool residual_on,
                             std::size_t layer_index) {
  std::size_t width = Stage2Dims::gl_out(layer_index);
  Tensor cross_u = att(psi_uni(g.g, "bs_ris_eve", "bs_ris_lu"), lp.cross_lu,
                       {prev.e, prev.u}, g.g)[0];
  Tensor cross_e = att(psi_uni(g.g, "bs_ris_lu", "bs_ris_eve"), lp.cross_eve,
                       {prev.u, prev.e}, g.g)[0];
  // A lone node of a type has no same-type neighbors; its underline term is
  // a zero vector of the layer width.
  Tensor same_u =
      g.k >= 2 ? att(psi_fc(g.g, {"bs_ris_lu"}, false), lp.same_lu, {prev.u}, g.g)[0]
               : make_tensor({g.batch * g.k, width});
  Tensor same_e =
      g.m >= 2 ? att(psi_fc(g.g, {"bs_ris_eve"}, false), lp.same_eve, {prev.e},
                     g.g)[0]
               : make_tensor({g.batch * g.m, width});

  Stage2Feats out{add(cross_u, same_u), add(cross_e, same_e)};
  if (residual_on) {
    out.u = add(out.u, add(zero_pad(g.csi_lu, width), zero_pad(prev.u, width)));
    out.e = add(out.e, add(zero_pad(g.csi_eve, width), zero_pad(prev.e, width)));
  }
  return out;
}

namespace {

ComplexPair split_reim_cols(const Tensor& x, std::size_t n_t) {
  // first N_T columns real parts, last N_T imaginary parts
  return {slice(x, 0, x->rows(), 0, n_t), slice(x, 0, x->rows(), n_t, 2 * n_t)};
}

Tensor two_layer_head(const Tensor& x, const Tensor& w_in, const Tensor& b_in,
                      const Tensor& w_out, const Tensor& b_out) {
  Tensor h = leaky_relu(add_rowvec(matmul(x, w_in, false, true), b_in), kSlope);
  return add_rowvec(matmul(h, w_out, false, true), b_out);
}

// max(p_max, x) elementwise via p_max + relu(x - p_max).
Tensor clamp_below(const Tensor& x, double p_max) {
  return add_scalar(relu(add_scalar(x, -p_max)), p_max);
}

void warn_once_per_call(const char* what) {
  std::fprintf(stderr, "rispls: warning: %s\n", what);
}

}  // namespace

ZfDirections zf_directions(const CsiTensors& csi, std::size_t batch, std::size_t n_t,
                           std::size_t k, std::size_t m) {
  if (k > n_t)
    throw config_error("zf_directions: K > N_T, ZF pseudo-inverse does not exist");
  if (m > 0 && k + 1 > n_t)
    throw config_error("zf_directions: K+1 > N_T, Eve nulling directions need K+1 <= N_T");

  std::vector<ComplexPair> v_lu_rows, v_eve_rows;
  v_lu_rows.reserve(batch);
  v_eve_rows.reserve(batch * m);

  for (std::size_t s = 0; s < batch; ++s) {
    ComplexPair h_s = cslice(csi.h, s * k, (s + 1) * k, 0, n_t);
    ComplexPair g_lu = conj_pair(h_s);  // rows are htilde^H

    auto pinv_rows = [&](const ComplexPair& gmat, std::size_t rows) {
      // V = G^H (G G^H + eps I)^-1 via the real block representation.
      Tensor rg = complex_block(gmat);                  // 2r x 2n_t
      Tensor gram = matmul(rg, rg, false, true);        // 2r x 2r
      double tr = 0;
      for (std::size_t i = 0; i < 2 * rows; ++i)
        tr += gram->values[i * 2 * rows + i];
      double eps = 1e-10 * (tr / 2.0) / static_cast<double>(rows);
      if (eps <= 0) eps = 1e-30;
      std::vector<double> eye(4 * rows * rows, 0.0);
      for (std::size_t i = 0; i < 2 * rows; ++i) eye[i * 2 * rows + i] = eps;
      Tensor reg = add(gram, make_tensor({2 * rows, 2 * rows}, std::move(eye)));
      double min_pivot = 0;
      Tensor inv = matrix_inverse(reg, &min_pivot);
      if (min_pivot < 100.0 * eps)
        warn_once_per_call("near-singular Gram matrix in ZF directions, regularized");
      Tensor rv = matmul(rg, inv, true, false);  // 2n_t x 2r
      ComplexPair v = from_complex_block(rv, n_t, rows);
      return ComplexPair{transpose(v.re), transpose(v.im)};  // rows x n_t
    };

    v_lu_rows.push_back(pinv_rows(g_lu, k));

    for (std::size_t mm = 0; mm < m; ++mm) {
      ComplexPair f_m = cslice(csi.f, s * m + mm, s * m + mm + 1, 0, n_t);
      ComplexPair g_eve = cconcat({g_lu, conj_pair(f_m)}, 0);  // (k+1) x n_t
      ComplexPair v_all = pinv_rows(g_eve, k + 1);
      v_eve_rows.push_back(cslice(v_all, k, k + 1, 0, n_t));  // last row
    }
  }

  ZfDirections out;
  out.v_lu = batch == 1 ? v_lu_rows[0] : cconcat(v_lu_rows, 0);
  if (m > 0)
    out.v_eve = v_eve_rows.size() == 1 ? v_eve_rows[0] : cconcat(v_eve_rows, 0);
  return out;
}

ComplexPair hybrid_directions(const ComplexPair& v, const ComplexPair& chan,
                              const Tensor& alpha) {
  Tensor vhat_scale = reciprocal(sqrt_op(row_norm2(v)));
  Tensor chat_scale = reciprocal(sqrt_op(row_norm2(chan)));
  ComplexPair vhat = cscale_rows(v, vhat_scale);
  ComplexPair chat = cscale_rows(chan, chat_scale);
  Tensor one_minus = add_scalar(neg(alpha), 1.0);
  ComplexPair mixed = cadd(cscale_rows(vhat, alpha), cscale_rows(chat, one_minus));

  // An (almost) antiparallel mix gives a zero direction; fall back to the
  // channel direction for those rows.
  Tensor n2 = row_norm2(mixed);
  bool degenerate = false;
  std::vector<double> keep(n2->size(), 1.0), drop(n2->size(), 0.0);
  for (std::size_t i = 0; i < n2->size(); ++i)
    if (n2->values[i] < kDegenerateNorm2) {
      keep[i] = 0.0;
      drop[i] = 1.0;
      degenerate = true;
    }
  if (degenerate) {
    warn_once_per_call("degenerate hybrid direction, falling back to channel match");
    Tensor keep_t = make_tensor({n2->rows(), 1}, std::move(keep));
    Tensor drop_t = make_tensor({n2->rows(), 1}, std::move(drop));
    mixed = cadd(cscale_rows(mixed, keep_t), cscale_rows(chat, drop_t));
  }
  return cscale_rows(mixed, reciprocal(sqrt_op(row_norm2(mixed))));
}

Stage2Out beam_direct_head(const Stage2Graph& g, const Stage2Params& p,
                           const Tensor& x_u, const Tensor& x_e, const Tensor& phi,
                           double p_max) {
  ComplexPair w = split_reim_cols(two_layer_head(x_u, p.w7, p.eta1, p.w6, p.eta2),
                                  g.n_t);
  ComplexPair z = split_reim_cols(two_layer_head(x_e, p.w9, p.eta3, p.w8, p.eta4),
                                  g.n_t);

  IndexVec seg_lu = sample_ids(g.batch, g.k);
  IndexVec seg_eve = sample_ids(g.batch, g.m);
  Tensor total = add(segment_sum(row_norm2(w), seg_lu, g.batch),
                     segment_sum(row_norm2(z), seg_eve, g.batch));
  Tensor factor = sqrt_op(mul_scalar(reciprocal(clamp_below(total, p_max)), p_max));

  Stage2Out out;
  out.design.phi = phi;
  out.design.w = cscale_rows(w, gather_rows(factor, seg_lu));
  out.design.z = cscale_rows(z, gather_rows(factor, seg_eve));
  return out;
}

Stage2Out model_based_head(const Stage2Graph& g, const Stage2Params& p,
                           const Tensor& x_u, const Tensor& x_e, const Tensor& phi,
                           double p_max) {
  Tensor head_u = two_layer_head(x_u, p.mb_u_w1, p.mb_u_b1, p.mb_u_w2, p.mb_u_b2);
  Tensor head_e = two_layer_head(x_e, p.mb_e_w1, p.mb_e_b1, p.mb_e_w2, p.mb_e_b2);

  std::size_t nu = g.batch * g.k, ne = g.batch * g.m;
  Tensor alpha = sigmoid(slice(head_u, 0, nu, 0, 1));
  Tensor p_raw = relu(slice(head_u, 0, nu, 1, 2));
  Tensor beta = sigmoid(slice(head_e, 0, ne, 0, 1));
  Tensor q_raw = relu(slice(head_e, 0, ne, 1, 2));

  IndexVec seg_lu = sample_ids(g.batch, g.k);
  IndexVec seg_eve = sample_ids(g.batch, g.m);
  Tensor total = add(segment_sum(p_raw, seg_lu, g.batch),
                     segment_sum(q_raw, seg_eve, g.batch));
  Tensor scale = mul_scalar(reciprocal(clamp_below(total, p_max)), p_max);
  Tensor p_lu = mul(p_raw, gather_rows(scale, seg_lu));
  Tensor p_eve = mul(q_raw, gather_rows(scale, seg_eve));

  ZfDirections zf = zf_directions(g.csi, g.batch, g.n_t, g.k, g.m);
  ComplexPair w_bar = hybrid_directions(zf.v_lu, g.csi.h, alpha);
  ComplexPair z_bar = hybrid_directions(zf.v_eve, g.csi.f, beta);

  Stage2Out out;
  out.design.phi = phi;
  out.design.w = cscale_rows(w_bar, sqrt_op(p_lu));
  out.design.z = cscale_rows(z_bar, sqrt_op(p_eve));
  out.alpha = alpha;
  out.beta = beta;
  out.p_lu = p_lu;
  out.p_eve = p_eve;
  return out;
}

Stage2Out stage2_forward(const Stage2Graph& g, const Stage2Params& p, HeadKind head,
                         bool residual_on, const Tensor& phi, double p_max) {
  auto [u, e] = stage2_feature_init(g, p);
  Stage2Feats x{u, e};
  for (std::size_t t = 0; t < Stage2Dims::layers; ++t)
    x = stage2_gnn_layer(g, p.gl[t], x, residual_on, t);
  if (head == HeadKind::beam_direct)
    return beam_direct_head(g, p, x.u, x.e, phi, p_max);
  return model_based_head(g, p, x.u, x.e, phi, p_max);
}

}  // namespace rispls
