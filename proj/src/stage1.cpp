#include "rispls/stage1.hpp"

namespace rispls {

namespace {
constexpr double kSlope = 0.01;
}

Stage1Params Stage1Params::init(ParamStore& store, std::size_t n_t, Rng& rng) {
  using D = Stage1Dims;
  Stage1Params p;
  p.w1 = store.add_matrix("s1.fal.w1", D::lift, 2 * n_t, 2 * n_t, D::lift, rng);
  p.fal_ru = make_attention_params(store, "s1.fal.ru", D::fal_heads, D::fal_proj,
                                   D::lift, 2, rng);
  p.fal_re = make_attention_params(store, "s1.fal.re", D::fal_heads, D::fal_proj,
                                   D::lift, 2, rng);
  p.fal_ue = make_attention_params(store, "s1.fal.ue", D::fal_heads, D::fal_proj,
                                   D::lift, 0, rng);
  p.fal_types = make_attention_params(store, "s1.fal.types", D::fal_heads,
                                      D::fal_proj, D::lift, 0, rng);
  for (std::size_t t = 0; t < D::layers; ++t) {
    std::size_t f_in = t == 0 ? D::fal_out : D::gl_out;
    std::string prefix = "s1.gl" + std::to_string(t + 1);
    p.gl[t].to_lu = make_attention_params(store, prefix + ".to_lu", D::gl_heads,
                                          D::gl_proj, f_in, 2, rng);
    p.gl[t].to_eve = make_attention_params(store, prefix + ".to_eve", D::gl_heads,
                                           D::gl_proj, f_in, 2, rng);
    p.gl[t].from_lu = make_attention_params(store, prefix + ".from_lu", D::gl_heads,
                                            D::gl_proj, f_in, 2, rng);
    p.gl[t].from_eve = make_attention_params(store, prefix + ".from_eve", D::gl_heads,
                                             D::gl_proj, f_in, 2, rng);
  }
  p.w3 = store.add_matrix("s1.ol.w3", D::ol_h1, D::gl_out, D::gl_out, D::ol_h1, rng);
  p.w2 = store.add_matrix("s1.ol.w2", D::ol_h2, D::ol_h1, D::ol_h1, D::ol_h2, rng);
  p.c1 = store.add_matrix("s1.ol.c1", 1, D::ol_h2, D::ol_h2, 1, rng);
  return p;
}

namespace {

Tensor lift(const Tensor& x, const Tensor& w1) {
  if (x->cols() != w1->cols())
    throw config_error("stage1 lift: feature width " + std::to_string(x->cols()) +
                       " != " + std::to_string(w1->cols()));
  return leaky_relu(matmul(x, w1, false, true), kSlope);
}

Tensor zeros_like_rows(std::size_t rows, std::size_t cols) {
  return make_tensor({rows, cols});
}

}  // namespace

Stage1Features feature_augmentation(const Stage1Graph& g, const Stage1Params& p) {
  using D = Stage1Dims;
  Tensor br = lift(g.x_br, p.w1);
  Tensor bu = lift(g.x_bu, p.w1);
  Tensor be = lift(g.x_be, p.w1);

  auto ru = eatt(psi_bi(g.g, "bs_ris", "bs_lu"), p.fal_ru, {br, bu}, g.g);
  auto re = eatt(psi_bi(g.g, "bs_ris", "bs_eve"), p.fal_re, {br, be}, g.g);
  auto ue = att(psi_fc(g.g, {"bs_lu", "bs_eve"}, true), p.fal_ue, {bu, be}, g.g);

  // Per-type complete graphs in one call; a type whose per-sample count is 1
  // has no within-type neighbors and contributes zero rows instead.
  std::vector<std::string> names;
  std::vector<Tensor> feats;
  const std::size_t counts[3] = {g.l, g.k, g.m};
  const char* all_names[3] = {"bs_ris", "bs_lu", "bs_eve"};
  Tensor lifted[3] = {br, bu, be};
  for (int i = 0; i < 3; ++i)
    if (counts[i] >= 2) {
      names.push_back(all_names[i]);
      feats.push_back(lifted[i]);
    }
  std::vector<Tensor> types_out;
  if (!names.empty())
    types_out = att(psi_fc(g.g, names, false), p.fal_types, feats, g.g);
  Tensor per_type[3];
  {
    std::size_t oi = 0;
    std::size_t rows[3] = {g.batch * g.l, g.batch * g.k, g.batch * g.m};
    for (int i = 0; i < 3; ++i) {
      if (counts[i] >= 2)
        per_type[i] = types_out[oi++];
      else
        per_type[i] = zeros_like_rows(rows[i], D::fal_heads * D::fal_proj);
    }
  }

  Stage1Features out;
  out.br = concat({ru[0], re[0], per_type[0]}, 1);
  out.bu = concat({ru[1], ue[0], per_type[1]}, 1);
  out.be = concat({re[1], ue[1], per_type[2]}, 1);
  return out;
}

Stage1Features stage1_gnn_layer(const Stage1Graph& g,
                                const Stage1Params::GnnLayer& lp,
                                const Stage1Features& prev,
                                const Stage1Graph& raw_source, bool residual_on) {
  using D = Stage1Dims;
  Tensor bu =
      eatt(psi_uni(g.g, "bs_ris", "bs_lu"), lp.to_lu, {prev.br, prev.bu}, g.g)[0];
  Tensor be =
      eatt(psi_uni(g.g, "bs_ris", "bs_eve"), lp.to_eve, {prev.br, prev.be}, g.g)[0];
  Tensor br_u =
      eatt(psi_uni(g.g, "bs_lu", "bs_ris"), lp.from_lu, {prev.bu, prev.br}, g.g)[0];
  Tensor br_e =
      eatt(psi_uni(g.g, "bs_eve", "bs_ris"), lp.from_eve, {prev.be, prev.br}, g.g)[0];
  Tensor br = add(br_u, br_e);

  Stage1Features out{br, bu, be};
  if (residual_on) {
    out.br = add(out.br, add(zero_pad(raw_source.x_br, D::gl_out),
                             zero_pad(prev.br, D::gl_out)));
    out.bu = add(out.bu, add(zero_pad(raw_source.x_bu, D::gl_out),
                             zero_pad(prev.bu, D::gl_out)));
    out.be = add(out.be, add(zero_pad(raw_source.x_be, D::gl_out),
                             zero_pad(prev.be, D::gl_out)));
  }
  return out;
}

Tensor phase_output(const Tensor& x_br, const Stage1Params& p) {
  if (x_br->cols() != Stage1Dims::gl_out)
    throw config_error("phase_output: row width " + std::to_string(x_br->cols()) +
                       " != " + std::to_string(Stage1Dims::gl_out));
  Tensor h1 = leaky_relu(matmul(x_br, p.w3, false, true), kSlope);
  Tensor h2 = leaky_relu(matmul(h1, p.w2, false, true), kSlope);
  Tensor pre = matmul(h2, p.c1, false, true);
  return mul_scalar(sigmoid(pre), kTwoPi);
}

Stage1Out stage1_forward(const Stage1Graph& g, const Stage1Params& p,
                         bool residual_on) {
  Stage1Features x = feature_augmentation(g, p);
  for (std::size_t t = 0; t < Stage1Dims::layers; ++t)
    x = stage1_gnn_layer(g, p.gl[t], x, g, residual_on);
  return {phase_output(x.br, p), x.bu, x.be};
}

}  // namespace rispls
