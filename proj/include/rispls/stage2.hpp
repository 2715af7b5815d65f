#pragma once

#include "rispls/attention.hpp"
#include "rispls/metrics.hpp"

namespace rispls {

enum class HeadKind : std::uint8_t { beam_direct = 0, model_based = 1 };

const char* head_name(HeadKind h);
HeadKind head_from_name(const std::string& s);

struct Stage2Dims {
  static constexpr std::size_t feat = 640;  // feature-init width
  static constexpr std::size_t gl_heads = 10;
  static constexpr std::size_t gl1_proj = 128;  // layer widths 1280, 2560
  static constexpr std::size_t gl2_proj = 256;
  static constexpr std::size_t head_hidden = 640;
  static constexpr std::size_t layers = 2;  // T2
  static constexpr std::size_t gl_out(std::size_t t) {
    return gl_heads * (t == 0 ? gl1_proj : gl2_proj);
  }
};

struct Stage2Params {
  Tensor w4, w5;  // 640 x 2N_T
  struct GnnLayer {
    AttentionParams cross_lu, cross_eve, same_lu, same_eve;
  };
  GnnLayer gl[Stage2Dims::layers];
  // beam-direct head (shared across LU nodes / across Eve nodes)
  Tensor w7, eta1, w6, eta2;  // LU: 640x2560, 640, 2N_T x 640, 2N_T
  Tensor w9, eta3, w8, eta4;  // Eve
  // model-based head: two FC layers onto (alpha-logit, p-logit)
  Tensor mb_u_w1, mb_u_b1, mb_u_w2, mb_u_b2;
  Tensor mb_e_w1, mb_e_b1, mb_e_w2, mb_e_b2;

  static Stage2Params init(ParamStore& store, std::size_t n_t, Rng& rng);
};

// Feature initialization: LeakyReLU(W4 htilde_k) + stage-1 augmentation.
std::pair<Tensor, Tensor> stage2_feature_init(const Stage2Graph& g,
                                              const Stage2Params& p);

struct Stage2Feats {
  Tensor u, e;
};

Stage2Feats stage2_gnn_layer(const Stage2Graph& g, const Stage2Params::GnnLayer& lp,
                             const Stage2Feats& prev, bool residual_on,
                             std::size_t layer_index);

// Hybrid ZF/MRT directions. v_lu rows are the ZF columns for each LU;
// v_eve rows null all LU channels plus the m-th Eve's own channel
// (requires K+1 <= N_T).
struct ZfDirections {
  ComplexPair v_lu;   // (batch*K) x N_T
  ComplexPair v_eve;  // (batch*M) x N_T
};
ZfDirections zf_directions(const CsiTensors& csi, std::size_t batch, std::size_t n_t,
                           std::size_t k, std::size_t m);

// Unit-norm mixed directions alpha*vhat + (1-alpha)*chat, renormalized;
// falls back to the channel direction if the mix degenerates.
ComplexPair hybrid_directions(const ComplexPair& v, const ComplexPair& chan,
                              const Tensor& alpha);

struct Stage2Out {
  DesignTensors design;
  // model-based diagnostics (null for beam-direct)
  Tensor alpha, beta;      // mixing scalars per LU / Eve
  Tensor p_lu, p_eve;      // powers after the budget projection
};

Stage2Out beam_direct_head(const Stage2Graph& g, const Stage2Params& p,
                           const Tensor& x_u, const Tensor& x_e, const Tensor& phi,
                           double p_max);
Stage2Out model_based_head(const Stage2Graph& g, const Stage2Params& p,
                           const Tensor& x_u, const Tensor& x_e, const Tensor& phi,
                           double p_max);

Stage2Out stage2_forward(const Stage2Graph& g, const Stage2Params& p, HeadKind head,
                         bool residual_on, const Tensor& phi, double p_max);

}  // namespace rispls
