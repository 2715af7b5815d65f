#pragma once

#include "rispls/attention.hpp"

namespace rispls {

// Layer widths follow the published structure table: a 2N_T -> 32 lift,
// four 5-head/32 attention ops in the augmentation layer (3 concats of 160
// per type = 480), two 10-head/64 GNN layers (width 640), and a
// 640 -> 320 -> 128 -> 1 phase head.
struct Stage1Dims {
  static constexpr std::size_t lift = 32;
  static constexpr std::size_t fal_heads = 5;
  static constexpr std::size_t fal_proj = 32;
  static constexpr std::size_t fal_out = 3 * fal_heads * fal_proj;  // 480
  static constexpr std::size_t gl_heads = 10;
  static constexpr std::size_t gl_proj = 64;
  static constexpr std::size_t gl_out = gl_heads * gl_proj;  // 640
  static constexpr std::size_t ol_h1 = 320;
  static constexpr std::size_t ol_h2 = 128;
  static constexpr std::size_t layers = 2;  // T1
};

struct Stage1Params {
  Tensor w1;  // lift x 2N_T, shared across the three node types
  AttentionParams fal_ru, fal_re, fal_ue, fal_types;
  struct GnnLayer {
    AttentionParams to_lu, to_eve, from_lu, from_eve;
  };
  GnnLayer gl[Stage1Dims::layers];
  Tensor w3, w2, c1;  // 320x640, 128x320, 1x128

  static Stage1Params init(ParamStore& store, std::size_t n_t, Rng& rng);
};

struct Stage1Features {
  Tensor br, bu, be;
};

// Feature augmentation layer: shared lift MLP followed by the four
// attention calls and per-type concatenation (widths 480).
Stage1Features feature_augmentation(const Stage1Graph& g, const Stage1Params& p);

// One GNN layer; residual_on adds the zero-padded raw features and
// previous-layer features.
Stage1Features stage1_gnn_layer(const Stage1Graph& g,
                                const Stage1Params::GnnLayer& lp,
                                const Stage1Features& prev,
                                const Stage1Graph& raw_source, bool residual_on);

// Phase head: phi_l = 2*pi*sigmoid(c1 LeakyReLU(W2 LeakyReLU(W3 x_l))).
Tensor phase_output(const Tensor& x_br, const Stage1Params& p);

struct Stage1Out {
  Tensor phi;    // (batch*L) x 1 in (0, 2*pi)
  Tensor aug_u;  // (batch*K) x 640
  Tensor aug_e;  // (batch*M) x 640
};

Stage1Out stage1_forward(const Stage1Graph& g, const Stage1Params& p,
                         bool residual_on);

}  // namespace rispls
