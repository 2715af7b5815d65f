#pragma once

#include "rispls/hetgraph.hpp"
#include "rispls/params.hpp"

namespace rispls {

// Multi-head attention weights for one operator instance. Heads are stored
// stacked: w_* rows are head-major (D*B x F), attn is D x B. Every head
// shares (F_in, B).
struct AttentionParams {
  std::size_t heads = 1;     // D
  std::size_t proj = 1;      // B
  std::size_t f_in = 0;
  std::size_t f_edge = 0;
  Tensor w_src;              // (D*B) x F_in
  Tensor w_nbr;              // (D*B) x F_in
  Tensor w_edge;             // (D*B) x F_edge, edge-based only
  Tensor attn;               // D x B
  double slope = 0.01;       // LeakyReLU slope inside the logits

  std::size_t out_width() const { return heads * proj; }
};

AttentionParams make_attention_params(ParamStore& store, const std::string& prefix,
                                      std::size_t heads, std::size_t proj,
                                      std::size_t f_in, std::size_t f_edge, Rng& rng);

// Optional capture of the softmax coefficients (one row per arc, one
// column per head) together with the arc target indices.
struct AttentionDebug {
  Tensor alpha;
  IndexVec dst;
};

// Edge-based operator: softmax logits over in-neighbors use
// a_d^T LeakyReLU(W_S x_i + W_N x_j + W_E y_ij); aggregation adds the
// W_S x_i self term plus the attention-weighted W_N x_j + W_E y_ij sum;
// heads concatenate. Returns one (rows x D*B) tensor per target position
// of the view. Throws attention_error for a target with no in-neighbors.
std::vector<Tensor> eatt(const GraphView& view, const AttentionParams& p,
                         const std::vector<Tensor>& set_features,
                         const HeteroGraph& g, AttentionDebug* dbg = nullptr);

// Edge-free operator: same logits without the edge term; aggregation is the
// weighted W_N x_j sum only (no self term).
std::vector<Tensor> att(const GraphView& view, const AttentionParams& p,
                        const std::vector<Tensor>& set_features,
                        const HeteroGraph& g, AttentionDebug* dbg = nullptr);

}  // namespace rispls
