#include "rispls/attention.hpp"

namespace rispls {

AttentionParams make_attention_params(ParamStore& store, const std::string& prefix,
                                      std::size_t heads, std::size_t proj,
                                      std::size_t f_in, std::size_t f_edge, Rng& rng) {
  AttentionParams p;
  p.heads = heads;
  p.proj = proj;
  p.f_in = f_in;
  p.f_edge = f_edge;
  p.w_src = store.add_matrix(prefix + ".w_src", heads * proj, f_in, f_in, proj, rng);
  p.w_nbr = store.add_matrix(prefix + ".w_nbr", heads * proj, f_in, f_in, proj, rng);
  if (f_edge > 0)
    p.w_edge =
        store.add_matrix(prefix + ".w_edge", heads * proj, f_edge, f_edge, proj, rng);
  p.attn = store.add_matrix(prefix + ".attn", heads, proj, proj, proj, rng);
  return p;
}

namespace {

Tensor stack_features(const GraphView& view, const std::vector<int>& positions,
                      const std::vector<Tensor>& set_features) {
  if (positions.size() == 1) return set_features[positions[0]];
  std::vector<Tensor> parts;
  parts.reserve(positions.size());
  for (int p : positions) parts.push_back(set_features[p]);
  return concat(parts, 0);
}

std::vector<Tensor> attention_core(const GraphView& view, const AttentionParams& p,
                                   const std::vector<Tensor>& set_features,
                                   const HeteroGraph& g, bool edge_based,
                                   AttentionDebug* dbg) {
  if (set_features.size() != view.sets.size())
    throw usage_error("attention: one feature tensor per view node set expected");
  for (std::size_t i = 0; i < view.sets.size(); ++i) {
    if (set_features[i]->rows() != view.set_rows[i])
      throw dimension_error("attention: feature rows mismatch for node set " +
                            g.node_sets[view.sets[i]].name);
    if (set_features[i]->cols() != p.f_in)
      throw config_error("attention: feature width " +
                         std::to_string(set_features[i]->cols()) + " != F_in " +
                         std::to_string(p.f_in));
  }
  if (edge_based) {
    if (!view.edge_features)
      throw usage_error("eatt: view carries no edge features");
    if (view.edge_features->cols() != p.f_edge)
      throw config_error("eatt: edge feature width mismatch");
  }

  std::size_t n_dst = view.dst_rows();
  auto src_idx = std::make_shared<std::vector<std::int64_t>>();
  auto dst_idx = std::make_shared<std::vector<std::int64_t>>();
  auto feat_idx = std::make_shared<std::vector<std::int64_t>>();
  src_idx->reserve(view.arcs.size());
  dst_idx->reserve(view.arcs.size());
  feat_idx->reserve(view.arcs.size());
  std::vector<bool> covered(n_dst, false);
  for (const auto& a : view.arcs) {
    src_idx->push_back(a.src);
    dst_idx->push_back(a.dst);
    feat_idx->push_back(a.feat);
    covered[a.dst] = true;
  }
  for (std::size_t r = 0; r < n_dst; ++r)
    if (!covered[r]) {
      // map the stack row back to (set, index) for the message
      std::size_t off = 0;
      for (int pos : view.dst_positions) {
        if (r < off + view.set_rows[pos])
          throw attention_error("attention: node " + std::to_string(r - off) +
                                " of type " + g.node_sets[view.sets[pos]].name +
                                " has no in-neighbors");
        off += view.set_rows[pos];
      }
    }

  Tensor src_stack = stack_features(view, view.src_positions, set_features);
  Tensor dst_stack =
      view.src_positions == view.dst_positions
          ? src_stack
          : stack_features(view, view.dst_positions, set_features);

  Tensor ps = matmul(dst_stack, p.w_src, false, true);  // n_dst x D*B
  Tensor pn = matmul(src_stack, p.w_nbr, false, true);  // n_src x D*B

  Tensor t = gather_rows(pn, src_idx);
  if (edge_based) {
    Tensor pe = matmul(view.edge_features, p.w_edge, false, true);
    t = add(t, gather_rows(pe, feat_idx));
  }
  Tensor pre = add(gather_rows(ps, dst_idx), t);
  Tensor logits = head_dot(leaky_relu(pre, p.slope),
                           reshape(p.attn, {p.heads * p.proj}), p.heads);
  Tensor alpha = segment_softmax(logits, dst_idx, n_dst);
  if (dbg) {
    dbg->alpha = alpha;
    dbg->dst = dst_idx;
  }
  Tensor agg = segment_sum(head_scale(t, alpha), dst_idx, n_dst);
  Tensor out_all = edge_based ? add(agg, ps) : agg;

  std::vector<Tensor> out;
  out.reserve(view.dst_positions.size());
  if (view.dst_positions.size() == 1) {
    out.push_back(out_all);
    return out;
  }
  std::size_t off = 0;
  for (int pos : view.dst_positions) {
    out.push_back(slice(out_all, off, off + view.set_rows[pos], 0, p.out_width()));
    off += view.set_rows[pos];
  }
  return out;
}

}  // namespace

std::vector<Tensor> eatt(const GraphView& view, const AttentionParams& p,
                         const std::vector<Tensor>& set_features,
                         const HeteroGraph& g, AttentionDebug* dbg) {
  return attention_core(view, p, set_features, g, true, dbg);
}

std::vector<Tensor> att(const GraphView& view, const AttentionParams& p,
                        const std::vector<Tensor>& set_features, const HeteroGraph& g,
                        AttentionDebug* dbg) {
  return attention_core(view, p, set_features, g, false, dbg);
}

}  // namespace rispls
