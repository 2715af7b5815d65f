#pragma once

#include <span>
#include <string>

#include "rispls/channel.hpp"

namespace rispls {

// Typed node set. graph_id partitions nodes into independent samples so a
// batch is just a disjoint union of per-sample graphs; construction
// operators never connect across partitions.
struct NodeSet {
  std::string name;
  std::size_t count = 0;
  Tensor features;  // raw payload rows, may be null
  std::vector<std::int32_t> graph_id;
};

struct EdgeSet {
  std::string name;
  int src_set = -1, dst_set = -1;
  bool undirected = true;
  // stored once per edge; undirected sets materialize both arcs at
  // operator time, sharing the feature row
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  Tensor features;  // row per stored pair, or null
};

struct HeteroGraph {
  std::vector<NodeSet> node_sets;
  std::vector<EdgeSet> edge_sets;

  int node_set(const std::string& name) const;
  void validate() const;
};

struct EdgeArc {
  std::int32_t src, dst;   // rows within the view's source/target stacks
  std::int32_t feat = -1;  // row in edge_features, or -1
};

// A subgraph view. Node features are supplied by the caller per set (in
// `sets` order); the source stack concatenates the sets at src_positions,
// the target stack those at dst_positions. Arcs index into the stacks and
// are sorted by target row, so per-target segments are contiguous.
struct GraphView {
  std::vector<int> sets;
  std::vector<std::size_t> set_rows;
  std::vector<int> src_positions;
  std::vector<int> dst_positions;
  std::vector<EdgeArc> arcs;
  Tensor edge_features;  // shared with the parent edge set

  std::size_t src_rows() const;
  std::size_t dst_rows() const;
};

// Directed bipartite extraction: arcs src_type -> dst_type from the edge
// set connecting the two types.
GraphView psi_uni(const HeteroGraph& g, const std::string& src_type,
                  const std::string& dst_type);
// Undirected bipartite extraction: both arc directions, features shared.
GraphView psi_bi(const HeteroGraph& g, const std::string& a_type,
                 const std::string& b_type);
// Fully-connected construction over the listed sets, feature-free edges,
// within each graph partition. joint=true connects across sets (one
// complete graph over the union); joint=false keeps each set's complete
// graph separate (a disjoint union handled by one operator call).
GraphView psi_fc(const HeteroGraph& g, const std::vector<std::string>& set_names,
                 bool joint);

// --- stage-specific graphs --------------------------------------------------

struct Stage1Graph {
  HeteroGraph g;
  std::size_t batch = 0, n_t = 0, l = 0, k = 0, m = 0;
  Tensor x_br, x_bu, x_be;  // Concat(Re, Im) CSI features
  Tensor y_ru, y_re;        // edge features (Re, Im) per <l,k> / <l,m>
};

Stage1Graph build_stage1(std::span<const ChannelRealization> batch);
Stage1Graph build_stage1(const ChannelRealization& ch);

struct Stage2Graph {
  HeteroGraph g;
  std::size_t batch = 0, n_t = 0, k = 0, m = 0;
  CsiTensors csi;           // differentiable effective CSI
  Tensor csi_lu, csi_eve;   // real 2N_T rows (interleaved re/im), graph nodes' payload
  Tensor aug_u, aug_e;      // stage-1 augmented features
};

Stage2Graph build_stage2(std::span<const ChannelRealization> batch,
                         const ChannelTensors& ct, const Tensor& phi,
                         const Tensor& aug_u, const Tensor& aug_e);
Stage2Graph build_stage2(const ChannelRealization& ch, const Tensor& phi,
                         const Tensor& aug_u, const Tensor& aug_e);

// Interleaved (re, im, re, im, ...) real rows of a complex row matrix.
Tensor interleave_complex(const ComplexPair& a);

}  // namespace rispls
