#include "rispls/hetgraph.hpp"

#include <algorithm>
#include <map>

namespace rispls {

int HeteroGraph::node_set(const std::string& name) const {
  for (std::size_t i = 0; i < node_sets.size(); ++i)
    if (node_sets[i].name == name) return static_cast<int>(i);
  throw usage_error("unknown node type: " + name);
}

void HeteroGraph::validate() const {
  for (const auto& ns : node_sets) {
    if (ns.graph_id.size() != ns.count)
      throw dimension_error("node set " + ns.name + ": graph_id size mismatch");
    if (ns.features && ns.features->rows() != ns.count)
      throw dimension_error("node set " + ns.name + ": feature row count mismatch");
  }
  for (const auto& es : edge_sets) {
    if (es.src_set < 0 || es.dst_set < 0 ||
        es.src_set >= static_cast<int>(node_sets.size()) ||
        es.dst_set >= static_cast<int>(node_sets.size()))
      throw dimension_error("edge set " + es.name + ": bad endpoint set");
    const auto& src = node_sets[es.src_set];
    const auto& dst = node_sets[es.dst_set];
    for (auto [a, b] : es.pairs)
      if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= src.count ||
          static_cast<std::size_t>(b) >= dst.count)
        throw dimension_error("edge set " + es.name + ": endpoint out of range");
    if (es.features && es.features->rows() != es.pairs.size())
      throw dimension_error("edge set " + es.name + ": feature row count mismatch");
  }
}

std::size_t GraphView::src_rows() const {
  std::size_t n = 0;
  for (int p : src_positions) n += set_rows[p];
  return n;
}

std::size_t GraphView::dst_rows() const {
  std::size_t n = 0;
  for (int p : dst_positions) n += set_rows[p];
  return n;
}

namespace {

const EdgeSet* find_edge_set(const HeteroGraph& g, int a, int b, bool& reversed) {
  for (const auto& es : g.edge_sets) {
    if (es.src_set == a && es.dst_set == b) {
      reversed = false;
      return &es;
    }
    if (es.src_set == b && es.dst_set == a) {
      reversed = true;
      return &es;
    }
  }
  return nullptr;
}

void sort_arcs(std::vector<EdgeArc>& arcs) {
  std::sort(arcs.begin(), arcs.end(), [](const EdgeArc& x, const EdgeArc& y) {
    return x.dst != y.dst ? x.dst < y.dst : x.src < y.src;
  });
}

}  // namespace

GraphView psi_uni(const HeteroGraph& g, const std::string& src_type,
                  const std::string& dst_type) {
  int si = g.node_set(src_type), di = g.node_set(dst_type);
  if (si == di) throw usage_error("psi_uni: node types must be distinct");
  bool reversed = false;
  const EdgeSet* es = find_edge_set(g, si, di, reversed);
  if (!es)
    throw usage_error("psi_uni: no edge set between " + src_type + " and " + dst_type);

  GraphView v;
  v.sets = {si, di};
  v.set_rows = {g.node_sets[si].count, g.node_sets[di].count};
  v.src_positions = {0};
  v.dst_positions = {1};
  v.edge_features = es->features;
  v.arcs.reserve(es->pairs.size());
  for (std::size_t e = 0; e < es->pairs.size(); ++e) {
    auto [a, b] = es->pairs[e];
    if (reversed) std::swap(a, b);
    v.arcs.push_back({a, b, static_cast<std::int32_t>(e)});
  }
  sort_arcs(v.arcs);
  return v;
}

GraphView psi_bi(const HeteroGraph& g, const std::string& a_type,
                 const std::string& b_type) {
  int ai = g.node_set(a_type), bi = g.node_set(b_type);
  if (ai == bi) throw usage_error("psi_bi: node types must be distinct");
  bool reversed = false;
  const EdgeSet* es = find_edge_set(g, ai, bi, reversed);
  if (!es)
    throw usage_error("psi_bi: no edge set between " + a_type + " and " + b_type);

  GraphView v;
  v.sets = {ai, bi};
  std::size_t na = g.node_sets[ai].count, nb = g.node_sets[bi].count;
  v.set_rows = {na, nb};
  v.src_positions = {0, 1};
  v.dst_positions = {0, 1};
  v.edge_features = es->features;
  v.arcs.reserve(2 * es->pairs.size());
  for (std::size_t e = 0; e < es->pairs.size(); ++e) {
    auto [x, y] = es->pairs[e];
    if (reversed) std::swap(x, y);
    std::int32_t a_row = x, b_row = static_cast<std::int32_t>(na) + y;
    v.arcs.push_back({a_row, b_row, static_cast<std::int32_t>(e)});
    v.arcs.push_back({b_row, a_row, static_cast<std::int32_t>(e)});
  }
  sort_arcs(v.arcs);
  return v;
}

GraphView psi_fc(const HeteroGraph& g, const std::vector<std::string>& set_names,
                 bool joint) {
  if (set_names.empty()) throw usage_error("psi_fc: no node sets");
  GraphView v;
  std::size_t total = 0;
  for (const auto& name : set_names) {
    int id = g.node_set(name);
    const auto& ns = g.node_sets[id];
    if (ns.count == 0) throw usage_error("psi_fc: empty node set " + name);
    v.sets.push_back(id);
    v.set_rows.push_back(ns.count);
    total += ns.count;
  }
  for (std::size_t p = 0; p < v.sets.size(); ++p) {
    v.src_positions.push_back(static_cast<int>(p));
    v.dst_positions.push_back(static_cast<int>(p));
  }

  // stack row -> (position, graph id)
  std::vector<std::int32_t> gid(total);
  std::vector<int> pos(total);
  std::size_t off = 0;
  for (std::size_t p = 0; p < v.sets.size(); ++p) {
    const auto& ns = g.node_sets[v.sets[p]];
    for (std::size_t i = 0; i < ns.count; ++i) {
      gid[off + i] = ns.graph_id[i];
      pos[off + i] = static_cast<int>(p);
    }
    off += ns.count;
  }

  // members per (graph id [, position]) in ascending stack order
  std::map<std::pair<std::int32_t, int>, std::vector<std::int32_t>> groups;
  for (std::size_t r = 0; r < total; ++r)
    groups[{gid[r], joint ? 0 : pos[r]}].push_back(static_cast<std::int32_t>(r));

  for (std::size_t r = 0; r < total; ++r) {
    const auto& members = groups[{gid[r], joint ? 0 : pos[r]}];
    for (auto s : members)
      if (s != static_cast<std::int32_t>(r))
        v.arcs.push_back({s, static_cast<std::int32_t>(r), -1});
  }
  sort_arcs(v.arcs);
  return v;
}

// --- stage graphs ------------------------------------------------------------

namespace {

std::vector<std::int32_t> iota_graph_ids(std::size_t batch, std::size_t per) {
  std::vector<std::int32_t> ids(batch * per);
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t i = 0; i < per; ++i) ids[s * per + i] = static_cast<std::int32_t>(s);
  return ids;
}

// rows: count x n complex entries laid out [Re..., Im...] per row
Tensor concat_reim_rows(const CMat& flat, std::size_t rows, std::size_t n) {
  std::vector<double> v(rows * 2 * n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) {
      v[r * 2 * n + j] = flat[r * n + j].real();
      v[r * 2 * n + n + j] = flat[r * n + j].imag();
    }
  return make_tensor({rows, 2 * n}, std::move(v));
}

}  // namespace

Stage1Graph build_stage1(std::span<const ChannelRealization> batch) {
  if (batch.empty()) throw usage_error("build_stage1: empty batch");
  const auto& b0 = batch[0];
  std::size_t s = batch.size(), n_t = b0.n_t, l = b0.l, k = b0.k, m = b0.m;
  if (l == 0) throw config_error("build_stage1: L must be >= 1");

  Stage1Graph sg;
  sg.batch = s;
  sg.n_t = n_t;
  sg.l = l;
  sg.k = k;
  sg.m = m;

  CMat br(s * l * n_t), bu(s * k * n_t), be(s * m * n_t);
  CMat yru(s * l * k), yre(s * l * m);
  for (std::size_t si = 0; si < s; ++si) {
    const auto& ch = batch[si];
    if (ch.n_t != n_t || ch.l != l || ch.k != k || ch.m != m)
      throw dimension_error("build_stage1: mixed dimensions in batch");
    std::copy(ch.H.begin(), ch.H.end(), br.begin() + si * l * n_t);
    for (std::size_t kk = 0; kk < k; ++kk)
      std::copy(ch.h_b[kk].begin(), ch.h_b[kk].end(),
                bu.begin() + (si * k + kk) * n_t);
    for (std::size_t mm = 0; mm < m; ++mm)
      std::copy(ch.f_b[mm].begin(), ch.f_b[mm].end(),
                be.begin() + (si * m + mm) * n_t);
    for (std::size_t ll = 0; ll < l; ++ll) {
      for (std::size_t kk = 0; kk < k; ++kk)
        yru[si * l * k + ll * k + kk] = ch.h_r[kk][ll];
      for (std::size_t mm = 0; mm < m; ++mm)
        yre[si * l * m + ll * m + mm] = ch.f_r[mm][ll];
    }
  }
  sg.x_br = concat_reim_rows(br, s * l, n_t);
  sg.x_bu = concat_reim_rows(bu, s * k, n_t);
  sg.x_be = concat_reim_rows(be, s * m, n_t);
  sg.y_ru = concat_reim_rows(yru, s * l * k, 1);
  sg.y_re = concat_reim_rows(yre, s * l * m, 1);

  sg.g.node_sets = {
      {"bs_ris", s * l, sg.x_br, iota_graph_ids(s, l)},
      {"bs_lu", s * k, sg.x_bu, iota_graph_ids(s, k)},
      {"bs_eve", s * m, sg.x_be, iota_graph_ids(s, m)},
  };

  EdgeSet ru{"ris_lu", 0, 1, true, {}, sg.y_ru};
  EdgeSet re{"ris_eve", 0, 2, true, {}, sg.y_re};
  ru.pairs.reserve(s * l * k);
  re.pairs.reserve(s * l * m);
  for (std::size_t si = 0; si < s; ++si)
    for (std::size_t ll = 0; ll < l; ++ll) {
      for (std::size_t kk = 0; kk < k; ++kk)
        ru.pairs.emplace_back(static_cast<std::int32_t>(si * l + ll),
                              static_cast<std::int32_t>(si * k + kk));
      for (std::size_t mm = 0; mm < m; ++mm)
        re.pairs.emplace_back(static_cast<std::int32_t>(si * l + ll),
                              static_cast<std::int32_t>(si * m + mm));
    }
  sg.g.edge_sets = {std::move(ru), std::move(re)};
  sg.g.validate();
  return sg;
}

Stage1Graph build_stage1(const ChannelRealization& ch) {
  return build_stage1(std::span<const ChannelRealization>(&ch, 1));
}

Tensor interleave_complex(const ComplexPair& a) {
  std::size_t c = a.cols();
  Tensor stacked = concat({transpose(a.re), transpose(a.im)}, 0);  // 2c x n
  std::vector<std::int64_t> idx(2 * c);
  for (std::size_t j = 0; j < c; ++j) {
    idx[2 * j] = static_cast<std::int64_t>(j);
    idx[2 * j + 1] = static_cast<std::int64_t>(c + j);
  }
  return transpose(gather_rows(
      stacked, std::make_shared<const std::vector<std::int64_t>>(std::move(idx))));
}

Stage2Graph build_stage2(std::span<const ChannelRealization> batch,
                         const ChannelTensors& ct, const Tensor& phi,
                         const Tensor& aug_u, const Tensor& aug_e) {
  const auto& b0 = batch[0];
  std::size_t s = batch.size(), n_t = b0.n_t, k = b0.k, m = b0.m;
  if (aug_u->rows() != s * k || aug_e->rows() != s * m)
    throw dimension_error("build_stage2: augmented feature rows must be K and M");

  Stage2Graph sg;
  sg.batch = s;
  sg.n_t = n_t;
  sg.k = k;
  sg.m = m;
  sg.csi = effective_csi_graph(ct, s, n_t, b0.l, k, m, phi);
  sg.csi_lu = interleave_complex(sg.csi.h);
  sg.csi_eve = interleave_complex(sg.csi.f);
  sg.aug_u = aug_u;
  sg.aug_e = aug_e;

  sg.g.node_sets = {
      {"bs_ris_lu", s * k, sg.csi_lu, iota_graph_ids(s, k)},
      {"bs_ris_eve", s * m, sg.csi_eve, iota_graph_ids(s, m)},
  };
  EdgeSet uu{"lu_lu", 0, 0, true, {}, nullptr};
  EdgeSet ue{"lu_eve", 0, 1, true, {}, nullptr};
  EdgeSet ee{"eve_eve", 1, 1, true, {}, nullptr};
  for (std::size_t si = 0; si < s; ++si) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        uu.pairs.emplace_back(static_cast<std::int32_t>(si * k + a),
                              static_cast<std::int32_t>(si * k + b));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < m; ++b)
        ue.pairs.emplace_back(static_cast<std::int32_t>(si * k + a),
                              static_cast<std::int32_t>(si * m + b));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        ee.pairs.emplace_back(static_cast<std::int32_t>(si * m + a),
                              static_cast<std::int32_t>(si * m + b));
  }
  sg.g.edge_sets = {std::move(uu), std::move(ue), std::move(ee)};
  sg.g.validate();
  return sg;
}

Stage2Graph build_stage2(const ChannelRealization& ch, const Tensor& phi,
                         const Tensor& aug_u, const Tensor& aug_e) {
  std::span<const ChannelRealization> batch(&ch, 1);
  return build_stage2(batch, channel_tensors(batch), phi, aug_u, aug_e);
}

}  // namespace rispls
