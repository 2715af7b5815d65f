#include <doctest.h>

#include <set>

#include "rispls/hetgraph.hpp"
#include "test_util.hpp"

using namespace rispls;
using testutil::desk_config;
using testutil::random_channel;

namespace {

ScenarioConfig small_config(std::size_t l, std::size_t k, std::size_t m,
                            std::uint64_t seed = 1) {
  ScenarioConfig cfg = desk_config(seed);
  cfg.l = l;
  cfg.k = k;
  cfg.m = m;
  return cfg;
}

}  // namespace

TEST_CASE("stage-1 graph counts for (L,K,M)=(2,1,1)") {
  ChannelRealization ch = random_channel(small_config(2, 1, 1));
  Stage1Graph g = build_stage1(ch);
  std::size_t nodes = 0;
  for (const auto& ns : g.g.node_sets) nodes += ns.count;
  CHECK(nodes == 4);
  std::size_t edges = 0;
  for (const auto& es : g.g.edge_sets) edges += es.pairs.size();
  CHECK(edges == 4);  // L*K + L*M
}

TEST_CASE("stage-1 node features are Concat(real, imag) of the CSI") {
  ScenarioConfig cfg = small_config(3, 2, 2, 3);
  ChannelRealization ch = random_channel(cfg);
  Stage1Graph g = build_stage1(ch);
  for (std::size_t t = 0; t < cfg.n_t; ++t) {
    CHECK(g.x_bu->values[t] == ch.h_b[0][t].real());
    CHECK(g.x_bu->values[cfg.n_t + t] == ch.h_b[0][t].imag());
  }
}

TEST_CASE("stage-1 edge features look up the RIS-side CSI entries") {
  ScenarioConfig cfg = small_config(4, 3, 2, 17);
  ChannelRealization ch = random_channel(cfg);
  Stage1Graph g = build_stage1(ch);
  Rng rng(5);
  for (int it = 0; it < 20; ++it) {
    std::size_t l = rng.next_u64() % cfg.l;
    std::size_t k = rng.next_u64() % cfg.k;
    std::size_t row = l * cfg.k + k;
    CHECK(g.y_ru->values[row * 2] == ch.h_r[k][l].real());
    CHECK(g.y_ru->values[row * 2 + 1] == ch.h_r[k][l].imag());
    auto [src, dst] = g.g.edge_sets[0].pairs[row];
    CHECK(src == static_cast<std::int32_t>(l));
    CHECK(dst == static_cast<std::int32_t>(k));
  }
}

TEST_CASE("psi_uni and psi_bi arc counts and feature inheritance") {
  ScenarioConfig cfg = small_config(4, 2, 2, 7);
  ChannelRealization ch = random_channel(cfg);
  Stage1Graph g = build_stage1(ch);

  GraphView uni = psi_uni(g.g, "bs_ris", "bs_lu");
  CHECK(uni.arcs.size() == cfg.l * cfg.k);
  for (const auto& a : uni.arcs) {
    CHECK(a.src < static_cast<std::int32_t>(cfg.l));
    CHECK(a.dst < static_cast<std::int32_t>(cfg.k));
  }
  // inherited edge features are the parent tensor itself
  CHECK(uni.edge_features.get() == g.y_ru.get());

  GraphView bi = psi_bi(g.g, "bs_ris", "bs_lu");
  CHECK(bi.arcs.size() == 2 * cfg.l * cfg.k);
  CHECK(bi.edge_features.get() == g.y_ru.get());

  CHECK_THROWS_AS(psi_uni(g.g, "bs_lu", "bs_eve"), usage_error);
  CHECK_THROWS_AS(psi_uni(g.g, "nope", "bs_lu"), usage_error);
}

TEST_CASE("psi_fc builds complete graphs within one partition") {
  ScenarioConfig cfg = small_config(5, 2, 1, 9);
  ChannelRealization ch = random_channel(cfg);
  Stage1Graph g = build_stage1(ch);

  GraphView fc = psi_fc(g.g, {"bs_ris"}, false);
  CHECK(fc.arcs.size() == cfg.l * (cfg.l - 1));  // n(n-1)/2 undirected pairs

  // joint union over LUs and Eves: complete graph on K+M nodes
  GraphView uni_fc = psi_fc(g.g, {"bs_lu", "bs_eve"}, true);
  std::size_t n = cfg.k + cfg.m;
  CHECK(uni_fc.arcs.size() == n * (n - 1));

  // disjoint per-type call: no cross-type arcs
  GraphView dis = psi_fc(g.g, {"bs_ris", "bs_lu"}, false);
  for (const auto& a : dis.arcs) {
    bool src_ris = a.src < static_cast<std::int32_t>(cfg.l);
    bool dst_ris = a.dst < static_cast<std::int32_t>(cfg.l);
    CHECK(src_ris == dst_ris);
  }
}

TEST_CASE("psi_fc never connects across batch samples") {
  ScenarioConfig cfg = small_config(2, 2, 1, 21);
  std::vector<ChannelRealization> batch = {random_channel(cfg, 0),
                                           random_channel(cfg, 1)};
  Stage1Graph g = build_stage1(batch);
  GraphView fc = psi_fc(g.g, {"bs_lu"}, false);
  CHECK(fc.arcs.size() == 2 * 2);  // per sample: 2 arcs
  for (const auto& a : fc.arcs) CHECK((a.src / 2) == (a.dst / 2));
}

TEST_CASE("psi_fc rejects empty sets") {
  HeteroGraph g;
  g.node_sets.push_back({"empty", 0, nullptr, {}});
  CHECK_THROWS_AS(psi_fc(g, {"empty"}, false), usage_error);
}

TEST_CASE("build_stage1 is equivariant under LU permutation") {
  ScenarioConfig cfg = small_config(3, 2, 1, 33);
  ChannelRealization ch = random_channel(cfg);
  ChannelRealization cp = ch;
  std::swap(cp.h_b[0], cp.h_b[1]);
  std::swap(cp.h_r[0], cp.h_r[1]);
  std::swap(cp.sigma2[0], cp.sigma2[1]);

  Stage1Graph a = build_stage1(ch);
  Stage1Graph b = build_stage1(cp);

  // node rows swap
  for (std::size_t c = 0; c < 2 * cfg.n_t; ++c) {
    CHECK(a.x_bu->values[c] == b.x_bu->values[2 * cfg.n_t + c]);
    CHECK(a.x_bu->values[2 * cfg.n_t + c] == b.x_bu->values[c]);
  }
  // edge features relabel consistently: <l, k> of a equals <l, perm(k)> of b
  for (std::size_t l = 0; l < cfg.l; ++l)
    for (std::size_t k = 0; k < cfg.k; ++k) {
      std::size_t ra = l * cfg.k + k;
      std::size_t rb = l * cfg.k + (1 - k);
      CHECK(a.y_ru->values[ra * 2] == b.y_ru->values[rb * 2]);
      CHECK(a.y_ru->values[ra * 2 + 1] == b.y_ru->values[rb * 2 + 1]);
    }
}

TEST_CASE("stage-2 graph structure") {
  ScenarioConfig cfg = small_config(4, 2, 1, 51);
  ChannelRealization ch = random_channel(cfg);
  Tensor phi = make_tensor({cfg.l, 1});
  Tensor aug_u = make_tensor({cfg.k, 640});
  Tensor aug_e = make_tensor({cfg.m, 640});
  Stage2Graph g = build_stage2(ch, phi, aug_u, aug_e);

  std::size_t nodes = 0;
  for (const auto& ns : g.g.node_sets) nodes += ns.count;
  CHECK(nodes == cfg.k + cfg.m);
  std::size_t pairs = 0;
  for (const auto& es : g.g.edge_sets) pairs += es.pairs.size();
  CHECK(pairs == 3);  // pairs within the 3-node union
  for (const auto& es : g.g.edge_sets) CHECK_FALSE(es.features);

  // payload equals the differentiable effective CSI, interleaved re/im
  std::span<const ChannelRealization> batch(&ch, 1);
  CsiTensors csi = effective_csi_graph(batch, phi);
  for (std::size_t i = 0; i < cfg.k * cfg.n_t; ++i) {
    CHECK(g.csi_lu->values[2 * i] == doctest::Approx(csi.h.re->values[i]));
    CHECK(g.csi_lu->values[2 * i + 1] == doctest::Approx(csi.h.im->values[i]));
  }

  CHECK_THROWS_AS(build_stage2(ch, phi, make_tensor({cfg.k + 1, 640}), aug_e),
                  dimension_error);
}

TEST_CASE("graph validation catches inconsistencies") {
  ScenarioConfig cfg = small_config(2, 1, 1, 61);
  ChannelRealization ch = random_channel(cfg);
  Stage1Graph g = build_stage1(ch);
  g.g.edge_sets[0].pairs.push_back({99, 0});
  CHECK_THROWS_AS(g.g.validate(), dimension_error);
}
