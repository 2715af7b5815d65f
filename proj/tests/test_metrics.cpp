#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "reference_impls.hpp"
#include "test_util.hpp"

using namespace rispls;
using testutil::desk_config;
using testutil::design_tensors;
using testutil::random_channel;
using testutil::random_design;

namespace {

// single LU, no Eves, no RIS, unit-ish channel
ChannelRealization simple_channel(double sigma2, std::size_t n_t = 2) {
  ChannelRealization ch;
  ch.n_t = n_t;
  ch.l = 0;
  ch.k = 1;
  ch.m = 0;
  ch.h_b = {CMat(n_t, 0.0)};
  ch.h_b[0][0] = 1.0;
  ch.h_r = {CMat{}};
  ch.sigma2 = {sigma2};
  return ch;
}

}  // namespace

TEST_CASE("rate_lu: matched power gives exactly one bit") {
  double sigma2 = 1e-11;
  ChannelRealization ch = simple_channel(sigma2);
  TransmitDesign d;
  d.w = CMat(ch.n_t, 0.0);
  d.w[0] = std::sqrt(sigma2);  // |h^H w|^2 == sigma2
  CHECK(rate_lu(ch, d, 0) == doctest::Approx(1.0));

  d.w[0] = 0.0;
  CHECK(rate_lu(ch, d, 0) == doctest::Approx(0.0));
}

TEST_CASE("rate_eve: nulled Eve sees nothing") {
  ChannelRealization ch;
  ch.n_t = 2;
  ch.l = 0;
  ch.k = 1;
  ch.m = 1;
  ch.h_b = {CMat{1.0, 0.0}};
  ch.f_b = {CMat{0.0, 1.0}};  // f orthogonal to h
  ch.h_r = {CMat{}};
  ch.f_r = {CMat{}};
  ch.sigma2 = {1e-11};
  ch.sigma2_e = {1e-11};
  TransmitDesign d;
  d.w = CMat{0.5, 0.0};       // w orthogonal to f
  d.z = CMat{0.0, 0.0};       // AN aligned to null f (zero here)
  CHECK(rate_eve(ch, d, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("see: trivial cases") {
  ScenarioConfig cfg = desk_config(2);
  ChannelRealization ch = random_channel(cfg);
  TransmitDesign zero;
  zero.phi.assign(cfg.l, 0.0);
  zero.w.assign(cfg.k * cfg.n_t, 0.0);
  zero.z.assign(cfg.m * cfg.n_t, 0.0);
  SeeBreakdown b = see(ch, zero, cfg.p_c_watt);
  for (double s : b.secrecy) CHECK(s == 0.0);
  CHECK(b.see == 0.0);

  // sum secrecy 1, power 0.5, P_C 0.5 -> see = 1
  double sigma2 = 1e-11;
  ChannelRealization sc = simple_channel(sigma2);
  TransmitDesign d;
  d.w = CMat(sc.n_t, 0.0);
  sc.h_b[0][0] = std::sqrt(sigma2 / 0.5);
  d.w[0] = std::sqrt(0.5);
  SeeBreakdown s2 = see(sc, d, 0.5);
  CHECK(s2.total_power == doctest::Approx(0.5));
  CHECK(s2.see == doctest::Approx(1.0));
}

TEST_CASE("see and training_loss match the scalar-loop oracles") {
  ScenarioConfig cfg = desk_config(10);
  Rng rng(99);
  for (int it = 0; it < 200; ++it) {
    ChannelRealization ch = random_channel(cfg, static_cast<std::uint64_t>(it));
    TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);

    double ref_see = refimpl::see(ch, d, cfg.p_c_watt);
    SeeBreakdown b = see(ch, d, cfg.p_c_watt);
    CHECK(std::fabs(b.see - ref_see) < 1e-10 * std::max(1.0, std::fabs(ref_see)));

    DesignTensors dt = design_tensors(d, cfg.n_t, false);
    NoGradGuard ng;
    Tensor loss = training_loss(ch, dt, 0.1, cfg.p_c_watt);
    double ref_loss = refimpl::training_loss(ch, d, 0.1, cfg.p_c_watt);
    CHECK(std::fabs(loss->values[0] - ref_loss) <
          1e-10 * std::max(1.0, std::fabs(ref_loss)));
  }
}

TEST_CASE("training_loss trivial cases") {
  ScenarioConfig cfg = desk_config(20);
  ChannelRealization ch = random_channel(cfg);
  Rng rng(3);
  TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);

  // gamma = 0 reduces to minus the sum-rate energy efficiency
  DesignTensors dt = design_tensors(d, cfg.n_t, false);
  NoGradGuard ng;
  double loss0 = training_loss(ch, dt, 0.0, cfg.p_c_watt)->values[0];
  refimpl::Rates r = refimpl::rates(ch, d);
  double num = 0;
  for (double v : r.rate) num += v;
  double ee = num / (design_power(d) + cfg.p_c_watt);
  CHECK(loss0 == doctest::Approx(-ee));

  // zero design -> loss 0
  TransmitDesign zero;
  zero.phi.assign(cfg.l, 0.0);
  zero.w.assign(cfg.k * cfg.n_t, 0.0);
  zero.z.assign(cfg.m * cfg.n_t, 0.0);
  DesignTensors zt = design_tensors(zero, cfg.n_t, false);
  CHECK(training_loss(ch, zt, 0.1, cfg.p_c_watt)->values[0] == doctest::Approx(0.0));
}

TEST_CASE("training_loss gradient matches finite differences") {
  ScenarioConfig cfg = desk_config(30);
  ChannelRealization ch = random_channel(cfg);
  Rng rng(4);
  TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);
  DesignTensors dt = design_tensors(d, cfg.n_t, true);
  auto build = [&] { return training_loss(ch, dt, 0.1, cfg.p_c_watt); };
  double err = fdcheck::max_rel_err(build, {dt.w.re, dt.w.im, dt.z.re, dt.z.im,
                                            dt.phi});
  CHECK(err < 1e-4);
}

TEST_CASE("see is invariant under LU and Eve permutations") {
  ScenarioConfig cfg = desk_config(40);
  Rng rng(5);
  for (int it = 0; it < 20; ++it) {
    ChannelRealization ch = random_channel(cfg, static_cast<std::uint64_t>(it));
    TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);
    double base = see(ch, d, cfg.p_c_watt).see;

    ChannelRealization cp = ch;
    TransmitDesign dp = d;
    std::swap(cp.h_b[0], cp.h_b[1]);
    std::swap(cp.h_r[0], cp.h_r[1]);
    std::swap(cp.sigma2[0], cp.sigma2[1]);
    for (std::size_t t = 0; t < cfg.n_t; ++t)
      std::swap(dp.w[t], dp.w[cfg.n_t + t]);
    CHECK(see(cp, dp, cfg.p_c_watt).see == doctest::Approx(base));

    std::swap(cp.f_b[0], cp.f_b[1]);
    std::swap(cp.f_r[0], cp.f_r[1]);
    std::swap(cp.sigma2_e[0], cp.sigma2_e[1]);
    for (std::size_t t = 0; t < cfg.n_t; ++t)
      std::swap(dp.z[t], dp.z[cfg.n_t + t]);
    CHECK(see(cp, dp, cfg.p_c_watt).see == doctest::Approx(base));
  }
}

TEST_CASE("uniform design scaling changes power quadratically, oracle agrees") {
  ScenarioConfig cfg = desk_config(50);
  Rng rng(6);
  ChannelRealization ch = random_channel(cfg);
  TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);
  double p0 = design_power(d);
  for (double c : {0.25, 0.5, 0.9, 1.0}) {
    TransmitDesign ds = d;
    for (auto& v : ds.w) v *= c;
    for (auto& v : ds.z) v *= c;
    SeeBreakdown b = see(ch, ds, cfg.p_c_watt);
    CHECK(b.total_power == doctest::Approx(c * c * p0));
    CHECK(std::fabs(b.see - refimpl::see(ch, ds, cfg.p_c_watt)) < 1e-10);
  }
}

TEST_CASE("secrecy clamps to zero when the best Eve outreads the LU") {
  ScenarioConfig cfg = desk_config(60);
  cfg.eve_center = cfg.lu_center;  // Eves sit on top of the LUs
  Rng rng(7);
  for (int it = 0; it < 50; ++it) {
    ChannelRealization ch = random_channel(cfg, static_cast<std::uint64_t>(it));
    TransmitDesign d = random_design(ch, cfg.p_max_watt(), rng);
    SeeBreakdown b = see(ch, d, cfg.p_c_watt);
    CHECK(b.see >= 0.0);
    for (std::size_t k = 0; k < cfg.k; ++k) {
      double worst = 0;
      for (std::size_t m = 0; m < cfg.m; ++m)
        worst = std::max(worst, b.leakage[m * cfg.k + k]);
      if (worst > b.rate[k]) CHECK(b.secrecy[k] == 0.0);
    }
  }
}
