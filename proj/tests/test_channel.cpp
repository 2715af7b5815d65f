#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "test_util.hpp"

using namespace rispls;
using testutil::desk_config;
using testutil::random_channel;

TEST_CASE("steering vector basics") {
  CMat a = steering_vector(4, 0.0);
  for (const auto& v : a) {
    CHECK(v.real() == doctest::Approx(1.0));
    CHECK(v.imag() == doctest::Approx(0.0));
  }
  CMat b = steering_vector(2, kPi / 2);
  CHECK(b[0].real() == doctest::Approx(1.0));
  CHECK(b[1].real() == doctest::Approx(-1.0));
  CHECK(b[1].imag() == doctest::Approx(0.0).epsilon(1e-12));

  CMat c = steering_vector(8, 0.7312);
  for (const auto& v : c) CHECK(std::abs(v) == doctest::Approx(1.0));

  CHECK_THROWS_AS(steering_vector(0, 0.0), usage_error);
}

TEST_CASE("amplitude gain example: -20 dB at 1 m") {
  ScenarioConfig cfg = desk_config();
  CHECK(amplitude_gain(cfg, 1.0) == doctest::Approx(0.1));
  // distance symmetry: equal distances give identical large-scale gain
  CHECK(amplitude_gain(cfg, 37.25) == amplitude_gain(cfg, 37.25));
}

TEST_CASE("infinite Rician factor collapses to the LoS response") {
  ScenarioConfig cfg = desk_config(5);
  cfg.rician_beta_db = std::numeric_limits<double>::infinity();
  cfg.lu_radius = 1e-9;  // pin the LU position to the disk center
  ChannelRealization ch = random_channel(cfg);
  double d = dist(cfg.ris_pos, cfg.lu_center);
  double gain = amplitude_gain(cfg, d);
  CMat expect = steering_vector(cfg.l, bearing(cfg.ris_pos, cfg.lu_center));
  for (std::size_t l = 0; l < cfg.l; ++l) {
    CHECK(ch.h_r[0][l].real() == doctest::Approx(gain * expect[l].real()));
    CHECK(ch.h_r[0][l].imag() == doctest::Approx(gain * expect[l].imag()));
  }
}

TEST_CASE("Rayleigh entries match the target variance over many draws") {
  ScenarioConfig cfg = desk_config(9);
  cfg.k = 1;
  cfg.m = 1;
  cfg.lu_radius = 1e-9;
  double d = dist(cfg.bs_pos, cfg.lu_center);
  double target = cfg.rho_linear() * std::pow(d, -cfg.alpha);
  Rng root(cfg.seed);
  double acc = 0;
  std::size_t count = 0;
  std::size_t draws = 100000 / cfg.n_t + 1;
  for (std::size_t i = 0; i < draws; ++i) {
    ChannelRealization ch = sample_scenario(cfg, root.split(i));
    for (const auto& v : ch.h_b[0]) {
      acc += std::norm(v);
      ++count;
    }
  }
  double mean = acc / static_cast<double>(count);
  CHECK(std::fabs(mean - target) / target < 0.03);
}

TEST_CASE("changing K leaves Eve draws untouched") {
  ScenarioConfig a = desk_config(77);
  ScenarioConfig b = a;
  b.k = 3;
  ChannelRealization ca = random_channel(a), cb = random_channel(b);
  REQUIRE(ca.f_b.size() == cb.f_b.size());
  for (std::size_t m = 0; m < ca.f_b.size(); ++m) {
    CHECK(ca.f_b[m] == cb.f_b[m]);
    CHECK(ca.f_r[m] == cb.f_r[m]);
  }
  CHECK(ca.H == cb.H);
}

TEST_CASE("sampling is deterministic given the seed") {
  ScenarioConfig cfg = desk_config(123);
  ChannelRealization a = random_channel(cfg, 4);
  ChannelRealization b = random_channel(cfg, 4);
  CHECK(a.H == b.H);
  CHECK(a.h_b == b.h_b);
  CHECK(a.h_r == b.h_r);
}

TEST_CASE("effective CSI with no RIS reduces to the direct link") {
  ScenarioConfig cfg = desk_config(3);
  cfg.l = 0;
  ChannelRealization ch = random_channel(cfg);
  std::vector<CMat> h, f;
  effective_csi(ch, {}, h, f);
  CHECK(h[0] == ch.h_b[0]);
  CHECK(f[0] == ch.f_b[0]);
}

TEST_CASE("effective CSI: identity phase case") {
  ScenarioConfig cfg = desk_config(31);
  ChannelRealization ch = random_channel(cfg);
  std::vector<double> phi(cfg.l, 0.0);
  std::vector<CMat> h, f;
  effective_csi(ch, phi, h, f);
  for (std::size_t k = 0; k < cfg.k; ++k)
    for (std::size_t a = 0; a < cfg.n_t; ++a) {
      cplx expect = ch.h_b[k][a];
      for (std::size_t l = 0; l < cfg.l; ++l)
        expect += std::conj(ch.H[l * cfg.n_t + a]) * ch.h_r[k][l];
      CHECK(std::abs(h[k][a] - expect) < 1e-12);
    }
}

TEST_CASE("effective CSI is equivariant under reflecting-element permutation") {
  ScenarioConfig cfg = desk_config(41);
  ChannelRealization ch = random_channel(cfg);
  std::vector<double> phi = {0.3, 1.1, 4.4, 2.2};
  std::vector<CMat> h1, f1;
  effective_csi(ch, phi, h1, f1);

  // permute rows of H together with h_r, f_r and phi
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  ChannelRealization cp = ch;
  std::vector<double> pp(cfg.l);
  for (std::size_t l = 0; l < cfg.l; ++l) {
    for (std::size_t a = 0; a < cfg.n_t; ++a)
      cp.H[l * cfg.n_t + a] = ch.H[perm[l] * cfg.n_t + a];
    for (std::size_t k = 0; k < cfg.k; ++k) cp.h_r[k][l] = ch.h_r[k][perm[l]];
    for (std::size_t m = 0; m < cfg.m; ++m) cp.f_r[m][l] = ch.f_r[m][perm[l]];
    pp[l] = phi[perm[l]];
  }
  std::vector<CMat> h2, f2;
  effective_csi(cp, pp, h2, f2);
  for (std::size_t k = 0; k < cfg.k; ++k)
    for (std::size_t a = 0; a < cfg.n_t; ++a)
      CHECK(std::abs(h1[k][a] - h2[k][a]) < 1e-12);
}

TEST_CASE("differentiable effective CSI matches the plain path and its gradient") {
  ScenarioConfig cfg = desk_config(55);
  ChannelRealization ch = random_channel(cfg);
  Rng rng(8);
  std::vector<double> phi_v(cfg.l);
  for (auto& p : phi_v) p = rng.uniform(0, kTwoPi);

  Tensor phi = make_tensor({cfg.l, 1}, std::vector<double>(phi_v), true);
  std::span<const ChannelRealization> batch(&ch, 1);
  CsiTensors csi = effective_csi_graph(batch, phi);

  std::vector<CMat> h, f;
  effective_csi(ch, phi_v, h, f);
  for (std::size_t k = 0; k < cfg.k; ++k)
    for (std::size_t a = 0; a < cfg.n_t; ++a) {
      CHECK(csi.h.re->values[k * cfg.n_t + a] == doctest::Approx(h[k][a].real()));
      CHECK(csi.h.im->values[k * cfg.n_t + a] == doctest::Approx(h[k][a].imag()));
    }

  auto build = [&] {
    CsiTensors c = effective_csi_graph(batch, phi);
    return sum_all(add(abs2(c.h), abs2(c.h)));
  };
  CHECK(fdcheck::max_rel_err(build, {phi}, 1e-6) < 1e-5);
}

TEST_CASE("config validation") {
  ScenarioConfig cfg = desk_config();
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = desk_config();
  cfg.lu_radius = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = desk_config();
  cfg.p_max_dbm = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cfg.validate(), config_error);
}
