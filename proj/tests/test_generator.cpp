#include <cmath>
#include <cstring>

#include "doctest.h"
#include "helpers.hpp"
#include "sgen/container.hpp"
#include "sgen/generator.hpp"
#include "sgen/rng.hpp"
#include "sgen/synth.hpp"

using namespace sgen;

namespace {
SGModel small_model() {
  SGModel model = preset_model("lao-small");
  // Shrink to N=16, M=8, K=20 keeping the preset parameters.
  const auto grid = make_grid(8, 16, 20, 20.0, 5.0);
  GeoDescriptors geo(8, 16);
  for (std::size_t m = 0; m < 8; ++m)
    for (std::size_t n = 3; n < 9; ++n) {
      geo.land_mask[m * 16 + n] = 1;
      geo.altitude[m * 16 + n] = 400;
    }
  model.grid = grid;
  model.mean = compress_mean(synthetic_mean(grid));
  TemporalParams tp(8, 16);
  for (std::size_t i = 0; i < 128; ++i) {
    tp.phi1[i] = float(0.4 + 0.002 * double(i));
    tp.phi2[i] = -0.3f;
    tp.sd[i] = float(0.5 + 0.003 * double(i));
  }
  model.temporal = tp;
  model.surface.clear();
  model.altitude.clear();
  encode_geometry(geo, model.surface, model.altitude);
  model.lat.a = 0.1;
  model.lat.b = 0.05;
  model.meta.blocks = 1;
  model.validate();
  return model;
}
}  // namespace

TEST_CASE("Philox known-answer vectors") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams") {
  auto a = rng_stream(42, 1, 2, 3), b = rng_stream(42, 1, 2, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  const std::array<std::array<std::uint32_t, 4>, 4> others{{{43, 1, 2, 3}, {42, 2, 2, 3}, {42, 1, 3, 3}, {42, 1, 2, 4}}};
  for (const auto& o : others) {
    auto x = rng_stream(42, 1, 2, 3), y = rng_stream(o[0], o[1], o[2], o[3]);
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 100000; ++i) {
      const double u = x.normal(), v = y.normal();
      sxy += u * v;
      sxx += u * u;
      syy += v * v;
    }
    CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.01);
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054));
}

TEST_CASE("generation is reproducible and order free") {
  const auto model = small_model();
  const Generator gen(model);
  const auto a = gen.generate(6, 99, 1);
  const auto b = gen.generate(6, 99, 4);
  CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
  const auto tail = gen.generate(2, 99, 1, 4);
  CHECK(std::memcmp(tail.values.data(), a.values.data() + 4 * tail.values.size() / 2,
                    tail.values.size() * sizeof(double)) == 0);
  const auto c = gen.generate(1, 100, 1);
  CHECK(c.values[0] != a.values[0]);

  const auto dir = testutil::temp_dir("gen");
  GenerationRequest req;
  req.count = 3;
  req.seed = 5;
  req.pattern = (dir / "s_{i}.ensf").string();
  const auto files = generate_files(model, req);
  REQUIRE(files.size() == 3);
  const auto f0 = detail::read_file(files[1]);
  req.pattern = (dir / "t_{i}.ensf").string();
  const auto again = generate_files(model, req);
  CHECK(detail::read_file(again[1]) == f0);
}

TEST_CASE("surrogate mean and within-band covariance") {
  const auto model = small_model();
  const Generator gen(model);
  const std::size_t S = 1000;
  const auto ens = gen.generate(S, 2024, 2);
  const auto& g = model.grid;
  const std::size_t L = g.K * g.M * g.N;

  // Mean over the first 500 runs.
  std::size_t within = 0;
  for (std::size_t k = 0; k < g.K; ++k)
    for (std::size_t m = 0; m < g.M; ++m)
      for (std::size_t n = 0; n < g.N; ++n) {
        double s = 0;
        for (std::size_t r = 0; r < 500; ++r) s += ens.at(r, k, m, n);
        const double sd = std::sqrt(model_marginal_variance(model, m, n));
        within += std::abs(s / 500 - model.mean.at(k, m, n)) <= 3 * sd / std::sqrt(500.0);
      }
  CHECK(double(within) >= 0.99 * double(L));

  // Whiten with the true temporal model and compare band covariances.
  std::vector<double> cube(ens.values);
  for (std::size_t r = 0; r < S; ++r)
    for (std::size_t i = 0; i < L; ++i) cube[r * L + i] -= model.mean.at(i / (g.M * g.N), (i / g.N) % g.M, i % g.N);
  const auto h = whiten_cube(g, S, cube, model.temporal, true, false);
  const auto cm = chain_moments(model.lat, g.M, g.N, model.meta.blocks);
  const double n = double(S * h.T);
  std::size_t bad = 0, total = 0;
  for (std::size_t m : {0u, 5u}) {
    const auto C = model_band_covariance(model, cm, m);
    for (std::size_t i = 0; i < g.N; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0;
        for (std::size_t r = 0; r < S; ++r)
          for (std::size_t t = 0; t < h.T; ++t) s += h.at(r, t, m, i) * h.at(r, t, m, j);
        const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / n);
        bad += std::abs(s / n - C(i, j)) > 4 * se;
        ++total;
      }
  }
  CHECK(bad == 0);
}

TEST_CASE("marginal variance composition") {
  SGModel model = preset_model("ax-small");
  for (auto& v : model.temporal.phi1) v = 0;
  for (auto& v : model.temporal.phi2) v = 0;
  for (auto& v : model.temporal.sd) v = 1.5;
  model.lat.a = model.lat.b = 0;
  double spatial = 0;
  const auto& b = model.bands[3].beta[kOcean];
  for (std::size_t c = 0; c < model.grid.N; ++c) spatial += component_spectrum_sq(double(c), b.phi, b.alpha, b.nu, model.grid.N);
  CHECK(model_marginal_variance(model, 3, 7) == doctest::Approx(2.25 * spatial).epsilon(1e-10));
}
