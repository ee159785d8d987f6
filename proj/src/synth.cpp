#include "sgen/synth.hpp"

#include <cmath>
#include <numbers>

#include "sgen/error.hpp"
#include "sgen/generator.hpp"

namespace sgen {

using std::numbers::pi;

std::vector<std::string> preset_names() { return {"ax-small", "lao-small", "alt-small", "full-grid"}; }

GridSpec make_grid(std::size_t M, std::size_t N, std::size_t K, double lat0, double dlat, int start_year) {
  GridSpec g;
  g.M = M;
  g.N = N;
  g.K = K;
  g.start_year = start_year;
  for (std::size_t m = 0; m < M; ++m) g.latitudes.push_back(lat0 + dlat * static_cast<double>(m));
  g.longitudes = GridSpec::regular_longitudes(N);
  return g;
}

SynthSpec preset_spec(const std::string& name) {
  SynthSpec s;
  if (name == "ax-small") {
    s.grid = make_grid(16, 32, 40, 22.5, 2.5);
  } else if (name == "lao-small") {
    s.grid = make_grid(8, 32, 30, 20.0, 5.0);
    s.variant = Variant::LAO;
  } else if (name == "alt-small") {
    s.grid = make_grid(8, 32, 30, 20.0, 5.0);
    s.variant = Variant::ALT;
  } else if (name == "full-grid") {
    s.grid = make_grid(134, 288, 95, -62.0, 124.0 / 133.0);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown preset '" + name + "'");
  }
  return s;
}

GeoDescriptors preset_geo(const std::string& name, const GridSpec& grid) {
  GeoDescriptors geo = GeoDescriptors::all_ocean(grid.M, grid.N);
  if (name != "lao-small" && name != "alt-small") return geo;
  for (std::size_t m = 0; m < grid.M; ++m) {
    // Continent drifting eastward with latitude; a high range in its core.
    const std::size_t start = 6 + m / 2, width = 12;
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t n = (start + j) % grid.N;
      geo.land_mask[m * grid.N + n] = 1;
      const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(width);
      double alt = 200.0 + 300.0 * std::sin(pi * x);
      if (j >= 4 && j < 8) alt = 1500.0 + 1500.0 * std::sin(pi * (static_cast<double>(j) - 3.5) / 4.0);
      geo.altitude[m * grid.N + n] = alt;
    }
  }
  return geo;
}

MeanModel synthetic_mean(const GridSpec& g, double lambda) {
  MeanModel mean;
  mean.spec = g;
  mean.lambda = lambda;
  mean.smoothed.resize(g.K * g.M * g.N);
  for (std::size_t k = 0; k < g.K; ++k)
    for (std::size_t m = 0; m < g.M; ++m)
      for (std::size_t n = 0; n < g.N; ++n) {
        const double lat = g.latitudes[m] * pi / 180.0, lon = g.longitudes[n] * pi / 180.0;
        const double t = static_cast<double>(k) / static_cast<double>(g.K);
        mean.smoothed[(k * g.M + m) * g.N + n] =
            6.0 + 2.0 * std::cos(lat) + 0.8 * std::sin(lon + lat) + 0.3 * t + 0.2 * std::sin(2.0 * pi * t) * std::cos(lon);
      }
  return mean;
}

SGModel preset_model(const std::string& name) {
  const SynthSpec spec = preset_spec(name);
  const auto& g = spec.grid;
  SGModel model;
  model.grid = g;
  model.variant = spec.variant;
  model.mean = compress_mean(synthetic_mean(g));
  model.temporal = TemporalParams(g.M, g.N);
  for (std::size_t m = 0; m < g.M; ++m)
    for (std::size_t n = 0; n < g.N; ++n) {
      const double u = static_cast<double>(m) / static_cast<double>(std::max<std::size_t>(g.M - 1, 1));
      const double v = 2.0 * pi * static_cast<double>(n) / static_cast<double>(g.N);
      const std::size_t i = g.loc(m, n);
      model.temporal.phi1[i] = static_cast<float>(0.45 + 0.15 * std::sin(v) + 0.1 * u);
      model.temporal.phi2[i] = static_cast<float>(-0.5 + 0.1 * std::cos(v));
      model.temporal.sd[i] = static_cast<float>(0.6 + 0.2 * u + 0.1 * std::cos(v));
    }
  const GeoDescriptors geo = preset_geo(name, g);
  if (spec.variant != Variant::AX) encode_geometry(geo, model.surface, model.altitude);
  for (std::size_t m = 0; m < g.M; ++m) {
    const double u = static_cast<double>(m) / static_cast<double>(std::max<std::size_t>(g.M - 1, 1));
    BandSpectrumParams b;
    b.variant = spec.variant;
    b.beta[kOcean] = {1.0 + 0.5 * u, 0.6 + 0.3 * u, 0.8 + 0.4 * u};
    b.beta[kPlainLand] = {2.0 + 0.5 * u, 0.4, 0.4};
    b.beta[kMountain] = b.beta[kPlainLand];
    if (spec.variant == Variant::ALT) {
      b.beta[kMountain] = {1.5, 0.5, 0.8};
      b.gamma_phi = 0.0002;
      b.gamma_alpha = 0.0;
      b.gamma_nu = 0.0008;
    }
    if (spec.variant != Variant::AX) {
      b.g = 1;
      b.r = 2.5;
    }
    model.bands.push_back(b);
  }
  LatCoherenceParams lat;
  lat.tropical = tropical_flags(g.latitudes, 30.0);
  lat.xi_global = 0.9;
  lat.tau_global = 0.6;
  lat.xi.assign(g.M, 0.9);
  lat.tau.assign(g.M, 0.6);
  lat.a = 0.0;
  lat.b = 0.0;
  model.lat = lat;
  model.meta.blocks = default_block_count(g.N);
  model.meta.var1 = false;
  model.validate();
  return model;
}

SynthOutput synthesize(const std::string& preset, std::uint64_t seed, unsigned workers) {
  SynthOutput out;
  const SynthSpec spec = preset_spec(preset);
  out.truth = preset_model(preset);
  out.geo = preset_geo(preset, spec.grid);
  const Generator gen(out.truth);
  out.ensemble = gen.generate(spec.R, seed, workers);
  return out;
}

}  // namespace sgen
