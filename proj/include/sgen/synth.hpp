#pragma once

#include <string>
#include <vector>

#include "sgen/model.hpp"

namespace sgen {

/// Built-in truth configurations for simulate-and-refit checks:
///   ax-small     M=16 N=32 K=40 R=5, axially symmetric, 22.5..60 N
///   lao-small    M=8  N=32 K=30 R=5, one continent
///   alt-small    M=8  N=32 K=30 R=5, continent with a high range
///   full-grid  M=134 N=288 K=95 R=5, axially symmetric
std::vector<std::string> preset_names();

struct SynthSpec {
  GridSpec grid;
  std::size_t R = 5;
  Variant variant = Variant::AX;
};
SynthSpec preset_spec(const std::string& name);

/// Descriptor layout used by a preset (all ocean for the AX presets).
GeoDescriptors preset_geo(const std::string& name, const GridSpec& grid);

/// Truth model of a preset. `seed` perturbs nothing; presets are fixed so
/// that recovery tolerances can be stated against known values.
SGModel preset_model(const std::string& name);

/// Smoothly varying deterministic mean used by the presets.
MeanModel synthetic_mean(const GridSpec& grid, double lambda = 0.01);

struct SynthOutput {
  SGModel truth;
  GeoDescriptors geo;
  EnsembleField ensemble;
};

SynthOutput synthesize(const std::string& preset, std::uint64_t seed, unsigned workers = 1);

/// Grid with `M` bands evenly spaced from lat0 by dlat and N regular longitudes.
GridSpec make_grid(std::size_t M, std::size_t N, std::size_t K, double lat0, double dlat, int start_year = 2006);

}  // namespace sgen
