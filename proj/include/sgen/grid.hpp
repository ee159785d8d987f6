#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sgen {

/// Geometry of a regular latitude-longitude grid observed over K years.
struct GridSpec {
  std::size_t M = 0;  // latitude bands
  std::size_t N = 0;  // longitudes
  std::size_t K = 0;  // time steps
  std::vector<double> latitudes;   // degrees, strictly increasing
  std::vector<double> longitudes;  // degrees, equally spaced over [0, 360)
  int start_year = 0;

  /// Throws DimensionMismatch / MalformedHeader when the invariants fail.
  void validate() const;

  std::size_t locations() const { return M * N; }
  std::size_t loc(std::size_t m, std::size_t n) const { return m * N + n; }

  bool operator==(const GridSpec&) const = default;

  /// Equally spaced longitudes 0, 360/N, ...
  static std::vector<double> regular_longitudes(std::size_t N);
};

/// R runs x K years x M bands x N longitudes, row-major in (r, k, m, n).
struct EnsembleField {
  GridSpec spec;
  std::size_t R = 0;
  std::vector<double> values;
  std::string units = "m s-1";

  EnsembleField() = default;
  EnsembleField(GridSpec g, std::size_t runs);

  std::size_t index(std::size_t r, std::size_t k, std::size_t m, std::size_t n) const {
    return ((r * spec.K + k) * spec.M + m) * spec.N + n;
  }
  double& at(std::size_t r, std::size_t k, std::size_t m, std::size_t n) { return values[index(r, k, m, n)]; }
  double at(std::size_t r, std::size_t k, std::size_t m, std::size_t n) const { return values[index(r, k, m, n)]; }

  std::span<const double> run(std::size_t r) const {
    const std::size_t len = spec.K * spec.M * spec.N;
    return {values.data() + r * len, len};
  }

  void validate() const;
};

enum class SurfaceClass { Ocean, Land, HighMountain };

struct GeoDescriptors {
  std::size_t M = 0;
  std::size_t N = 0;
  std::vector<std::uint8_t> land_mask;  // M*N, 1 = land
  std::vector<double> altitude;         // M*N, meters
  double mountain_threshold = 1000.0;

  GeoDescriptors() = default;
  GeoDescriptors(std::size_t m, std::size_t n);

  static GeoDescriptors all_ocean(std::size_t m, std::size_t n);

  bool is_land(std::size_t m, std::size_t n) const { return land_mask[m * N + n] != 0; }
  double alt(std::size_t m, std::size_t n) const { return altitude[m * N + n]; }

  void validate() const;
};

SurfaceClass classify(const GeoDescriptors& geo, std::size_t m, std::size_t n);

/// Run-minus-mean contrasts D_r = W_r - mean, same layout as EnsembleField.
struct Anomalies {
  GridSpec spec;
  std::size_t R = 0;
  std::vector<double> values;         // R*K*M*N
  std::vector<double> ensemble_mean;  // K*M*N

  std::size_t index(std::size_t r, std::size_t k, std::size_t m, std::size_t n) const {
    return ((r * spec.K + k) * spec.M + m) * spec.N + n;
  }
  double at(std::size_t r, std::size_t k, std::size_t m, std::size_t n) const { return values[index(r, k, m, n)]; }
  double mean_at(std::size_t k, std::size_t m, std::size_t n) const {
    return ensemble_mean[(k * spec.M + m) * spec.N + n];
  }
};

Anomalies ensemble_mean_and_anomalies(const EnsembleField& field);

/// Per-location penalized least-squares trend of the ensemble mean.
struct MeanModel {
  GridSpec spec;
  double lambda = 0.01;
  std::vector<double> smoothed;  // K*M*N, (k, m, n) order

  double at(std::size_t k, std::size_t m, std::size_t n) const {
    return smoothed[(k * spec.M + m) * spec.N + n];
  }
};

/// Minimizes lambda*|y - z|^2 + (1 - lambda)*|second differences of z|^2 for
/// one series. Pentadiagonal SPD system solved by banded LDL^T.
std::vector<double> whittaker_smooth(std::span<const double> y, double lambda);

MeanModel smooth_mean(const Anomalies& anoms, double lambda);

}  // namespace sgen
