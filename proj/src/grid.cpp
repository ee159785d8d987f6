#include "sgen/grid.hpp"

#include <algorithm>
#include <cmath>

#include "sgen/error.hpp"

namespace sgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::SingleRun: return "SingleRun";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NonStationaryParams: return "NonStationaryParams";
    case ErrorCode::NonPositiveRange: return "NonPositiveRange";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::IllConditionedTransform: return "IllConditionedTransform";
    case ErrorCode::OptimizerFailure: return "OptimizerFailure";
    case ErrorCode::BadPartition: return "BadPartition";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooLargeForDense: return "TooLargeForDense";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumFailure: return "ChecksumFailure";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::NegativeSpeed: return "NegativeSpeed";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::vector<double> GridSpec::regular_longitudes(std::size_t N) {
  std::vector<double> lon(N);
  for (std::size_t n = 0; n < N; ++n) lon[n] = 360.0 * static_cast<double>(n) / static_cast<double>(N);
  return lon;
}

void GridSpec::validate() const {
  if (M < 1) throw Error(ErrorCode::DimensionMismatch, "need at least one latitude band");
  if (N < 4 || N % 2 != 0) throw Error(ErrorCode::DimensionMismatch, "N must be even and >= 4");
  if (K < 3) throw Error(ErrorCode::DimensionMismatch, "need at least 3 time steps");
  if (latitudes.size() != M || longitudes.size() != N)
    throw Error(ErrorCode::DimensionMismatch, "grid angle arrays do not match M/N");
  for (std::size_t m = 1; m < M; ++m)
    if (!(latitudes[m] > latitudes[m - 1]))
      throw Error(ErrorCode::MalformedHeader, "latitudes must be strictly increasing");
  const double step = 360.0 / static_cast<double>(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double expect = longitudes[0] + step * static_cast<double>(n);
    if (std::abs(longitudes[n] - expect) > 1e-6 * step)
      throw Error(ErrorCode::MalformedHeader, "longitudes must be equally spaced over 360 degrees");
  }
  if (longitudes[0] < 0.0 || longitudes[0] >= step)
    throw Error(ErrorCode::MalformedHeader, "longitudes must start in [0, 360/N)");
}

EnsembleField::EnsembleField(GridSpec g, std::size_t runs)
    : spec(std::move(g)), R(runs), values(runs * spec.K * spec.M * spec.N, 0.0) {}

void EnsembleField::validate() const {
  spec.validate();
  if (values.size() != R * spec.K * spec.M * spec.N)
    throw Error(ErrorCode::DimensionMismatch, "payload count does not match R*K*M*N");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "ensemble contains a non-finite value");
}

GeoDescriptors::GeoDescriptors(std::size_t m, std::size_t n)
    : M(m), N(n), land_mask(m * n, 0), altitude(m * n, 0.0) {}

GeoDescriptors GeoDescriptors::all_ocean(std::size_t m, std::size_t n) { return GeoDescriptors(m, n); }

void GeoDescriptors::validate() const {
  if (land_mask.size() != M * N || altitude.size() != M * N)
    throw Error(ErrorCode::DimensionMismatch, "descriptor arrays do not match M*N");
  for (double a : altitude)
    if (!std::isfinite(a)) throw Error(ErrorCode::NonFiniteValue, "altitude contains a non-finite value");
}

SurfaceClass classify(const GeoDescriptors& geo, std::size_t m, std::size_t n) {
  if (!geo.is_land(m, n)) return SurfaceClass::Ocean;
  return geo.alt(m, n) >= geo.mountain_threshold ? SurfaceClass::HighMountain : SurfaceClass::Land;
}

Anomalies ensemble_mean_and_anomalies(const EnsembleField& field) {
  if (field.R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  const std::size_t len = field.spec.K * field.spec.M * field.spec.N;
  Anomalies out;
  out.spec = field.spec;
  out.R = field.R;
  out.ensemble_mean.assign(len, 0.0);
  out.values.resize(field.values.size());
  for (std::size_t r = 0; r < field.R; ++r) {
    const double* src = field.values.data() + r * len;
    for (std::size_t i = 0; i < len; ++i) out.ensemble_mean[i] += src[i];
  }
  const double inv = 1.0 / static_cast<double>(field.R);
  for (double& v : out.ensemble_mean) v *= inv;
  for (std::size_t r = 0; r < field.R; ++r) {
    const double* src = field.values.data() + r * len;
    double* dst = out.values.data() + r * len;
    for (std::size_t i = 0; i < len; ++i) dst[i] = src[i] - out.ensemble_mean[i];
  }
  return out;
}

std::vector<double> whittaker_smooth(std::span<const double> y, double lambda) {
  const std::size_t K = y.size();
  if (K < 3) throw Error(ErrorCode::DegenerateSeries, "smoothing needs at least 3 time steps");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::RangeError, "lambda must lie in (0, 1]");

  // Lower band of A = lambda*I + (1-lambda)*D2'D2: band[j][i] = A(i, i-j).
  std::vector<double> d0(K, lambda), d1(K, 0.0), d2(K, 0.0);
  const double pen = 1.0 - lambda;
  const double row[3] = {1.0, -2.0, 1.0};
  for (std::size_t k = 0; k + 2 < K; ++k) {
    for (int a = 0; a < 3; ++a) {
      d0[k + a] += pen * row[a] * row[a];
      for (int b = 0; b < a; ++b) {
        const double v = pen * row[a] * row[b];
        if (a - b == 1) d1[k + a] += v;
        else d2[k + a] += v;
      }
    }
  }

  // Banded LDL^T: A = L diag(D) L^T with unit lower L of bandwidth 2.
  std::vector<double> D(K), l1(K, 0.0), l2(K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    if (i >= 2) l2[i] = d2[i] / D[i - 2];
    if (i >= 1) {
      double v = d1[i];
      if (i >= 2) v -= l2[i] * D[i - 2] * l1[i - 1];
      l1[i] = v / D[i - 1];
    }
    double diag = d0[i];
    if (i >= 1) diag -= l1[i] * l1[i] * D[i - 1];
    if (i >= 2) diag -= l2[i] * l2[i] * D[i - 2];
    D[i] = diag;
  }

  std::vector<double> z(K);
  for (std::size_t i = 0; i < K; ++i) {
    double v = lambda * y[i];
    if (i >= 1) v -= l1[i] * z[i - 1];
    if (i >= 2) v -= l2[i] * z[i - 2];
    z[i] = v;
  }
  for (std::size_t i = 0; i < K; ++i) z[i] /= D[i];
  for (std::size_t i = K; i-- > 0;) {
    if (i + 1 < K) z[i] -= l1[i + 1] * z[i + 1];
    if (i + 2 < K) z[i] -= l2[i + 2] * z[i + 2];
  }
  return z;
}

MeanModel smooth_mean(const Anomalies& anoms, double lambda) {
  const auto& g = anoms.spec;
  if (g.K < 3) throw Error(ErrorCode::DegenerateSeries, "smoothing needs at least 3 time steps");
  MeanModel out;
  out.spec = g;
  out.lambda = lambda;
  out.smoothed.assign(g.K * g.M * g.N, 0.0);
  std::vector<double> series(g.K);
  for (std::size_t m = 0; m < g.M; ++m)
    for (std::size_t n = 0; n < g.N; ++n) {
      for (std::size_t k = 0; k < g.K; ++k) series[k] = anoms.mean_at(k, m, n);
      const auto z = whittaker_smooth(series, lambda);
      for (std::size_t k = 0; k < g.K; ++k) out.smoothed[(k * g.M + m) * g.N + n] = z[k];
    }
  return out;
}

}  // namespace sgen
