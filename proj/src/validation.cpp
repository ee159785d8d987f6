#include "sgen/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgen/error.hpp"
#include "sgen/generator.hpp"

namespace sgen {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ContrastStats contrast_variances(const InnovationField& h) {
  const std::size_t M = h.spec.M, N = h.spec.N, R = h.R, T = h.T;
  ContrastStats c;
  c.M = M;
  c.N = N;
  c.ew.assign(M * N, 0.0);
  c.ns.assign(M * N, 0.0);
  for (std::size_t n = 0; n < N; ++n) c.ns[n] = kNaN;
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < N; ++n) {
          const double v = h.at(r, t, m, n);
          const double dw = v - h.at(r, t, m, n == 0 ? N - 1 : n - 1);
          c.ew[m * N + n] += dw * dw;
          if (m > 0) {
            const double ds = v - h.at(r, t, m - 1, n);
            c.ns[m * N + n] += ds * ds;
          }
        }
  double scale = 1.0 / static_cast<double>(R * T);
  if (h.centered && R > 1) scale *= static_cast<double>(R) / static_cast<double>(R - 1);
  for (auto& v : c.ew) v *= scale;
  for (std::size_t i = N; i < M * N; ++i) c.ns[i] *= scale;
  return c;
}

ContrastStats fitted_contrasts(const SGModel& model) {
  const std::size_t M = model.grid.M, N = model.grid.N;
  const ChainMoments cm = chain_moments(model.lat, M, N, 1);
  ContrastStats c;
  c.M = M;
  c.N = N;
  c.fitted = true;
  c.ew.assign(M * N, 0.0);
  c.ns.assign(M * N, kNaN);
  Eigen::MatrixXd prev;
  for (std::size_t m = 0; m < M; ++m) {
    const Eigen::MatrixXd C = model_band_covariance(model, cm, m);
    for (std::size_t n = 0; n < N; ++n) {
      const auto i = static_cast<Eigen::Index>(n), j = static_cast<Eigen::Index>(n == 0 ? N - 1 : n - 1);
      c.ew[m * N + n] = std::max(0.0, C(i, i) + C(j, j) - 2.0 * C(i, j));
    }
    if (m > 0) {
      const Eigen::MatrixXd X = model_cross_covariance(model, cm, m);
      for (std::size_t n = 0; n < N; ++n) {
        const auto i = static_cast<Eigen::Index>(n);
        c.ns[m * N + n] = std::max(0.0, C(i, i) + prev(i, i) - 2.0 * X(i, i));
      }
    }
    prev = C;
  }
  return c;
}

std::vector<double> contrast_improvement(std::span<const double> empirical, std::span<const double> fitted_a,
                                         std::span<const double> fitted_b) {
  if (empirical.size() != fitted_a.size() || empirical.size() != fitted_b.size())
    throw Error(ErrorCode::GridMismatch, "contrast maps differ in size");
  std::vector<double> out(empirical.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double da = empirical[i] - fitted_a[i], db = empirical[i] - fitted_b[i];
    out[i] = da * da - db * db;
  }
  return out;
}

double quantile7(std::vector<double> values, double p) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::RangeError, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Quartiles quartiles(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  return {quantile7(v, 0.25), quantile7(v, 0.5), quantile7(v, 0.75)};
}

std::vector<double> linear_trend(const EnsembleField& field, std::size_t run, int year_from, int year_to) {
  const auto& g = field.spec;
  if (run >= field.R) throw Error(ErrorCode::RangeError, "run index out of range");
  const long k0 = year_from - g.start_year, k1 = year_to - g.start_year;
  if (k0 < 0 || k1 >= static_cast<long>(g.K) || k1 - k0 < 1)
    throw Error(ErrorCode::RangeError, "year range outside the record or shorter than two years");
  const double n = static_cast<double>(k1 - k0 + 1);
  double xbar = 0.0;
  for (long k = k0; k <= k1; ++k) xbar += static_cast<double>(g.start_year + k);
  xbar /= n;
  double sxx = 0.0;
  for (long k = k0; k <= k1; ++k) {
    const double d = static_cast<double>(g.start_year + k) - xbar;
    sxx += d * d;
  }
  std::vector<double> slope(g.M * g.N, 0.0);
  for (std::size_t m = 0; m < g.M; ++m)
    for (std::size_t nn = 0; nn < g.N; ++nn) {
      double ybar = 0.0;
      for (long k = k0; k <= k1; ++k) ybar += field.at(run, static_cast<std::size_t>(k), m, nn);
      ybar /= n;
      double sxy = 0.0;
      for (long k = k0; k <= k1; ++k)
        sxy += (static_cast<double>(g.start_year + k) - xbar) * (field.at(run, static_cast<std::size_t>(k), m, nn) - ybar);
      slope[g.loc(m, nn)] = sxy / sxx;
    }
  return slope;
}

double wind_power_density(double speed10m, const WindPowerConstants& c) {
  if (speed10m < 0.0 || std::isnan(speed10m)) throw Error(ErrorCode::NegativeSpeed, "wind speed must be non-negative");
  const double u = speed10m * std::pow(c.hub_height / c.reference_height, c.shear_exponent);
  return 0.5 * c.air_density * u * u * u;
}

std::array<std::vector<double>, 3> ensemble_percentiles(const EnsembleField& field, std::size_t k) {
  const auto& g = field.spec;
  if (field.R < 2) throw Error(ErrorCode::SingleRun, "percentiles need at least two runs");
  if (k >= g.K) throw Error(ErrorCode::RangeError, "time index out of range");
  std::array<std::vector<double>, 3> out;
  for (auto& v : out) v.resize(g.M * g.N);
  std::vector<double> vals(field.R);
  for (std::size_t m = 0; m < g.M; ++m)
    for (std::size_t n = 0; n < g.N; ++n) {
      for (std::size_t r = 0; r < field.R; ++r) vals[r] = field.at(r, k, m, n);
      out[0][g.loc(m, n)] = quantile7(vals, 0.025);
      out[1][g.loc(m, n)] = quantile7(vals, 0.5);
      out[2][g.loc(m, n)] = quantile7(vals, 0.975);
    }
  return out;
}

StorageReport storage_report(const std::filesystem::path& model_file,
                             const std::vector<std::filesystem::path>& ensemble_files) {
  auto size_of = [](const std::filesystem::path& p) {
    std::error_code ec;
    const auto s = std::filesystem::file_size(p, ec);
    if (ec) throw Error(ErrorCode::IOError, "cannot stat " + p.string() + ": " + ec.message());
    return s;
  };
  StorageReport r;
  r.model_bytes = size_of(model_file);
  for (const auto& p : ensemble_files) r.ensemble_bytes += size_of(p);
  if (r.model_bytes == 0) throw Error(ErrorCode::IOError, "model file is empty");
  r.ratio = static_cast<double>(r.ensemble_bytes) / static_cast<double>(r.model_bytes);
  return r;
}

}  // namespace sgen
