#pragma once

#include <span>
#include <vector>

#include "sgen/grid.hpp"

namespace sgen {

/// Per-location AR(2) coefficients and innovation standard deviations,
/// each an M*N array indexed by GridSpec::loc(m, n).
struct TemporalParams {
  std::size_t M = 0;
  std::size_t N = 0;
  std::vector<double> phi1;
  std::vector<double> phi2;
  std::vector<double> sd;

  TemporalParams() = default;
  TemporalParams(std::size_t m, std::size_t n) : M(m), N(n), phi1(m * n, 0.0), phi2(m * n, 0.0), sd(m * n, 1.0) {}

  bool operator==(const TemporalParams&) const = default;
};

/// Unit-scale innovations H, R x T x M x N in (r, t, m, n) order. Whitening
/// that conditions on the first two steps yields T = K - 2.
struct InnovationField {
  GridSpec spec;
  std::size_t R = 0;
  std::size_t T = 0;
  bool centered = true;  // rows are run-minus-mean contrasts
  std::vector<double> values;

  std::size_t index(std::size_t r, std::size_t t, std::size_t m, std::size_t n) const {
    return ((r * T + t) * spec.M + m) * spec.N + n;
  }
  double at(std::size_t r, std::size_t t, std::size_t m, std::size_t n) const { return values[index(r, t, m, n)]; }
  double& at(std::size_t r, std::size_t t, std::size_t m, std::size_t n) { return values[index(r, t, m, n)]; }
};

struct Ar2Estimate {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double sd = 1.0;
  bool projected = false;  // raw estimate fell outside the stationarity triangle
};

/// phi2 + phi1 < 1, phi2 - phi1 < 1, |phi2| < 1 (boundary excluded).
bool check_stationary(double phi1, double phi2);

/// Nearest point of the stationarity triangle shrunk inward by `margin`.
std::pair<double, double> project_stationary(double phi1, double phi2, double margin = 1e-6);

/// Stationary variance of e(t) = phi1 e(t-1) + phi2 e(t-2) + sd*h(t).
double ar2_stationary_variance(double phi1, double phi2, double sd);

/// Cholesky factor of the stationary covariance of (e(1), e(2)).
struct StationaryStart {
  double l11, l21, l22;
};
StationaryStart stationary_start(double phi1, double phi2, double sd);

/// Pooled conditional least squares on lags 1-2 over every run at (m, n).
/// The residual variance uses the restricted degrees of freedom (R-1)(K-2),
/// so `sd` estimates the innovation scale of the runs, not of the contrasts.
Ar2Estimate fit_ar2(const Anomalies& anoms, std::size_t m, std::size_t n);

TemporalParams fit_temporal(const Anomalies& anoms, unsigned workers = 1);

/// H_r(t_k) = (D_r(t_k) - phi1 D_r(t_{k-1}) - phi2 D_r(t_{k-2})) / S, k = 3..K.
InnovationField whiten(const Anomalies& anoms, const TemporalParams& params);

/// Whitens a raw R x K x M x N cube. With `include_start` the first two steps
/// are whitened through the inverse of the stationary start (T = K), which is
/// the exact inverse of colorize; otherwise T = K - 2.
InnovationField whiten_cube(const GridSpec& spec, std::size_t R, std::span<const double> cube,
                            const TemporalParams& params, bool include_start, bool centered);

/// Runs the AR(2) recursion forward over noise of length K. The first two
/// states are drawn from the exact stationary distribution using noise[0]
/// and noise[1], so whiten(colorize(h)) reproduces h from index 2 on.
std::vector<double> colorize(std::span<const double> noise, double phi1, double phi2, double sd);

/// In-place variant used by the generator; `noise` and `out` may alias.
void colorize_into(std::span<const double> noise, double phi1, double phi2, double sd, std::span<double> out);

}  // namespace sgen
