#include "sgen/temporal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

#include "sgen/error.hpp"
#include "sgen/parallel.hpp"

namespace sgen {

bool check_stationary(double phi1, double phi2) {
  return phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0 && std::abs(phi2) < 1.0;
}

namespace {

std::pair<double, double> closest_on_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  double t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy);
  t = std::clamp(t, 0.0, 1.0);
  return {ax + t * dx, ay + t * dy};
}

}  // namespace

std::pair<double, double> project_stationary(double phi1, double phi2, double margin) {
  const double top = 1.0 - margin;
  const double bottom = -1.0 + margin;
  if (phi1 + phi2 <= top && phi2 - phi1 <= top && phi2 >= bottom) return {phi1, phi2};
  const double reach = top - bottom;  // half-width of the base
  const std::array<std::pair<double, double>, 3> v = {{{0.0, top}, {reach, bottom}, {-reach, bottom}}};
  std::pair<double, double> best{0.0, 0.0};
  double best_d = INFINITY;
  for (int i = 0; i < 3; ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % 3];
    const auto c = closest_on_segment(phi1, phi2, a.first, a.second, b.first, b.second);
    const double d = std::hypot(c.first - phi1, c.second - phi2);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double ar2_stationary_variance(double phi1, double phi2, double sd) {
  if (!check_stationary(phi1, phi2)) throw Error(ErrorCode::NonStationaryParams, "AR(2) parameters not stationary");
  const double denom = (1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1);
  return (1.0 - phi2) / denom * sd * sd;
}

StationaryStart stationary_start(double phi1, double phi2, double sd) {
  const double g0 = ar2_stationary_variance(phi1, phi2, sd);
  const double g1 = phi1 / (1.0 - phi2) * g0;
  StationaryStart s{};
  s.l11 = std::sqrt(g0);
  s.l21 = g1 / s.l11;
  s.l22 = std::sqrt(std::max(g0 - s.l21 * s.l21, 0.0));
  return s;
}

Ar2Estimate fit_ar2(const Anomalies& anoms, std::size_t m, std::size_t n) {
  const auto& g = anoms.spec;
  if (g.K < 5) throw Error(ErrorCode::TooShort, "AR(2) fit needs at least 5 time steps");
  double sxx11 = 0, sxx12 = 0, sxx22 = 0, sxy1 = 0, sxy2 = 0, syy = 0;
  for (std::size_t r = 0; r < anoms.R; ++r)
    for (std::size_t k = 2; k < g.K; ++k) {
      const double y = anoms.at(r, k, m, n);
      const double x1 = anoms.at(r, k - 1, m, n);
      const double x2 = anoms.at(r, k - 2, m, n);
      sxx11 += x1 * x1;
      sxx12 += x1 * x2;
      sxx22 += x2 * x2;
      sxy1 += x1 * y;
      sxy2 += x2 * y;
      syy += y * y;
    }
  const double det = sxx11 * sxx22 - sxx12 * sxx12;
  if (!(sxx11 > 0.0 && sxx22 > 0.0 && syy > 0.0) || det <= 1e-12 * sxx11 * sxx22)
    throw Error(ErrorCode::ZeroVariance, "series at (" + std::to_string(m) + ", " + std::to_string(n) +
                                             ") has no usable variance");
  Ar2Estimate est;
  est.phi1 = (sxx22 * sxy1 - sxx12 * sxy2) / det;
  est.phi2 = (sxx11 * sxy2 - sxx12 * sxy1) / det;
  if (!check_stationary(est.phi1, est.phi2)) {
    std::tie(est.phi1, est.phi2) = project_stationary(est.phi1, est.phi2);
    est.projected = true;
  }
  const double rss = syy - 2.0 * (est.phi1 * sxy1 + est.phi2 * sxy2) + est.phi1 * est.phi1 * sxx11 +
                     2.0 * est.phi1 * est.phi2 * sxx12 + est.phi2 * est.phi2 * sxx22;
  const double dof = static_cast<double>((anoms.R > 1 ? anoms.R - 1 : 1) * (g.K - 2));
  est.sd = std::sqrt(std::max(rss, 0.0) / dof);
  if (!(est.sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "zero residual variance");
  return est;
}

TemporalParams fit_temporal(const Anomalies& anoms, unsigned workers) {
  const auto& g = anoms.spec;
  TemporalParams p(g.M, g.N);
  parallel_for(g.M * g.N, workers, [&](std::size_t i) {
    const auto e = fit_ar2(anoms, i / g.N, i % g.N);
    p.phi1[i] = e.phi1;
    p.phi2[i] = e.phi2;
    p.sd[i] = e.sd;
  });
  return p;
}

InnovationField whiten_cube(const GridSpec& spec, std::size_t R, std::span<const double> cube,
                            const TemporalParams& params, bool include_start, bool centered) {
  const std::size_t M = spec.M, N = spec.N, K = spec.K;
  if (cube.size() != R * K * M * N) throw Error(ErrorCode::DimensionMismatch, "cube size does not match grid");
  if (params.M != M || params.N != N) throw Error(ErrorCode::GridMismatch, "temporal parameters do not match grid");
  InnovationField h;
  h.spec = spec;
  h.R = R;
  h.T = include_start ? K : K - 2;
  h.centered = centered;
  h.values.assign(R * h.T * M * N, 0.0);
  const std::size_t off = include_start ? 0 : 2;
  auto at = [&](std::size_t r, std::size_t k, std::size_t loc) { return cube[(r * K + k) * M * N + loc]; };
  for (std::size_t loc = 0; loc < M * N; ++loc) {
    const double p1 = params.phi1[loc], p2 = params.phi2[loc], s = params.sd[loc];
    StationaryStart st{};
    if (include_start) st = stationary_start(p1, p2, s);
    for (std::size_t r = 0; r < R; ++r) {
      double* out = h.values.data() + r * h.T * M * N + loc;
      if (include_start) {
        const double h1 = at(r, 0, loc) / st.l11;
        out[0] = h1;
        out[M * N] = (at(r, 1, loc) - st.l21 * h1) / st.l22;
      }
      for (std::size_t k = 2; k < K; ++k)
        out[(k - off) * M * N] = (at(r, k, loc) - p1 * at(r, k - 1, loc) - p2 * at(r, k - 2, loc)) / s;
    }
  }
  return h;
}

InnovationField whiten(const Anomalies& anoms, const TemporalParams& params) {
  return whiten_cube(anoms.spec, anoms.R, anoms.values, params, false, true);
}

void colorize_into(std::span<const double> noise, double phi1, double phi2, double sd, std::span<double> out) {
  if (!check_stationary(phi1, phi2)) throw Error(ErrorCode::NonStationaryParams, "cannot colorize with a unit root");
  const std::size_t K = noise.size();
  if (out.size() != K) throw Error(ErrorCode::DimensionMismatch, "colorize output length mismatch");
  if (K == 0) return;
  const StationaryStart st = stationary_start(phi1, phi2, sd);
  const double h0 = noise[0];
  out[0] = st.l11 * h0;
  if (K == 1) return;
  out[1] = st.l21 * h0 + st.l22 * noise[1];
  for (std::size_t k = 2; k < K; ++k) out[k] = phi1 * out[k - 1] + phi2 * out[k - 2] + sd * noise[k];
}

std::vector<double> colorize(std::span<const double> noise, double phi1, double phi2, double sd) {
  std::vector<double> out(noise.size());
  colorize_into(noise, phi1, phi2, sd, out);
  return out;
}

}  // namespace sgen
