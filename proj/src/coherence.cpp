#include "sgen/coherence.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sgen/error.hpp"
#include "sgen/optimizer.hpp"
#include "sgen/parallel.hpp"

namespace sgen {

using std::numbers::pi;

LatCoherenceParams LatCoherenceParams::independent(std::size_t M, double tropics_bound) {
  LatCoherenceParams p;
  p.xi.assign(M, 0.0);
  p.tau.assign(M, 1.0);
  p.tropical.assign(M, 0);
  p.tropics_bound = tropics_bound;
  return p;
}

void LatCoherenceParams::validate(std::size_t M) const {
  if (xi.size() != M || tau.size() != M || tropical.size() != M)
    throw Error(ErrorCode::InvalidModel, "latitudinal parameter arrays do not match the band count");
  auto ok = [](double x, double t) { return x >= 0.0 && x <= 1.0 && t > 0.0 && std::isfinite(t); };
  if (!ok(xi_global, tau_global)) throw Error(ErrorCode::InvalidModel, "global xi/tau out of range");
  for (std::size_t m = 0; m < M; ++m)
    if (tropical[m] && !ok(xi[m], tau[m])) throw Error(ErrorCode::InvalidModel, "tropical xi/tau out of range");
  if (!(std::abs(a) < 1.0 && std::abs(b) < 1.0)) throw Error(ErrorCode::InvalidModel, "|a| and |b| must be below 1");
}

std::vector<std::uint8_t> tropical_flags(std::span<const double> latitudes, double bound) {
  std::vector<std::uint8_t> f(latitudes.size());
  for (std::size_t m = 0; m < latitudes.size(); ++m) f[m] = std::abs(latitudes[m]) < bound;
  return f;
}

double coherence_profile(double c, double xi, double tau, std::size_t N) {
  const double s = std::sin(c * pi / static_cast<double>(N));
  return xi / std::pow(1.0 + 4.0 * s * s, tau);
}

std::vector<double> coherence_profile(double xi, double tau, std::size_t N) {
  std::vector<double> p(N);
  for (std::size_t c = 0; c < N; ++c) p[c] = coherence_profile(static_cast<double>(c), xi, tau, N);
  return p;
}

CoherenceOperator build_var1(std::span<const double> profile, double a, double b) {
  const auto L = static_cast<Eigen::Index>(profile.size());
  CoherenceOperator op;
  op.profile.assign(profile.begin(), profile.end());
  op.matrix = Eigen::MatrixXd::Zero(L, L);
  op.innovation_var.resize(profile.size());
  for (Eigen::Index i = 0; i < L; ++i) {
    const double phi = profile[static_cast<std::size_t>(i)];
    op.matrix(i, i) = phi;
    for (int d : {-2, -1, 1, 2}) {
      const Eigen::Index j = i + d;
      if (j < 0 || j >= L) continue;
      op.matrix(i, j) = (1.0 - phi) * (std::abs(d) == 1 ? a : b) / 4.0;
    }
    op.innovation_var[static_cast<std::size_t>(i)] = 1.0 - phi * phi;
  }
  return op;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double ar1_coherence(std::span<const double> link_profiles_at_c) {
  double rho = 1.0;
  for (double v : link_profiles_at_c) rho *= v;
  return rho;
}

void check_partition(std::size_t N, std::size_t P) {
  if (P == 0 || 3 * P > N)
    throw Error(ErrorCode::BadPartition, "block count " + std::to_string(P) + " invalid for N=" + std::to_string(N));
}

std::size_t wavenumber_block(std::size_t c, std::size_t N, std::size_t P) {
  const std::size_t size = N / P;
  return std::min(c / size, P - 1);
}

std::size_t default_block_count(std::size_t N) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(N) / 32.0)));
}

namespace {

// Slot ranges of the two channels.
bool same_channel(std::size_t s, std::size_t t, std::size_t N) {
  return (s <= N / 2) == (t <= N / 2);
}

}  // namespace

double slot_coupling(std::span<const double> profile, double a, double b, std::size_t s, int d, std::size_t P) {
  const std::size_t N = profile.size();
  const double phi = profile[slot_wavenumber(s, N)];
  if (d == 0) return phi;
  const long t = static_cast<long>(s) + d;
  if (t < 0 || t >= static_cast<long>(N)) return 0.0;
  const auto tu = static_cast<std::size_t>(t);
  if (!same_channel(s, tu, N)) return 0.0;
  if (P > 1 && wavenumber_block(slot_wavenumber(s, N), N, P) != wavenumber_block(slot_wavenumber(tu, N), N, P))
    return 0.0;
  return (1.0 - phi) * (std::abs(d) == 1 ? a : b) / 4.0;
}

Eigen::MatrixXd slot_coupling_matrix(std::span<const double> profile, double a, double b, std::size_t P) {
  const std::size_t N = profile.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t s = 0; s < N; ++s)
    for (int d = -2; d <= 2; ++d) {
      const long t = static_cast<long>(s) + d;
      if (t < 0 || t >= static_cast<long>(N)) continue;
      m(static_cast<Eigen::Index>(s), t) = slot_coupling(profile, a, b, s, d, P);
    }
  return m;
}

std::vector<double> slot_innovation_var(std::span<const double> profile) {
  const std::size_t N = profile.size();
  std::vector<double> v(N);
  for (std::size_t s = 0; s < N; ++s) {
    const double phi = profile[slot_wavenumber(s, N)];
    v[s] = 1.0 - phi * phi;
  }
  return v;
}

void band_spectral_innovations(const InnovationField& h, std::size_t m, const BandCovariance& cov, Eigen::MatrixXd& z,
                               double& log_abs_det) {
  const std::size_t N = h.spec.N, R = h.R, T = h.T;
  SpectralTransform tr(cov);
  Eigen::MatrixXd rows(N, R * T);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < N; ++n)
        rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r * T + t)) = h.at(r, t, m, n);
  if (!h.centered) {
    for (std::size_t t = 0; t < T; ++t) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
      for (std::size_t r = 0; r < R; ++r) mean += rows.col(static_cast<Eigen::Index>(r * T + t));
      mean /= static_cast<double>(R);
      for (std::size_t r = 0; r < R; ++r) rows.col(static_cast<Eigen::Index>(r * T + t)) -= mean;
    }
  }
  z = tr.to_slots(rows);
  log_abs_det = tr.log_abs_det();
}

SpectralInnovations spectral_innovations(const InnovationField& h, const std::vector<BandCovariance>& covs,
                                         unsigned workers) {
  const std::size_t M = h.spec.M;
  if (covs.size() != M) throw Error(ErrorCode::DimensionMismatch, "one band covariance per band is required");
  SpectralInnovations out;
  out.M = M;
  out.N = h.spec.N;
  out.R = h.R;
  out.T = h.T;
  out.z.resize(M);
  out.log_abs_det.resize(M);
  parallel_for(M, workers, [&](std::size_t m) { band_spectral_innovations(h, m, covs[m], out.z[m], out.log_abs_det[m]); });
  return out;
}

LinkStats link_stats(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const auto N = static_cast<std::size_t>(x.rows());
  LinkStats s;
  s.N = N;
  s.syy.assign(N, 0.0);
  s.syx.assign(N, {});
  s.sxx.assign(N, {});
  const Eigen::MatrixXd xx = x * x.transpose();
  const Eigen::MatrixXd yx = y * x.transpose();
  for (std::size_t i = 0; i < N; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    s.syy[i] = y.row(ii).squaredNorm();
    for (int d = -2; d <= 2; ++d) {
      const long j = static_cast<long>(i) + d;
      if (j < 0 || j >= static_cast<long>(N)) continue;
      s.syx[i][static_cast<std::size_t>(d + 2)] = yx(ii, j);
      for (int e = -2; e <= 2; ++e) {
        const long k = static_cast<long>(i) + e;
        if (k < 0 || k >= static_cast<long>(N)) continue;
        s.sxx[i][static_cast<std::size_t>((d + 2) * 5 + e + 2)] = xx(j, k);
      }
    }
  }
  return s;
}

MultibandData multiband_data(const SpectralInnovations& z, unsigned workers) {
  MultibandData d;
  d.M = z.M;
  d.N = z.N;
  d.R = z.R;
  d.T = z.T;
  d.log_abs_det = z.log_abs_det;
  if (z.M > 0) d.first_band_ss = z.z[0].squaredNorm();
  d.links.resize(z.M > 0 ? z.M - 1 : 0);
  parallel_for(d.links.size(), workers, [&](std::size_t i) { d.links[i] = link_stats(z.z[i], z.z[i + 1]); });
  return d;
}

namespace {

double restricted_constants(std::size_t R, std::size_t T, std::size_t N) {
  const double TN = static_cast<double>(T * N);
  return TN * static_cast<double>(R - 1) * std::log(2.0 * pi) + TN * std::log(static_cast<double>(R));
}

constexpr double kMinInnovationVar = 1e-12;

}  // namespace

double link_loglik(const LinkStats& s, std::size_t R, std::size_t T, std::span<const double> profile, double a,
                   double b, std::size_t P) {
  const std::size_t N = s.N;
  CompensatedSum logdet, quad;
  std::array<double, 5> coef{};
  for (std::size_t i = 0; i < N; ++i) {
    const double phi = profile[slot_wavenumber(i, N)];
    const double v = 1.0 - phi * phi;
    if (!(v > kMinInnovationVar)) return -INFINITY;
    for (int d = -2; d <= 2; ++d) coef[static_cast<std::size_t>(d + 2)] = slot_coupling(profile, a, b, i, d, P);
    double q = s.syy[i];
    for (std::size_t d = 0; d < 5; ++d) {
      if (coef[d] == 0.0) continue;
      q -= 2.0 * coef[d] * s.syx[i][d];
      for (std::size_t e = 0; e < 5; ++e) q += coef[d] * coef[e] * s.sxx[i][d * 5 + e];
    }
    logdet.add(std::log(v));
    quad.add(q / v);
  }
  const double twice = restricted_constants(R, T, N) + static_cast<double>((R - 1) * T) * logdet.value() + quad.value();
  return -0.5 * twice;
}

double multiband_loglik(const LatCoherenceParams& p, const MultibandData& d, std::size_t P) {
  if (d.R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  check_partition(d.N, P);
  CompensatedSum total;
  total.add(-0.5 * (restricted_constants(d.R, d.T, d.N) + d.first_band_ss));
  for (std::size_t m = 1; m < d.M; ++m) {
    const auto prof = coherence_profile(p.xi_at(m), p.tau_at(m), d.N);
    total.add(link_loglik(d.links[m - 1], d.R, d.T, prof, p.a, p.b, P));
  }
  return total.value();
}

double multiband_loglik_h(const LatCoherenceParams& p, const MultibandData& d, std::size_t P) {
  CompensatedSum jac;
  for (double v : d.log_abs_det) jac.add(v);
  return multiband_loglik(p, d, P) - static_cast<double>((d.R - 1) * d.T) * jac.value();
}

Eigen::MatrixXd chain_covariance(const LatCoherenceParams& p, std::size_t M, std::size_t N, std::size_t P) {
  const auto Ni = static_cast<Eigen::Index>(N);
  const Eigen::Index D = static_cast<Eigen::Index>(M) * Ni;
  // z = A^-1 e with A block lower bidiagonal (I on the diagonal, -Phi_m below).
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(D, D);
  Eigen::VectorXd ev = Eigen::VectorXd::Ones(D);
  for (std::size_t m = 1; m < M; ++m) {
    const auto prof = coherence_profile(p.xi_at(m), p.tau_at(m), N);
    const auto mi = static_cast<Eigen::Index>(m);
    A.block(mi * Ni, (mi - 1) * Ni, Ni, Ni) = -slot_coupling_matrix(prof, p.a, p.b, P);
    const auto v = slot_innovation_var(prof);
    for (std::size_t s = 0; s < N; ++s) ev(mi * Ni + static_cast<Eigen::Index>(s)) = v[s];
  }
  const Eigen::MatrixXd Ainv = A.inverse();
  return Ainv * ev.asDiagonal() * Ainv.transpose();
}

ChainMoments chain_moments(const LatCoherenceParams& p, std::size_t M, std::size_t N, std::size_t P) {
  ChainMoments out;
  out.cov.resize(M);
  out.cross.resize(M);
  const auto Ni = static_cast<Eigen::Index>(N);
  if (M == 0) return out;
  out.cov[0] = Eigen::MatrixXd::Identity(Ni, Ni);
  for (std::size_t m = 1; m < M; ++m) {
    const auto prof = coherence_profile(p.xi_at(m), p.tau_at(m), N);
    const Eigen::MatrixXd Phi = slot_coupling_matrix(prof, p.a, p.b, P);
    const auto v = slot_innovation_var(prof);
    out.cross[m] = Phi * out.cov[m - 1];
    out.cov[m] = out.cross[m] * Phi.transpose();
    for (std::size_t s = 0; s < N; ++s) out.cov[m](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) += v[s];
  }
  return out;
}

PairFit fit_adjacent_pair(const LinkStats& s, std::size_t R, std::size_t T, const PairFitOptions& opt) {
  check_partition(s.N, opt.P);
  const std::size_t N = s.N;
  PairFit out;
  out.n_obs = (R - 1) * T * N;
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals;
  nm.restarts = opt.restarts;
  nm.seed = opt.seed;

  auto unpack = [](const std::vector<double>& u, double& xi, double& tau) {
    xi = from_logit(u[0], 0.0, 1.0);
    tau = from_log(u[1]);
  };
  Objective f_ar1 = [&](const std::vector<double>& u) {
    double xi, tau;
    unpack(u, xi, tau);
    return -link_loglik(s, R, T, coherence_profile(xi, tau, N), 0.0, 0.0, opt.P);
  };
  const OptimResult r1 = minimize(f_ar1, {to_logit(0.9, 0.0, 1.0), to_log(0.5)}, nm);
  unpack(r1.x, out.xi_ar1, out.tau_ar1);
  out.loglik_ar1 = -r1.value;

  Objective f_var1 = [&](const std::vector<double>& u) {
    double xi, tau;
    unpack(u, xi, tau);
    return -link_loglik(s, R, T, coherence_profile(xi, tau, N), std::tanh(u[2]), std::tanh(u[3]), opt.P);
  };
  const OptimResult r2 = minimize(f_var1, {r1.x[0], r1.x[1], 0.0, 0.0}, nm);
  unpack(r2.x, out.xi, out.tau);
  out.a = std::tanh(r2.x[2]);
  out.b = std::tanh(r2.x[3]);
  out.loglik_var1 = -r2.value;
  if (!std::isfinite(out.loglik_ar1) || !std::isfinite(out.loglik_var1))
    throw Error(ErrorCode::OptimizerFailure, "adjacent-pair likelihood has no finite optimum");
  out.bic_ar1 = band_bic(out.loglik_ar1, 2, out.n_obs);
  out.bic_var1 = band_bic(out.loglik_var1, 4, out.n_obs);
  out.converged = r1.converged && r2.converged;
  return out;
}

}  // namespace sgen
