#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgen/spectrum.hpp"

namespace sgen {

/// Latitudinal parameters. Links into tropical bands use their own frozen
/// (xi, tau); every other link uses the global pair. (a, b) are global.
struct LatCoherenceParams {
  std::vector<double> xi;             // per band, read where tropical[m]
  std::vector<double> tau;            // per band, read where tropical[m]
  std::vector<std::uint8_t> tropical; // per band
  double xi_global = 0.0;
  double tau_global = 1.0;
  double a = 0.0;
  double b = 0.0;
  double tropics_bound = 30.0;

  static LatCoherenceParams independent(std::size_t M, double tropics_bound = 30.0);

  double xi_at(std::size_t m) const { return tropical.at(m) ? xi.at(m) : xi_global; }
  double tau_at(std::size_t m) const { return tropical.at(m) ? tau.at(m) : tau_global; }
  void validate(std::size_t M) const;
  bool operator==(const LatCoherenceParams&) const = default;
};

/// Flags bands whose center latitude lies strictly inside (-bound, bound).
std::vector<std::uint8_t> tropical_flags(std::span<const double> latitudes, double bound);

/// phi(c) = xi / (1 + 4 sin^2(c pi / N))^tau.
double coherence_profile(double c, double xi, double tau, std::size_t N);
std::vector<double> coherence_profile(double xi, double tau, std::size_t N);

/// Banded VAR(1) coefficient matrix over a wavenumber sequence: diagonal
/// phi(c_i), first off-diagonals (1 - phi(c_i)) a / 4, second off-diagonals
/// (1 - phi(c_i)) b / 4, truncated at the first and last rows.
struct CoherenceOperator {
  std::vector<double> profile;
  Eigen::MatrixXd matrix;
  std::vector<double> innovation_var;  // 1 - phi(c)^2
};
CoherenceOperator build_var1(std::span<const double> profile, double a, double b);

double spectral_radius(const Eigen::MatrixXd& m);

/// Coherence of equal wavenumbers across a chain of links (AR(1) case).
double ar1_coherence(std::span<const double> link_profiles_at_c);

/// Block of a wavenumber when 0..N-1 is cut into P contiguous blocks of
/// floor(N/P), the remainder going to the last block.
std::size_t wavenumber_block(std::size_t c, std::size_t N, std::size_t P);
void check_partition(std::size_t N, std::size_t P);
std::size_t default_block_count(std::size_t N);

/// Coupling between slot s of band m and slot s + d of band m-1, d in -2..2.
/// The banded pattern runs separately along the cosine slots (wavenumbers
/// 0..N/2) and the sine slots (1..N/2-1); pairs in different blocks are cut.
double slot_coupling(std::span<const double> profile, double a, double b, std::size_t s, int d, std::size_t P);

/// Dense N x N slot-space coupling matrix (rows: band m, columns: band m-1).
Eigen::MatrixXd slot_coupling_matrix(std::span<const double> profile, double a, double b, std::size_t P = 1);

/// Per-slot innovation variances 1 - phi(c_s)^2.
std::vector<double> slot_innovation_var(std::span<const double> profile);

/// Spectral innovations per band: N x (R*T) slot coordinates of the
/// centered band rows, column index r * T + t.
struct SpectralInnovations {
  std::size_t M = 0, N = 0, R = 0, T = 0;
  std::vector<Eigen::MatrixXd> z;
  std::vector<double> log_abs_det;  // log|det B_m| for each band
};

/// Slot coordinates of band m (centered per time step when `h` is not) and
/// log|det B_m|.
void band_spectral_innovations(const InnovationField& h, std::size_t m, const BandCovariance& cov, Eigen::MatrixXd& z,
                               double& log_abs_det);

SpectralInnovations spectral_innovations(const InnovationField& h, const std::vector<BandCovariance>& covs,
                                         unsigned workers = 1);

/// Sufficient statistics of the link from band m-1 (x) into band m (y).
struct LinkStats {
  std::size_t N = 0;
  std::vector<double> syy;                  // sum y_s^2
  std::vector<std::array<double, 5>> syx;   // sum y_s x_{s+d}
  std::vector<std::array<double, 25>> sxx;  // sum x_{s+d} x_{s+d'}
};

LinkStats link_stats(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Summaries needed by every multiband likelihood evaluation.
struct MultibandData {
  std::size_t M = 0, N = 0, R = 0, T = 0;
  double first_band_ss = 0.0;
  std::vector<LinkStats> links;  // links[m - 1] is the link into band m
  std::vector<double> log_abs_det;
};

MultibandData multiband_data(const SpectralInnovations& z, unsigned workers = 1);

/// Conditional restricted log-likelihood of band m given band m-1 under the
/// profile of band m, coupling (a, b) and a P-block partition.
double link_loglik(const LinkStats& s, std::size_t R, std::size_t T, std::span<const double> profile, double a,
                   double b, std::size_t P = 1);

/// Restricted log-likelihood of the stacked spectral innovations of all bands
/// (no Jacobian of the longitudinal transforms).
double multiband_loglik(const LatCoherenceParams& p, const MultibandData& d, std::size_t P = 1);

/// Same value including -(R-1) T sum_m log|det B_m|, i.e. the likelihood of
/// the innovations H themselves.
double multiband_loglik_h(const LatCoherenceParams& p, const MultibandData& d, std::size_t P = 1);

/// Brute-force oracle: dense covariance of the slot chain of all bands.
Eigen::MatrixXd chain_covariance(const LatCoherenceParams& p, std::size_t M, std::size_t N, std::size_t P = 1);

/// Second moments of the slot chain: cov[m] = Cov(z_m) and, for m >= 1,
/// cross[m] = Cov(z_m, z_{m-1}) = Phi_m cov[m-1].
struct ChainMoments {
  std::vector<Eigen::MatrixXd> cov;
  std::vector<Eigen::MatrixXd> cross;
};
ChainMoments chain_moments(const LatCoherenceParams& p, std::size_t M, std::size_t N, std::size_t P = 1);

struct PairFit {
  double xi_ar1 = 0.0, tau_ar1 = 1.0;
  double loglik_ar1 = 0.0, bic_ar1 = 0.0;
  double xi = 0.0, tau = 1.0, a = 0.0, b = 0.0;
  double loglik_var1 = 0.0, bic_var1 = 0.0;
  std::size_t n_obs = 0;
  bool converged = false;
};

struct PairFitOptions {
  std::size_t max_evals = 2000;
  int restarts = 3;
  std::uint64_t seed = 0;
  std::size_t P = 1;
};

/// Maximizes the likelihood of band m+1 given band m, first with a = b = 0
/// and then with (a, b) free starting from the AR(1) optimum.
PairFit fit_adjacent_pair(const LinkStats& s, std::size_t R, std::size_t T, const PairFitOptions& opt = {});

}  // namespace sgen
