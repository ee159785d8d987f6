#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sgen/coherence.hpp"
#include "sgen/model.hpp"
#include "sgen/spectrum.hpp"
#include "sgen/temporal.hpp"

namespace sgen {

struct FitOptions {
  Variant variant = Variant::AX;
  double lambda = 0.01;
  double tropics_deg = 30.0;
  std::size_t blocks = 0;  // 0: default_block_count(N)
  bool var1 = true;        // false restricts the latitudinal model to AR(1)
  bool refit_pairs = false;
  std::size_t max_evals = 2000;
  int restarts = 3;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: SG_WORKERS or hardware concurrency
  int max_shift = 3;     // |g| search range, also capped at N/4
  double mean_min_gain = 0.02;
};

/// Maps the free parameters of one band under a variant to an unconstrained
/// vector: log for (phi, alpha, nu), 1000 * gamma for the altitude slopes and
/// a logistic map of r onto (1, N/2). Parameters of regimes absent from the
/// band are left out, so the vector length tracks band_param_count minus g.
class BandPacking {
 public:
  BandPacking(Variant variant, const BandGeometry& geom);

  std::size_t size() const { return size_; }
  std::vector<double> pack(const BandSpectrumParams& p) const;
  /// Fills the free parameters from u; g and inactive values come from base.
  BandSpectrumParams unpack(const std::vector<double>& u, const BandSpectrumParams& base) const;

 private:
  Variant variant_;
  std::size_t N_;
  bool mountain_ = false, plain_ = false, land_ = false, ocean_ = false, transition_ = false;
  std::size_t size_ = 0;
};

/// Parameters of `variant` that reproduce a simpler fit exactly: every regime
/// copies the simpler spectrum and altitude slopes start at zero.
BandSpectrumParams promote(const BandSpectrumParams& p, Variant variant, std::size_t N);

/// Log-space least squares of the mean band periodogram on
/// log(1 + 4 sin^2(c pi / N)) with alpha fixed at 1.
BandSpectrumParams periodogram_init(const BandScatter& data);

/// Band restricted log-likelihood for a parameter set (circulant fast path
/// for AX). Returns -inf when the covariance is singular.
double band_loglik(const BandSpectrumParams& p, const BandGeometry& geom, const BandScatter& data);

struct BandFitOptions {
  std::size_t max_evals = 2000;
  int restarts = 3;
  std::uint64_t seed = 0;
  int max_shift = 3;
};

struct BandFitResult {
  BandSpectrumParams params;
  double loglik = 0.0;
  std::array<double, 3> chain_loglik{};  // optimum reached at AX, LAO, ALT
  std::size_t n_params = 0;
  std::size_t evals = 0;
  bool converged = false;
};

/// Fits one band. Without `init` the fit runs AX, then LAO and ALT, each
/// started from the previous optimum; with `init` only `variant` is fitted,
/// starting there.
BandFitResult fit_band(const BandScatter& data, const BandGeometry& geom, Variant variant,
                       const BandFitOptions& opt = {}, const BandSpectrumParams* init = nullptr);

struct LatFitResult {
  LatCoherenceParams params;
  std::vector<PairFit> pairs;  // pairs[m - 1]: bands m-1 and m
  double loglik = 0.0;         // multiband_loglik_h at the optimum
  double independent_loglik = 0.0;
  bool fallback = false;  // optimum was worse than independent bands
  bool converged = false;
};

LatFitResult fit_latitudinal(const MultibandData& d, std::span<const double> latitudes, const FitOptions& opt,
                             std::size_t P);

struct RefitRecord {
  std::size_t band = 0;  // pair (band, band + 1)
  double before = 0.0;   // model log-likelihood terms touched by the pair
  double after = 0.0;
  bool accepted = false;
  bool converged = false;
};

/// Re-maximizes the joint two-band likelihood over the longitudinal
/// parameters of each listed pair (m, m + 1) with g and the latitudinal
/// parameters fixed. A pair is kept only if the model likelihood rises.
SGModel refit_adjacent(const SGModel& model, const InnovationField& h, const std::vector<std::size_t>& pairs,
                       const FitOptions& opt, std::vector<RefitRecord>* log = nullptr);

struct BandReport {
  std::size_t band = 0;
  double loglik = 0.0;
  std::array<double, 3> chain_loglik{};
  std::size_t n_params = 0;
  double bic = 0.0;
  bool converged = false;
};

struct FitReport {
  Variant variant = Variant::AX;
  bool var1 = true;
  std::size_t blocks = 1;
  std::size_t n_obs = 0;  // (R-1) T N M with T = K - 2
  double step2_loglik = 0.0;  // independent bands
  double step3_loglik = 0.0;  // multiband model
  double refit_loglik = 0.0;
  double total_loglik = 0.0;  // full data, start steps included
  std::size_t n_params = 0;
  double bic = 0.0;
  bool lat_fallback = false;
  bool converged = true;
  std::vector<BandReport> bands;
  std::vector<PairFit> pairs;
  std::vector<RefitRecord> refits;
  double seconds_step1 = 0.0, seconds_step2 = 0.0, seconds_step3 = 0.0, seconds_refit = 0.0;

  double normalized(double loglik) const { return n_obs ? loglik / static_cast<double>(n_obs) : 0.0; }
  std::string to_json() const;
};

struct FitOutput {
  SGModel model;
  FitReport report;
};

/// Three-step conditional fit: AR(2) per location, band spectra with the
/// temporal parameters fixed, latitudinal coherence with both fixed, then
/// the optional adjacent-pair refit.
FitOutput fit(const EnsembleField& field, const GeoDescriptors& geo, const FitOptions& opt);

/// Log|det| of each location's colorizing map (stationary start included).
double temporal_log_det(const TemporalParams& tp, std::size_t K);

/// Factorized restricted log-likelihood of the whole ensemble: AR(2)
/// whitening with exact start, band transforms, and the latitudinal chain.
double factorized_restricted_loglik(const EnsembleField& field, const SGModel& model, std::size_t P = 1);

/// Dense oracle: assembles the KMN x KMN covariance and evaluates the
/// restricted likelihood directly. Requires K*M*N <= 4096.
double exact_restricted_loglik(const EnsembleField& field, const SGModel& model);

/// Total free parameters of a model (temporal, longitudinal, latitudinal).
std::size_t model_param_count(const SGModel& model);

}  // namespace sgen
