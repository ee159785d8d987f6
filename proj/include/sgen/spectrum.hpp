#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sgen/grid.hpp"
#include "sgen/temporal.hpp"

namespace sgen {

/// Longitudinal model variants, each nested in the next:
/// AX   one spectrum for the whole band (axially symmetric, circulant);
/// LAO  land and ocean spectra blended by a tapered land indicator;
/// ALT  LAO plus a high-mountain regime and altitude-modulated parameters.
enum class Variant { AX, LAO, ALT };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Regime index into BandSpectrumParams::beta.
enum Regime : std::size_t { kMountain = 0, kPlainLand = 1, kOcean = 2 };

struct RegimeSpectrum {
  double phi = 1.0;    // variance scale
  double alpha = 1.0;  // inverse range
  double nu = 0.5;     // smoothness
  bool operator==(const RegimeSpectrum&) const = default;
};

/// Evolutionary-spectrum parameters of one latitude band. Under AX only
/// beta[kOcean] is read; under LAO beta[kMountain] mirrors beta[kPlainLand]
/// and the altitude slopes are zero.
struct BandSpectrumParams {
  Variant variant = Variant::AX;
  std::array<RegimeSpectrum, 3> beta{};
  double gamma_phi = 0.0;  // per meter of altitude
  double gamma_alpha = 0.0;
  double gamma_nu = 0.0;
  int g = 0;       // indicator displacement, grid points
  double r = 2.0;  // taper range, grid points

  void validate(std::size_t N) const;
  bool operator==(const BandSpectrumParams&) const = default;
};

/// Land/mountain layout of one band, precomputed from GeoDescriptors.
struct BandGeometry {
  std::size_t N = 0;
  std::vector<std::uint8_t> land;
  std::vector<std::uint8_t> mountain;
  std::vector<double> altitude;
  bool has_ocean = false;
  bool has_plain_land = false;
  bool has_mountain = false;

  bool has_land() const { return has_plain_land || has_mountain; }
  bool has_transition() const { return has_land() && has_ocean; }
};

BandGeometry band_geometry(const GeoDescriptors& geo, std::size_t m);
BandGeometry ocean_band(std::size_t N);

/// Raw cosine taper 0.5 * (1 + cos(pi * lag / r)) for |lag| <= r, else 0.
double taper_weight(double lag, double r);

/// Taper weights over circular lags 0..N-1, normalized to sum to one.
std::vector<double> taper_kernel(double r, std::size_t N);

/// Dilates (g > 0) or erodes (g < 0) the land cells of a circular row by |g|.
std::vector<std::uint8_t> modify_indicator(std::span<const std::uint8_t> mask, int g);

/// Modified indicator circularly convolved with the normalized taper.
std::vector<double> blend_indicator(std::span<const std::uint8_t> mask, int g, double r);

/// |f(c)|^2 = phi * (alpha^2 + 4 sin^2(c pi / N))^-(nu + 1/2).
double component_spectrum_sq(double c, double phi, double alpha, double nu, std::size_t N);

/// Mixing weights of the mountain, plain-land and ocean spectra along a band.
/// Mountains keep their raw indicator; the remaining cells split the tapered
/// land indicator between plain land and ocean, so the weights sum to one.
struct RegimeWeights {
  std::array<std::vector<double>, 3> w;
};
RegimeWeights regime_weights(const BandGeometry& geom, int g, double r);

/// Altitude-modulated parameters of each regime at longitude index n.
std::array<RegimeSpectrum, 3> local_params(const BandSpectrumParams& p, const BandGeometry& geom, std::size_t n);

/// f(n, c): evolutionary spectrum amplitude at longitude n and wavenumber c.
Eigen::MatrixXd spectrum_table(const BandSpectrumParams& p, const BandGeometry& geom);

// Real spectral coordinates. Slot s <= N/2 carries the cosine (real) part of
// wavenumber s; slot N/2 + c (0 < c < N/2) carries the sine (imaginary) part
// of wavenumber c. Each slot has unit variance under the band model.
std::size_t slot_wavenumber(std::size_t s, std::size_t N);
bool slot_is_sine(std::size_t s, std::size_t N);

/// E(n, s) such that the synthesis matrix is B(n, s) = f(n, c_s) * E(n, s).
Eigen::MatrixXd real_fourier_basis(std::size_t N);

struct BandCovariance {
  std::size_t band = 0;
  Eigen::MatrixXd f;          // f(n, c)
  Eigen::MatrixXd synthesis;  // B: H = B z
  Eigen::MatrixXd matrix;     // B B^T = Re(T T*)

  /// T(n, c) = f(n, c) exp(i 2 pi n c / N).
  Eigen::MatrixXcd transform() const;
};

BandCovariance band_covariance_from_table(Eigen::MatrixXd f, std::size_t band = 0);
BandCovariance build_band_covariance(const BandSpectrumParams& p, const BandGeometry& geom, std::size_t band = 0);

/// Centered second-moment summary of one band's innovations: the scatter
/// matrix of run-minus-mean rows and its periodogram.
struct BandScatter {
  std::size_t N = 0;
  std::size_t R = 0;
  std::size_t T = 0;
  Eigen::MatrixXd scatter;          // sum over (r, t) of d d^T
  std::vector<double> periodogram;  // sum over (r, t) of |DFT(d)(c)|^2
};

BandScatter band_scatter(const InnovationField& h, std::size_t m);

/// Restricted log-likelihood of one band under covariance `cov`:
/// -1/2 {T N (R-1) log 2pi + T N log R + (R-1) T log|cov| + sum d' cov^-1 d}.
double band_restricted_loglik(const Eigen::MatrixXd& cov, const BandScatter& data);
double band_restricted_loglik(const BandCovariance& cov, const InnovationField& h, std::size_t m);

/// Same likelihood for a circulant band, evaluated in the Fourier domain
/// from |f(c)|^2 without forming the covariance.
double band_restricted_loglik_circulant(std::span<const double> fsq, const BandScatter& data);

/// Forward/inverse map between a band row H and its spectral coordinates.
class SpectralTransform {
 public:
  explicit SpectralTransform(const BandCovariance& cov, double max_condition = 1e8);

  std::size_t size() const { return N_; }
  double condition() const { return condition_; }
  /// log|det B| from the stored factorization.
  double log_abs_det() const;

  /// Real slot coordinates z with B z = H.
  Eigen::VectorXd to_slots(const Eigen::VectorXd& h) const;
  Eigen::MatrixXd to_slots(const Eigen::MatrixXd& rows_as_columns) const;
  Eigen::VectorXd from_slots(const Eigen::VectorXd& z) const;

  std::vector<std::complex<double>> forward(std::span<const double> h) const;
  std::vector<double> inverse(std::span<const std::complex<double>> spec) const;

 private:
  std::size_t N_;
  double condition_;
  Eigen::MatrixXd synthesis_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

std::vector<std::complex<double>> slots_to_complex(const Eigen::VectorXd& z);
Eigen::VectorXd complex_to_slots(std::span<const std::complex<double>> spec);

double band_bic(double loglik, std::size_t n_params, std::size_t n_obs);

/// Number of free parameters of a band fit under `variant` given its layout.
std::size_t band_param_count(Variant variant, const BandGeometry& geom);

}  // namespace sgen
