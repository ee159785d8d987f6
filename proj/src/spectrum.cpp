#include "sgen/spectrum.hpp"

#include <cmath>
#include <numbers>

#include "sgen/error.hpp"

namespace sgen {

using std::numbers::pi;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::AX: return "ax";
    case Variant::LAO: return "lao";
    case Variant::ALT: return "alt";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "ax" || s == "AX") return Variant::AX;
  if (s == "lao" || s == "LAO") return Variant::LAO;
  if (s == "alt" || s == "ALT") return Variant::ALT;
  throw Error(ErrorCode::ConfigError, "unknown variant '" + std::string(s) + "'");
}

void BandSpectrumParams::validate(std::size_t N) const {
  for (const auto& b : beta)
    if (!(b.phi > 0 && b.alpha > 0 && b.nu > 0))
      throw Error(ErrorCode::InvalidModel, "spectrum parameters must be positive");
  if (!(r >= 1.0)) throw Error(ErrorCode::NonPositiveRange, "taper range must be at least 1");
  if (static_cast<std::size_t>(std::abs(g)) * 4 > N) throw Error(ErrorCode::InvalidModel, "|g| exceeds N/4");
  if (!std::isfinite(gamma_phi) || !std::isfinite(gamma_alpha) || !std::isfinite(gamma_nu))
    throw Error(ErrorCode::InvalidModel, "altitude slopes must be finite");
}

BandGeometry band_geometry(const GeoDescriptors& geo, std::size_t m) {
  BandGeometry b;
  b.N = geo.N;
  b.land.resize(geo.N);
  b.mountain.resize(geo.N);
  b.altitude.resize(geo.N);
  for (std::size_t n = 0; n < geo.N; ++n) {
    const auto cls = classify(geo, m, n);
    b.land[n] = cls != SurfaceClass::Ocean;
    b.mountain[n] = cls == SurfaceClass::HighMountain;
    b.altitude[n] = geo.alt(m, n);
    b.has_ocean |= cls == SurfaceClass::Ocean;
    b.has_plain_land |= cls == SurfaceClass::Land;
    b.has_mountain |= cls == SurfaceClass::HighMountain;
  }
  return b;
}

BandGeometry ocean_band(std::size_t N) {
  BandGeometry b;
  b.N = N;
  b.land.assign(N, 0);
  b.mountain.assign(N, 0);
  b.altitude.assign(N, 0.0);
  b.has_ocean = true;
  return b;
}

double taper_weight(double lag, double r) {
  if (!(r >= 1.0)) throw Error(ErrorCode::NonPositiveRange, "taper range must be at least 1");
  const double d = std::abs(lag);
  if (d > r) return 0.0;
  return 0.5 * (1.0 + std::cos(pi * d / r));
}

std::vector<double> taper_kernel(double r, std::size_t N) {
  std::vector<double> k(N, 0.0);
  const auto reach = static_cast<long>(std::floor(r));
  double total = 0.0;
  for (long d = -reach; d <= reach; ++d) {
    const double w = taper_weight(static_cast<double>(d), r);
    const long idx = ((d % static_cast<long>(N)) + static_cast<long>(N)) % static_cast<long>(N);
    k[static_cast<std::size_t>(idx)] += w;
    total += w;
  }
  for (double& v : k) v /= total;
  return k;
}

std::vector<std::uint8_t> modify_indicator(std::span<const std::uint8_t> mask, int g) {
  const auto N = static_cast<long>(mask.size());
  std::vector<std::uint8_t> out(mask.begin(), mask.end());
  if (g == 0) return out;
  const long reach = std::abs(g);
  for (long n = 0; n < N; ++n) {
    bool any = false, all = true;
    for (long d = -reach; d <= reach; ++d) {
      const bool v = mask[static_cast<std::size_t>(((n + d) % N + N) % N)] != 0;
      any |= v;
      all &= v;
    }
    out[static_cast<std::size_t>(n)] = g > 0 ? any : all;
  }
  return out;
}

std::vector<double> blend_indicator(std::span<const std::uint8_t> mask, int g, double r) {
  const std::size_t N = mask.size();
  const auto mod = modify_indicator(mask, g);
  const auto kernel = taper_kernel(r, N);
  std::vector<double> b(N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < N; ++j)
      if (mod[j]) acc += kernel[(n + N - j) % N];
    b[n] = acc;
  }
  return b;
}

double component_spectrum_sq(double c, double phi, double alpha, double nu, std::size_t N) {
  const double s = std::sin(c * pi / static_cast<double>(N));
  return phi * std::pow(alpha * alpha + 4.0 * s * s, -(nu + 0.5));
}

RegimeWeights regime_weights(const BandGeometry& geom, int g, double r) {
  const std::size_t N = geom.N;
  RegimeWeights rw;
  for (auto& w : rw.w) w.assign(N, 0.0);
  const auto b = blend_indicator(geom.land, g, r);
  for (std::size_t n = 0; n < N; ++n) {
    const double hmt = geom.mountain[n] ? 1.0 : 0.0;
    rw.w[kMountain][n] = hmt;
    rw.w[kPlainLand][n] = b[n] * (1.0 - hmt);
    rw.w[kOcean][n] = (1.0 - b[n]) * (1.0 - hmt);
  }
  return rw;
}

std::array<RegimeSpectrum, 3> local_params(const BandSpectrumParams& p, const BandGeometry& geom, std::size_t n) {
  std::array<RegimeSpectrum, 3> out = p.beta;
  if (p.variant == Variant::AX) {
    out.fill(p.beta[kOcean]);
    return out;
  }
  if (p.variant == Variant::LAO) {
    out[kMountain] = p.beta[kPlainLand];
    return out;
  }
  const double a = geom.altitude[n];
  const double mphi = std::exp(std::atan(a * p.gamma_phi));
  const double malpha = std::exp(std::atan(a * p.gamma_alpha));
  const double mnu = std::exp(std::atan(a * p.gamma_nu));
  for (std::size_t j : {kMountain, kPlainLand}) {
    out[j].phi *= mphi;
    out[j].alpha *= malpha;
    out[j].nu *= mnu;
  }
  return out;
}

Eigen::MatrixXd spectrum_table(const BandSpectrumParams& p, const BandGeometry& geom) {
  const std::size_t N = geom.N;
  Eigen::MatrixXd f(N, N);
  std::vector<double> s4(N);
  for (std::size_t c = 0; c < N; ++c) {
    const double s = std::sin(static_cast<double>(c) * pi / static_cast<double>(N));
    s4[c] = 4.0 * s * s;
  }
  auto amp = [&](const RegimeSpectrum& rs, std::size_t c) {
    return std::sqrt(rs.phi) * std::pow(rs.alpha * rs.alpha + s4[c], -0.5 * (rs.nu + 0.5));
  };
  if (p.variant == Variant::AX) {
    for (std::size_t c = 0; c < N; ++c) f.col(static_cast<Eigen::Index>(c)).setConstant(amp(p.beta[kOcean], c));
    return f;
  }
  const RegimeWeights rw = regime_weights(geom, p.g, p.r);
  for (std::size_t n = 0; n < N; ++n) {
    const auto lp = local_params(p, geom, n);
    for (std::size_t c = 0; c < N; ++c) {
      double v = 0.0;
      for (std::size_t j = 0; j < 3; ++j)
        if (rw.w[j][n] != 0.0) v += rw.w[j][n] * amp(lp[j], c);
      f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return f;
}

std::size_t slot_wavenumber(std::size_t s, std::size_t N) { return s <= N / 2 ? s : s - N / 2; }
bool slot_is_sine(std::size_t s, std::size_t N) { return s > N / 2; }

Eigen::MatrixXd real_fourier_basis(std::size_t N) {
  Eigen::MatrixXd E(N, N);
  const double root2 = std::numbers::sqrt2;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t s = 0; s < N; ++s) {
      const std::size_t c = slot_wavenumber(s, N);
      // Reduce n*c mod N before scaling so the phase is exact on the grid.
      const double theta = 2.0 * pi * static_cast<double>((n * c) % N) / static_cast<double>(N);
      double v;
      if (slot_is_sine(s, N)) v = -root2 * std::sin(theta);
      else if (c == 0 || 2 * c == N) v = std::cos(theta);
      else v = root2 * std::cos(theta);
      E(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s)) = v;
    }
  return E;
}

Eigen::MatrixXcd BandCovariance::transform() const {
  const auto N = f.rows();
  Eigen::MatrixXcd T(N, N);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index c = 0; c < N; ++c) {
      const double theta = 2.0 * pi * static_cast<double>((n * c) % N) / static_cast<double>(N);
      T(n, c) = f(n, c) * std::complex<double>(std::cos(theta), std::sin(theta));
    }
  return T;
}

BandCovariance band_covariance_from_table(Eigen::MatrixXd f, std::size_t band) {
  const auto N = static_cast<std::size_t>(f.rows());
  BandCovariance out;
  out.band = band;
  Eigen::MatrixXd B = real_fourier_basis(N);
  for (std::size_t s = 0; s < N; ++s)
    B.col(static_cast<Eigen::Index>(s)).array() *= f.col(static_cast<Eigen::Index>(slot_wavenumber(s, N))).array();
  out.matrix = B * B.transpose();
  out.synthesis = std::move(B);
  out.f = std::move(f);
  return out;
}

BandCovariance build_band_covariance(const BandSpectrumParams& p, const BandGeometry& geom, std::size_t band) {
  return band_covariance_from_table(spectrum_table(p, geom), band);
}

BandScatter band_scatter(const InnovationField& h, std::size_t m) {
  const std::size_t N = h.spec.N, R = h.R, T = h.T;
  BandScatter out;
  out.N = N;
  out.R = R;
  out.T = T;
  Eigen::MatrixXd rows(N, R * T);
  Eigen::VectorXd mean(N);
  for (std::size_t t = 0; t < T; ++t) {
    mean.setZero();
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t n = 0; n < N; ++n) mean(static_cast<Eigen::Index>(n)) += h.at(r, t, m, n);
    mean /= static_cast<double>(R);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t n = 0; n < N; ++n)
        rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r * T + t)) =
            h.at(r, t, m, n) - mean(static_cast<Eigen::Index>(n));
  }
  out.scatter = rows * rows.transpose();
  // |X(c)|^2 summed over rows equals e_c^* S e_c for the scatter matrix S.
  out.periodogram.assign(N, 0.0);
  for (std::size_t c = 0; c < N; ++c) {
    Eigen::VectorXd cs(N), sn(N);
    for (std::size_t n = 0; n < N; ++n) {
      const double theta = 2.0 * pi * static_cast<double>((n * c) % N) / static_cast<double>(N);
      cs(static_cast<Eigen::Index>(n)) = std::cos(theta);
      sn(static_cast<Eigen::Index>(n)) = std::sin(theta);
    }
    out.periodogram[c] = cs.dot(out.scatter * cs) + sn.dot(out.scatter * sn);
  }
  return out;
}

namespace {

double restricted_constants(const BandScatter& d) {
  const double TN = static_cast<double>(d.T * d.N);
  return TN * static_cast<double>(d.R - 1) * std::log(2.0 * pi) + TN * std::log(static_cast<double>(d.R));
}

}  // namespace

double band_restricted_loglik(const Eigen::MatrixXd& cov, const BandScatter& data) {
  if (data.R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "band covariance is not positive definite");
  const auto& L = llt.matrixL();
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  const double dmax = diag.maxCoeff(), dmin = diag.minCoeff();
  if (!(dmin > 0.0) || dmin * dmin < 1e-14 * dmax * dmax)
    throw Error(ErrorCode::SingularCovariance, "band covariance is numerically singular");
  const double logdet = 2.0 * diag.array().log().sum();
  // tr(cov^-1 S) with S = scatter.
  const Eigen::MatrixXd X = L.solve(data.scatter);
  const Eigen::MatrixXd Y = L.solve(X.transpose());
  const double quad = Y.trace();
  const double twice_nll = restricted_constants(data) +
                           static_cast<double>((data.R - 1) * data.T) * logdet + quad;
  return -0.5 * twice_nll;
}

double band_restricted_loglik(const BandCovariance& cov, const InnovationField& h, std::size_t m) {
  return band_restricted_loglik(cov.matrix, band_scatter(h, m));
}

double band_restricted_loglik_circulant(std::span<const double> fsq, const BandScatter& data) {
  if (data.R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  const std::size_t N = data.N;
  const double Nd = static_cast<double>(N);
  double logdet = 0.0, quad = 0.0;
  for (std::size_t c = 0; c < N; ++c) {
    const double eig = Nd * fsq[c];
    if (!(eig > 0.0)) throw Error(ErrorCode::SingularCovariance, "circulant eigenvalue is not positive");
    logdet += std::log(eig);
    quad += data.periodogram[c] / (Nd * eig);
  }
  const double twice_nll =
      restricted_constants(data) + static_cast<double>((data.R - 1) * data.T) * logdet + quad;
  return -0.5 * twice_nll;
}

SpectralTransform::SpectralTransform(const BandCovariance& cov, double max_condition)
    : N_(static_cast<std::size_t>(cov.synthesis.rows())), synthesis_(cov.synthesis), lu_(cov.synthesis) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(synthesis_);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  condition_ = smin > 0.0 ? sv(0) / smin : INFINITY;
  if (!(condition_ < max_condition))
    throw Error(ErrorCode::IllConditionedTransform,
                "band " + std::to_string(cov.band) + " synthesis condition number " + std::to_string(condition_));
}

double SpectralTransform::log_abs_det() const { return lu_.matrixLU().diagonal().array().abs().log().sum(); }

Eigen::VectorXd SpectralTransform::to_slots(const Eigen::VectorXd& h) const { return lu_.solve(h); }
Eigen::MatrixXd SpectralTransform::to_slots(const Eigen::MatrixXd& cols) const { return lu_.solve(cols); }
Eigen::VectorXd SpectralTransform::from_slots(const Eigen::VectorXd& z) const { return synthesis_ * z; }

std::vector<std::complex<double>> slots_to_complex(const Eigen::VectorXd& z) {
  const auto N = static_cast<std::size_t>(z.size());
  std::vector<std::complex<double>> out(N);
  const double inv_root2 = 1.0 / std::numbers::sqrt2;
  out[0] = z(0);
  out[N / 2] = z(static_cast<Eigen::Index>(N / 2));
  for (std::size_t c = 1; c < N / 2; ++c) {
    out[c] = std::complex<double>(z(static_cast<Eigen::Index>(c)), z(static_cast<Eigen::Index>(N / 2 + c))) * inv_root2;
    out[N - c] = std::conj(out[c]);
  }
  return out;
}

Eigen::VectorXd complex_to_slots(std::span<const std::complex<double>> spec) {
  const std::size_t N = spec.size();
  Eigen::VectorXd z(N);
  z(0) = spec[0].real();
  z(static_cast<Eigen::Index>(N / 2)) = spec[N / 2].real();
  for (std::size_t c = 1; c < N / 2; ++c) {
    z(static_cast<Eigen::Index>(c)) = std::numbers::sqrt2 * spec[c].real();
    z(static_cast<Eigen::Index>(N / 2 + c)) = std::numbers::sqrt2 * spec[c].imag();
  }
  return z;
}

std::vector<std::complex<double>> SpectralTransform::forward(std::span<const double> h) const {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  return slots_to_complex(to_slots(v));
}

std::vector<double> SpectralTransform::inverse(std::span<const std::complex<double>> spec) const {
  const Eigen::VectorXd h = from_slots(complex_to_slots(spec));
  return {h.data(), h.data() + h.size()};
}

double band_bic(double loglik, std::size_t n_params, std::size_t n_obs) {
  if (n_obs == 0) throw Error(ErrorCode::RangeError, "BIC needs a positive observation count");
  return -2.0 * loglik + static_cast<double>(n_params) * std::log(static_cast<double>(n_obs));
}

std::size_t band_param_count(Variant variant, const BandGeometry& geom) {
  if (variant == Variant::AX) return 3;
  std::size_t k = 0;
  if (variant == Variant::LAO) {
    if (geom.has_land()) k += 3;
  } else {
    if (geom.has_mountain) k += 3;
    if (geom.has_plain_land) k += 3;
    if (geom.has_land()) k += 3;  // altitude slopes
  }
  if (geom.has_ocean) k += 3;
  if (geom.has_transition()) k += 2;  // g, r
  return k;
}

}  // namespace sgen
