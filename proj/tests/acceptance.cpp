// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sgen/container.hpp"
#include "sgen/error.hpp"
#include "sgen/generator.hpp"
#include "sgen/inference.hpp"
#include "sgen/parallel.hpp"
#include "sgen/synth.hpp"
#include "sgen/validation.hpp"

namespace fs = std::filesystem;
using namespace sgen;
using std::numbers::pi;

namespace {

unsigned g_workers = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("sgen_accept_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

EnsembleField random_field(const GridSpec& g, std::size_t R, std::uint64_t seed) {
  EnsembleField f(g, R);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (auto& v : f.values) v = nd(rng);
  return f;
}

// Fully specified model on a small grid; AR(0) time when `ar0`.
SGModel small_model(std::size_t M, std::size_t N, std::size_t K, Variant variant, bool ar0, double a, double b,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  SGModel model;
  model.grid = make_grid(M, N, K, 40.0, 5.0);
  model.variant = variant;
  model.mean = compress_mean(synthetic_mean(model.grid));
  model.temporal = TemporalParams(M, N);
  if (!ar0)
    for (std::size_t i = 0; i < M * N; ++i) {
      model.temporal.phi1[i] = static_cast<float>(0.4 * u(rng));
      model.temporal.phi2[i] = static_cast<float>(-0.25 * u(rng));
      model.temporal.sd[i] = static_cast<float>(u(rng));
    }
  if (variant != Variant::AX) {
    GeoDescriptors geo(M, N);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N / 2; ++n) {
        geo.land_mask[m * N + n] = 1;
        geo.altitude[m * N + n] = n == 1 ? 1600.0 : 250.0;
      }
    encode_geometry(geo, model.surface, model.altitude);
  }
  for (std::size_t m = 0; m < M; ++m) {
    BandSpectrumParams p;
    p.variant = variant;
    for (auto& beta : p.beta) beta = {u(rng), u(rng), u(rng)};
    if (variant == Variant::LAO) p.beta[kMountain] = p.beta[kPlainLand];
    if (variant == Variant::ALT) {
      p.gamma_phi = 3e-4;
      p.gamma_nu = -2e-4;
    }
    p.r = 1.5;
    model.bands.push_back(p);
  }
  model.lat = LatCoherenceParams::independent(M);
  model.lat.xi_global = 0.8;
  model.lat.tau_global = 0.5;
  model.lat.a = a;
  model.lat.b = b;
  model.meta.blocks = 1;
  model.meta.var1 = a != 0.0 || b != 0.0;
  model.validate();
  return model;
}

// Unit-scale innovations of surrogate anomalies under the true temporal model.
InnovationField true_innovations(const SGModel& model, const EnsembleField& ens) {
  const auto& g = model.grid;
  const std::size_t L = g.K * g.M * g.N;
  const auto mean = model.mean.expand();
  std::vector<double> cube(ens.values);
  for (std::size_t r = 0; r < ens.R; ++r)
    for (std::size_t i = 0; i < L; ++i) cube[r * L + i] -= mean[i];
  return whiten_cube(g, ens.R, cube, model.temporal, true, false);
}

// Stationary lag-0 covariance of the anomaly field between band m (rows) and
// band m2 = m or m - 1 (columns).
Eigen::MatrixXd anomaly_covariance(const SGModel& model, const ChainMoments& cm, std::size_t m, std::size_t m2) {
  const std::size_t N = model.grid.N, J = 300;
  const Eigen::MatrixXd CH = m == m2 ? model_band_covariance(model, cm, m) : model_cross_covariance(model, cm, m);
  auto psi = [&](std::size_t band, std::size_t n) {
    const std::size_t i = model.grid.loc(band, n);
    const double p1 = model.temporal.phi1[i], p2 = model.temporal.phi2[i];
    std::vector<double> w(J);
    w[0] = 1.0;
    w[1] = p1;
    for (std::size_t j = 2; j < J; ++j) w[j] = p1 * w[j - 1] + p2 * w[j - 2];
    for (auto& v : w) v *= model.temporal.sd[i];
    return w;
  };
  std::vector<std::vector<double>> a(N), b(N);
  for (std::size_t n = 0; n < N; ++n) {
    a[n] = psi(m, n);
    b[n] = psi(m2, n);
  }
  Eigen::MatrixXd C(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < J; ++k) s += a[i][k] * b[j][k];
      C(i, j) = CH(i, j) * s;
    }
  return C;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Timer t;
  double worst = 0.0;
  for (Variant v : {Variant::AX, Variant::LAO, Variant::ALT})
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto model = small_model(2, 4, 3, v, true, 0.2, 0.1, seed);
      const auto field = random_field(model.grid, 3, 100 + seed);
      const double dense = exact_restricted_loglik(field, model);
      const double fact = factorized_restricted_loglik(field, model, 1);
      worst = std::max(worst, std::abs(fact - dense) / std::abs(dense));
    }
  const double secs = t.seconds();
  return {worst <= 1e-6 && secs < 1.0,
          "max relative difference " + num(worst, 3) + " over 9 models, " + num(secs, 3) + " s"};
}

Outcome criterion2() {
  Timer t;
  const std::size_t N = 32, R = 5, T = 20;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.3, 2.0);
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    BandSpectrumParams p;
    p.beta[kOcean] = {u(rng), u(rng), u(rng)};
    const auto cov = build_band_covariance(p, ocean_band(N));
    InnovationField h;
    h.spec = make_grid(1, N, T + 2, 45.0, 1.0);
    h.R = R;
    h.T = T;
    h.centered = false;
    h.values.resize(R * T * N);
    std::normal_distribution<double> nd;
    for (auto& v : h.values) v = nd(rng);
    const auto data = band_scatter(h, 0);
    std::vector<double> fsq(N);
    for (std::size_t c = 0; c < N; ++c)
      fsq[c] = component_spectrum_sq(double(c), p.beta[kOcean].phi, p.beta[kOcean].alpha, p.beta[kOcean].nu, N);
    const double dense = band_restricted_loglik(cov.matrix, data);
    const double fast = band_restricted_loglik_circulant(fsq, data);
    worst = std::max(worst, std::abs(dense - fast) / std::abs(dense));
  }
  const double secs = t.seconds();
  return {worst <= 1e-8 && secs < 1.0,
          "max relative difference " + num(worst, 3) + " over 10 bands, " + num(secs, 3) + " s"};
}

Outcome criterion3() {
  Timer t;
  const auto syn = synthesize("ax-small", 2024, g_workers);
  FitOptions opt;
  opt.variant = Variant::AX;
  opt.seed = 7;
  opt.workers = g_workers;
  const auto out = fit(syn.ensemble, syn.geo, opt);
  const double secs = t.seconds();
  const auto& truth = syn.truth;
  const auto& est = out.model;
  const std::size_t M = truth.grid.M;

  const auto cm_t = chain_moments(truth.lat, M, truth.grid.N, truth.meta.blocks);
  const auto cm_e = chain_moments(est.lat, M, est.grid.N, est.meta.blocks);
  // Covariances of the AR(2) innovations S H implied by the band spectra and
  // the latitudinal chain (pass metric; S and the spectral scale are only
  // identified jointly), and the anomaly covariances that also carry the
  // per-location AR(2) coefficients (reported).
  auto scaled = [&](const SGModel& mdl, Eigen::MatrixXd C, std::size_t m, std::size_t m2) {
    for (std::size_t i = 0; i < mdl.grid.N; ++i)
      for (std::size_t j = 0; j < mdl.grid.N; ++j)
        C(i, j) *= mdl.temporal.sd[mdl.grid.loc(m, i)] * mdl.temporal.sd[mdl.grid.loc(m2, j)];
    return C;
  };
  double num_h = 0, den_h = 0, num_a = 0, den_a = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const Eigen::MatrixXd Ht = scaled(truth, model_band_covariance(truth, cm_t, m), m, m);
    const Eigen::MatrixXd He = scaled(est, model_band_covariance(est, cm_e, m), m, m);
    num_h += (He - Ht).squaredNorm();
    den_h += Ht.squaredNorm();
    if (m > 0) {
      const Eigen::MatrixXd Xt = scaled(truth, model_cross_covariance(truth, cm_t, m), m, m - 1);
      const Eigen::MatrixXd Xe = scaled(est, model_cross_covariance(est, cm_e, m), m, m - 1);
      num_h += (Xe - Xt).squaredNorm();
      den_h += Xt.squaredNorm();
    }
    for (std::size_t m2 : {m, m - 1}) {
      if (m2 > m) continue;
      const auto Ct = anomaly_covariance(truth, cm_t, m, m2);
      const auto Ce = anomaly_covariance(est, cm_e, m, m2);
      num_a += (Ce - Ct).squaredNorm();
      den_a += Ct.squaredNorm();
    }
  }
  const double cov_rrmse = std::sqrt(num_h / den_h);
  const double anomaly_rrmse = std::sqrt(num_a / den_a);

  double se = 0, worst = 0;
  std::size_t within = 0;
  const std::size_t L = truth.grid.locations();
  for (std::size_t i = 0; i < L; ++i)
    for (int j = 0; j < 2; ++j) {
      const double d = j == 0 ? est.temporal.phi1[i] - truth.temporal.phi1[i] : est.temporal.phi2[i] - truth.temporal.phi2[i];
      se += d * d;
      worst = std::max(worst, std::abs(d));
      within += std::abs(d) <= 0.08;
    }
  const double phi_rmse = std::sqrt(se / double(2 * L));

  const double xi_err = std::abs(est.lat.xi_global / truth.lat.xi_global - 1.0);
  const double tau_err = std::abs(est.lat.tau_global / truth.lat.tau_global - 1.0);
  std::size_t non_tropical_links = 0;
  for (std::size_t m = 1; m < M; ++m) non_tropical_links += !est.lat.tropical[m];
  const std::size_t eff = non_tropical_links * syn.ensemble.R * (truth.grid.K - 2);

  const bool pass = cov_rrmse <= 0.15 && phi_rmse <= 0.08 && xi_err <= 0.10 && tau_err <= 0.10 && eff >= 2000 &&
                    secs < 300.0;
  return {pass, "innovation covariance relative RMSE " + num(cov_rrmse, 3) + " (anomaly field incl. AR(2): " +
                    num(anomaly_rrmse, 3) + "); AR(2) RMSE " + num(phi_rmse, 3) + " (" +
                    num(100.0 * double(within) / double(2 * L), 3) + "% within 0.08, max " + num(worst, 3) +
                    "); xi " + num(est.lat.xi_global) + " (err " + num(100 * xi_err, 3) + "%), tau " +
                    num(est.lat.tau_global) + " (err " + num(100 * tau_err, 3) + "%) on " + std::to_string(eff) +
                    " samples; " + num(secs, 3) + " s"};
}

Outcome criterion4() {
  double worst = -INFINITY;
  std::size_t bands = 0;
  for (const char* preset : {"lao-small", "alt-small"})
    for (std::uint64_t seed : {11, 12}) {
      const auto syn = synthesize(preset, seed, g_workers);
      FitOptions opt;
      opt.variant = Variant::ALT;
      opt.seed = seed;
      opt.workers = g_workers;
      opt.var1 = false;
      const auto out = fit(syn.ensemble, syn.geo, opt);
      const auto& g = syn.truth.grid;
      const double n_band = double((syn.ensemble.R - 1) * (g.K - 2) * g.N);
      for (const auto& b : out.report.bands) {
        worst = std::max(worst, (b.chain_loglik[0] - b.chain_loglik[1]) / n_band);
        worst = std::max(worst, (b.chain_loglik[1] - b.chain_loglik[2]) / n_band);
        ++bands;
      }
    }
  return {worst <= 1e-4, "largest per-observation drop along AX -> LAO -> ALT " + num(worst, 3) + " over " +
                             std::to_string(bands) + " band fits (positive means a drop)"};
}

Outcome criterion5() {
  Timer t;
  const std::size_t S = 10000;
  const auto model = small_model(4, 8, 10, Variant::AX, false, 0.0, 0.0, 5);
  const auto& g = model.grid;
  const auto ens = Generator(model).generate(S, 55, g_workers);
  const std::size_t L = g.K * g.M * g.N;
  const auto mean = model.mean.expand();

  // (a) mean and (b) marginal variance at every grid point.
  double worst_mean = 0, worst_var = 0;
  for (std::size_t i = 0; i < L; ++i) {
    double s = 0, ss = 0;
    for (std::size_t r = 0; r < S; ++r) {
      const double v = ens.values[r * L + i] - mean[i];
      s += v;
      ss += v * v;
    }
    const std::size_t m = (i / g.N) % g.M, n = i % g.N;
    const double var = model_marginal_variance(model, m, n);
    worst_mean = std::max(worst_mean, std::abs(s / S) / std::sqrt(var / S));
    const double svar = (ss - s * s / S) / (S - 1);
    worst_var = std::max(worst_var, std::abs(svar - var) / (var * std::sqrt(2.0 / (S - 1))));
  }

  // (c) periodograms of the unit-scale innovations and (d) adjacent-band coherence.
  const auto h = true_innovations(model, ens);
  const double n_draws = double(S * h.T);
  double worst_pgram = 0, worst_coh = 0;
  std::vector<Eigen::MatrixXd> z(g.M);
  for (std::size_t m = 0; m < g.M; ++m) {
    const auto& beta = model.bands[m].beta[kOcean];
    std::vector<double> pg(g.N, 0.0);
    Eigen::MatrixXd rows(g.N, S * h.T);
    for (std::size_t r = 0; r < S; ++r)
      for (std::size_t tt = 0; tt < h.T; ++tt)
        for (std::size_t n = 0; n < g.N; ++n) rows(n, r * h.T + tt) = h.at(r, tt, m, n);
    for (std::size_t c = 0; c < g.N; ++c) {
      Eigen::VectorXd cs(g.N), sn(g.N);
      for (std::size_t n = 0; n < g.N; ++n) {
        cs(n) = std::cos(2 * pi * double(n * c) / double(g.N));
        sn(n) = std::sin(2 * pi * double(n * c) / double(g.N));
      }
      const Eigen::VectorXd re = rows.transpose() * cs, im = rows.transpose() * sn;
      const double mean_pg = (re.squaredNorm() + im.squaredNorm()) / (double(g.N) * n_draws);
      const double expect = double(g.N) * component_spectrum_sq(double(c), beta.phi, beta.alpha, beta.nu, g.N);
      const double rel_sd = (c == 0 || c == g.N / 2) ? std::sqrt(2.0) : 1.0;
      worst_pgram = std::max(worst_pgram, std::abs(mean_pg - expect) / (expect * rel_sd / std::sqrt(n_draws)));
    }
    z[m] = SpectralTransform(model.band_covariance(m)).to_slots(rows);
  }
  for (std::size_t m = 1; m < g.M; ++m) {
    const auto prof = coherence_profile(model.lat.xi_at(m), model.lat.tau_at(m), g.N);
    for (std::size_t s = 0; s < g.N; ++s) {
      const double sxy = z[m].row(s).dot(z[m - 1].row(s));
      const double rho = sxy / std::sqrt(z[m].row(s).squaredNorm() * z[m - 1].row(s).squaredNorm());
      const double expect = prof[slot_wavenumber(s, g.N)];
      worst_coh = std::max(worst_coh, std::abs(rho - expect) / ((1 - expect * expect) / std::sqrt(n_draws)));
    }
  }
  const double secs = t.seconds();
  const double worst = std::max({worst_mean, worst_var, worst_pgram, worst_coh});
  return {worst <= 4.0 && secs < 120.0,
          "largest deviation in Monte Carlo standard errors: mean " + num(worst_mean, 3) + ", variance " +
              num(worst_var, 3) + ", periodogram " + num(worst_pgram, 3) + ", coherence " + num(worst_coh, 3) +
              " (10^4 surrogates, " + num(secs, 3) + " s)"};
}

Outcome criterion6() {
  const std::size_t S = 10000;
  const auto model = small_model(4, 8, 10, Variant::LAO, false, 0.12, 0.06, 6);
  const auto ens = Generator(model).generate(S, 66, g_workers);
  const auto h = true_innovations(model, ens);
  const auto emp = contrast_variances(h);
  const auto fit_c = fitted_contrasts(model);
  const double n = double(S * h.T);
  double worst = 0;
  for (std::size_t i = 0; i < emp.ew.size(); ++i) {
    worst = std::max(worst, std::abs(emp.ew[i] - fit_c.ew[i]) / (fit_c.ew[i] * std::sqrt(2.0 / n)));
    if (!std::isnan(fit_c.ns[i]))
      worst = std::max(worst, std::abs(emp.ns[i] - fit_c.ns[i]) / (fit_c.ns[i] * std::sqrt(2.0 / n)));
  }
  InnovationField flat = h;
  std::fill(flat.values.begin(), flat.values.end(), 2.5);
  const auto zero = contrast_variances(flat);
  bool exact_zero = true;
  for (double v : zero.ew) exact_zero &= v == 0.0;
  for (std::size_t i = model.grid.N; i < zero.ns.size(); ++i) exact_zero &= zero.ns[i] == 0.0;
  return {worst <= 4.0 && exact_zero, "largest contrast deviation " + num(worst, 3) +
                                          " Monte Carlo standard errors; constant field gives " +
                                          (exact_zero ? "exactly 0" : "nonzero values")};
}

std::string fit_fingerprint(const FitOutput& out) {
  FitReport r = out.report;
  r.seconds_step1 = r.seconds_step2 = r.seconds_step3 = r.seconds_refit = 0.0;
  return serialize_model(out.model) + r.to_json();
}

Outcome criterion7() {
  const auto syn = synthesize("lao-small", 77, 1);
  FitOptions opt;
  opt.variant = Variant::LAO;
  opt.seed = 13;
  opt.refit_pairs = true;
  std::vector<std::string> prints;
  for (unsigned w : {1u, 4u, 1u}) {
    opt.workers = w;
    prints.push_back(fit_fingerprint(fit(syn.ensemble, syn.geo, opt)));
  }
  const bool fit_same = prints[0] == prints[1] && prints[0] == prints[2];

  const Generator gen(syn.truth);
  const auto a = gen.generate(12, 5, 1), b = gen.generate(12, 5, 4), c = gen.generate(12, 5, 1);
  const bool gen_same = std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0 &&
                        std::memcmp(a.values.data(), c.values.data(), a.values.size() * sizeof(double)) == 0;
  return {fit_same && gen_same, std::string("fit ") + (fit_same ? "identical" : "DIFFERS") +
                                    " across runs and workers {1, 4}; generate " +
                                    (gen_same ? "identical" : "DIFFERS")};
}

Outcome criterion8() {
  Timer t;
  const auto dir = scratch("storage");
  // Random parameters on the large grid, five runs drawn from them, then an AX fit.
  const auto syn = synthesize("full-grid", 88, g_workers);
  write_ensemble(syn.ensemble, dir / "full.ensf");
  FitOptions opt;
  opt.variant = Variant::AX;
  opt.seed = 8;
  opt.workers = g_workers;
  const auto out = fit(syn.ensemble, syn.geo, opt);
  save_model(out.model, dir / "full.sgm");
  const auto rep = storage_report(dir / "full.sgm", {dir / "full.ensf"});
  fs::remove_all(dir);
  return {rep.ratio >= 20.0, "model " + std::to_string(rep.model_bytes) + " bytes vs ensemble " +
                                 std::to_string(rep.ensemble_bytes) + " bytes, ratio " + num(rep.ratio, 4) + " (" +
                                 num(t.seconds(), 3) + " s incl. fit)"};
}

Outcome criterion9() {
  const auto dir = scratch("speed");
  const SGModel model = preset_model("ax-small");
  save_model(model, dir / "ax.sgm");
  Timer t;
  GenerationRequest req;
  req.count = 100;
  req.seed = 9;
  req.workers = 1;
  req.pattern = (dir / "s_{i}.ensf").string();
  const auto files = generate_files(load_model(dir / "ax.sgm"), req);
  const double secs = t.seconds();
  fs::remove_all(dir);
  return {files.size() == 100 && secs < 10.0,
          "100 surrogates (load, generate, write) in " + num(secs, 3) + " s on one thread"};
}

Outcome criterion10() {
  const std::size_t reps = 100;
  SGModel truth = small_model(2, 32, 402, Variant::AX, false, 0.136, 0.071, 10);
  truth.lat.xi_global = 0.96;
  truth.lat.tau_global = 0.628;
  truth.validate();
  std::vector<BandCovariance> covs;
  for (std::size_t m = 0; m < 2; ++m) covs.push_back(truth.band_covariance(m));
  PairFitOptions po;
  po.P = default_block_count(32);
  std::size_t wins = 0, pipeline_wins = 0;
  double sum_a = 0, sum_b = 0, pipe_a = 0, pipe_b = 0;
  Timer t;
  for (std::size_t i = 0; i < reps; ++i) {
    const auto ens = Generator(truth).generate(5, 1000 + i, g_workers);
    // Pair detection on bands whitened within-band by the generating model.
    const auto d = multiband_data(spectral_innovations(true_innovations(truth, ens), covs, g_workers), g_workers);
    po.seed = i;
    const PairFit pf = fit_adjacent_pair(d.links.at(0), d.R, d.T, po);
    wins += pf.bic_var1 < pf.bic_ar1;
    sum_a += pf.a;
    sum_b += pf.b;
    // Same replicate through the full three-step fit (reported only).
    FitOptions opt;
    opt.variant = Variant::AX;
    opt.seed = i;
    opt.workers = g_workers;
    const auto out = fit(ens, GeoDescriptors::all_ocean(2, 32), opt);
    const auto& q = out.report.pairs.at(0);
    pipeline_wins += q.bic_var1 < q.bic_ar1;
    pipe_a += out.model.lat.a;
    pipe_b += out.model.lat.b;
  }
  const double n = double(reps);
  const double ma = sum_a / n, mb = sum_b / n;
  return {double(wins) / n >= 0.95 && std::abs(ma - 0.136) <= 0.05 && std::abs(mb - 0.071) <= 0.05,
          "BIC prefers VAR(1) in " + std::to_string(wins) + "/" + std::to_string(reps) + " replicates; mean a " +
              num(ma, 3) + ", mean b " + num(mb, 3) + " (R(K-2) = 2000); full fit: " + std::to_string(pipeline_wins) +
              "/" + std::to_string(reps) + ", mean a " + num(pipe_a / n, 3) + ", mean b " + num(pipe_b / n, 3) + " (" +
              num(t.seconds(), 3) + " s)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--workers" && i + 1 < argc) {
      g_workers = static_cast<unsigned>(std::stoul(argv[++i]));
    } else if (a == "--only" && i + 1 < argc) {
      only.push_back(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: sgen_acceptance [--workers W] [--only N]...\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"likelihood oracle equivalence", criterion1},
      {"AX spectral fast path", criterion2},
      {"simulate-refit recovery", criterion3},
      {"nesting monotonicity", criterion4},
      {"generation fidelity", criterion5},
      {"contrast-variance consistency", criterion6},
      {"determinism", criterion7},
      {"storage ratio", criterion8},
      {"generation speed", criterion9},
      {"VAR(1) vs AR(1) detection", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failures ? 1 : 0;
}
