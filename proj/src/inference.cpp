#include "sgen/inference.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "sgen/error.hpp"
#include "sgen/optimizer.hpp"
#include "sgen/parallel.hpp"

namespace sgen {

using std::numbers::pi;

namespace {

constexpr double kGammaScale = 1000.0;

double default_r(std::size_t N) {
  const double hi = static_cast<double>(N) / 2.0;
  return hi > 2.0 ? 2.0 : 1.0 + 0.5 * (hi - 1.0);
}

void push_triple(std::vector<double>& u, const RegimeSpectrum& r) {
  u.push_back(std::log(r.phi));
  u.push_back(std::log(r.alpha));
  u.push_back(std::log(r.nu));
}

RegimeSpectrum read_triple(const std::vector<double>& u, std::size_t& i) {
  RegimeSpectrum r;
  r.phi = std::exp(u[i]);
  r.alpha = std::exp(u[i + 1]);
  r.nu = std::exp(u[i + 2]);
  i += 3;
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t variant_index(Variant v) { return v == Variant::AX ? 0 : v == Variant::LAO ? 1 : 2; }

}  // namespace

BandPacking::BandPacking(Variant variant, const BandGeometry& geom) : variant_(variant), N_(geom.N) {
  mountain_ = geom.has_mountain;
  plain_ = geom.has_plain_land;
  land_ = geom.has_land();
  ocean_ = geom.has_ocean;
  transition_ = geom.has_transition();
  switch (variant_) {
    case Variant::AX: size_ = 3; break;
    case Variant::LAO: size_ = 3 * land_ + 3 * ocean_ + transition_; break;
    case Variant::ALT: size_ = 3 * mountain_ + 3 * plain_ + 3 * ocean_ + 3 * land_ + transition_; break;
  }
}

std::vector<double> BandPacking::pack(const BandSpectrumParams& p) const {
  std::vector<double> u;
  u.reserve(size_);
  if (variant_ == Variant::AX) {
    push_triple(u, p.beta[kOcean]);
    return u;
  }
  if (variant_ == Variant::LAO) {
    if (land_) push_triple(u, p.beta[kPlainLand]);
  } else {
    if (mountain_) push_triple(u, p.beta[kMountain]);
    if (plain_) push_triple(u, p.beta[kPlainLand]);
  }
  if (ocean_) push_triple(u, p.beta[kOcean]);
  if (variant_ == Variant::ALT && land_) {
    u.push_back(p.gamma_phi * kGammaScale);
    u.push_back(p.gamma_alpha * kGammaScale);
    u.push_back(p.gamma_nu * kGammaScale);
  }
  if (transition_) u.push_back(to_logit(p.r, 1.0, static_cast<double>(N_) / 2.0));
  return u;
}

BandSpectrumParams BandPacking::unpack(const std::vector<double>& u, const BandSpectrumParams& base) const {
  BandSpectrumParams p = base;
  p.variant = variant_;
  std::size_t i = 0;
  if (variant_ == Variant::AX) {
    p.beta[kOcean] = read_triple(u, i);
    return p;
  }
  if (variant_ == Variant::LAO) {
    if (land_) p.beta[kPlainLand] = read_triple(u, i);
    p.beta[kMountain] = p.beta[kPlainLand];
  } else {
    if (mountain_) p.beta[kMountain] = read_triple(u, i);
    if (plain_) p.beta[kPlainLand] = read_triple(u, i);
    if (mountain_ && !plain_) p.beta[kPlainLand] = p.beta[kMountain];
    if (plain_ && !mountain_) p.beta[kMountain] = p.beta[kPlainLand];
  }
  if (ocean_) p.beta[kOcean] = read_triple(u, i);
  if (variant_ == Variant::ALT && land_) {
    p.gamma_phi = u[i++] / kGammaScale;
    p.gamma_alpha = u[i++] / kGammaScale;
    p.gamma_nu = u[i++] / kGammaScale;
  }
  if (transition_) p.r = from_logit(u[i++], 1.0, static_cast<double>(N_) / 2.0);
  return p;
}

BandSpectrumParams promote(const BandSpectrumParams& p, Variant variant, std::size_t N) {
  BandSpectrumParams out = p;
  if (p.variant == Variant::AX && variant != Variant::AX) {
    out.beta.fill(p.beta[kOcean]);
    out.g = 0;
    out.r = default_r(N);
    out.variant = Variant::LAO;
  }
  if (out.variant == Variant::LAO && variant == Variant::ALT) {
    out.beta[kMountain] = out.beta[kPlainLand];
    out.gamma_phi = out.gamma_alpha = out.gamma_nu = 0.0;
  }
  out.variant = variant;
  return out;
}

BandSpectrumParams periodogram_init(const BandScatter& data) {
  const std::size_t N = data.N;
  const double scale = static_cast<double>((data.R - 1) * data.T) * static_cast<double>(N * N);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, count = 0, total = 0;
  for (std::size_t c = 0; c <= N / 2; ++c) {
    const double I = data.periodogram[c] / scale;
    if (!(I > 0.0)) continue;
    const double s = std::sin(static_cast<double>(c) * pi / static_cast<double>(N));
    const double x = std::log(1.0 + 4.0 * s * s);
    const double y = std::log(I);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1;
    total += I;
  }
  BandSpectrumParams p;
  p.variant = Variant::AX;
  RegimeSpectrum rs{1.0, 1.0, 0.5};
  const double den = count * sxx - sx * sx;
  if (count >= 2 && den > 0) {
    const double slope = (count * sxy - sx * sy) / den;
    const double icpt = (sy - slope * sx) / count;
    rs.phi = std::exp(icpt);
    rs.nu = std::clamp(-slope - 0.5, 0.05, 10.0);
  } else if (count > 0) {
    rs.phi = total / count;
  }
  p.beta.fill(rs);
  p.r = default_r(N);
  return p;
}

double band_loglik(const BandSpectrumParams& p, const BandGeometry& geom, const BandScatter& data) {
  try {
    if (p.variant == Variant::AX) {
      std::vector<double> fsq(data.N);
      const auto& b = p.beta[kOcean];
      for (std::size_t c = 0; c < data.N; ++c)
        fsq[c] = component_spectrum_sq(static_cast<double>(c), b.phi, b.alpha, b.nu, data.N);
      return band_restricted_loglik_circulant(fsq, data);
    }
    return band_restricted_loglik(build_band_covariance(p, geom).matrix, data);
  } catch (const Error&) {
    return -INFINITY;
  }
}

namespace {

struct Stage {
  BandSpectrumParams params;
  double loglik = -INFINITY;
  std::size_t evals = 0;
  bool converged = false;
};

Stage run_stage(const BandScatter& data, const BandGeometry& geom, const BandPacking& pk,
                const BandSpectrumParams& base, const BandFitOptions& opt, int restarts) {
  NelderMeadOptions nm;
  nm.max_evals = opt.max_evals;
  nm.restarts = restarts;
  nm.seed = opt.seed;
  Objective f = [&](const std::vector<double>& u) { return -band_loglik(pk.unpack(u, base), geom, data); };
  const OptimResult r = minimize(f, pk.pack(base), nm);
  Stage s;
  s.params = pk.unpack(r.x, base);
  s.loglik = -r.value;
  s.evals = r.evals;
  s.converged = r.converged;
  return s;
}

Stage optimize_stage(const BandScatter& data, const BandGeometry& geom, Variant v, BandSpectrumParams start,
                     const BandFitOptions& opt) {
  start.variant = v;
  const BandPacking pk(v, geom);
  if (v == Variant::AX || !geom.has_transition()) {
    if (v != Variant::AX) start.g = 0;
    return run_stage(data, geom, pk, start, opt, opt.restarts);
  }
  const int G = std::min(opt.max_shift, static_cast<int>(geom.N / 4));
  Stage best;
  std::size_t evals = 0;
  for (int k = 0; k <= 2 * G; ++k) {
    const int g = (k % 2 == 1) ? -(k + 1) / 2 : k / 2;  // 0, -1, 1, -2, 2, ...
    BandSpectrumParams base = start;
    base.g = g;
    Stage s = run_stage(data, geom, pk, base, opt, 0);
    evals += s.evals;
    if (s.loglik > best.loglik) best = s;
  }
  Stage final = run_stage(data, geom, pk, best.params, opt, opt.restarts);
  final.evals += evals;
  if (final.loglik < best.loglik) {
    best.evals = final.evals;
    return best;
  }
  return final;
}

}  // namespace

BandFitResult fit_band(const BandScatter& data, const BandGeometry& geom, Variant variant, const BandFitOptions& opt,
                       const BandSpectrumParams* init) {
  if (data.R < 2) throw Error(ErrorCode::SingleRun, "band fit needs at least two runs");
  BandFitResult res;
  res.chain_loglik.fill(std::numeric_limits<double>::quiet_NaN());
  Stage cur;
  if (init) {
    cur = optimize_stage(data, geom, variant, *init, opt);
    res.chain_loglik[variant_index(variant)] = cur.loglik;
    res.evals = cur.evals;
  } else {
    cur = optimize_stage(data, geom, Variant::AX, periodogram_init(data), opt);
    res.chain_loglik[0] = cur.loglik;
    res.evals = cur.evals;
    for (Variant v : {Variant::LAO, Variant::ALT}) {
      if (variant_index(v) > variant_index(variant)) break;
      cur = optimize_stage(data, geom, v, promote(cur.params, v, data.N), opt);
      res.chain_loglik[variant_index(v)] = cur.loglik;
      res.evals += cur.evals;
    }
  }
  if (!std::isfinite(cur.loglik))
    throw Error(ErrorCode::OptimizerFailure, "band likelihood has no finite value along the search");
  res.params = cur.params;
  res.loglik = cur.loglik;
  res.converged = cur.converged;
  res.n_params = band_param_count(variant, geom);
  return res;
}

LatFitResult fit_latitudinal(const MultibandData& d, std::span<const double> latitudes, const FitOptions& opt,
                             std::size_t P) {
  const std::size_t M = d.M;
  LatFitResult out;
  out.params = LatCoherenceParams::independent(M, opt.tropics_deg);
  out.params.tropical = tropical_flags(latitudes, opt.tropics_deg);
  out.independent_loglik = multiband_loglik_h(out.params, d, P);
  out.converged = true;
  if (M < 2) {
    out.loglik = out.independent_loglik;
    return out;
  }
  const unsigned workers = resolve_workers(opt.workers);
  out.pairs.resize(M - 1);
  parallel_for(M - 1, workers, [&](std::size_t i) {
    PairFitOptions po;
    po.max_evals = opt.max_evals;
    po.restarts = opt.restarts;
    po.seed = opt.seed + 7919 * (i + 1);
    po.P = P;
    out.pairs[i] = fit_adjacent_pair(d.links[i], d.R, d.T, po);
  });
  LatCoherenceParams p = out.params;
  bool any_global = false;
  for (std::size_t m = 0; m < M; ++m) {
    const PairFit& pf = out.pairs[m == 0 ? 0 : m - 1];
    if (p.tropical[m]) {
      p.xi[m] = opt.var1 ? pf.xi : pf.xi_ar1;
      p.tau[m] = opt.var1 ? pf.tau : pf.tau_ar1;
    } else if (m > 0) {
      any_global = true;
    }
    out.converged = out.converged && (m == 0 || pf.converged);
  }

  auto apply = [&](const std::vector<double>& u, LatCoherenceParams& q) {
    std::size_t i = 0;
    if (any_global) {
      q.xi_global = from_logit(u[i++], 0.0, 1.0);
      q.tau_global = from_log(u[i++]);
    }
    if (opt.var1) {
      q.a = std::tanh(u[i++]);
      q.b = std::tanh(u[i++]);
    }
  };
  std::vector<double> u0;
  if (any_global) {
    u0.push_back(to_logit(0.9, 0.0, 1.0));
    u0.push_back(to_log(0.5));
  }
  if (opt.var1) u0.insert(u0.end(), {0.0, 0.0});
  // Frozen tropical values still count as coherence even with no free parameters.
  double best;
  if (u0.empty()) {
    best = multiband_loglik_h(p, d, P);
  } else {
    Objective f = [&](const std::vector<double>& u) {
      LatCoherenceParams q = p;
      apply(u, q);
      return -multiband_loglik_h(q, d, P);
    };
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals;
    nm.restarts = opt.restarts;
    nm.seed = opt.seed + 104729;
    const OptimResult r = minimize(f, u0, nm);
    apply(r.x, p);
    best = -r.value;
    out.converged = out.converged && r.converged;
  }
  if (!(best >= out.independent_loglik)) {
    out.fallback = true;
    out.loglik = out.independent_loglik;
    return out;
  }
  out.params = p;
  out.loglik = best;
  return out;
}

namespace {

double chain_start_loglik(const Eigen::MatrixXd& z, std::size_t R, std::size_t T) {
  const double TN = static_cast<double>(T * static_cast<std::size_t>(z.rows()));
  return -0.5 * (TN * static_cast<double>(R - 1) * std::log(2.0 * pi) + TN * std::log(static_cast<double>(R)) +
                 z.squaredNorm());
}

}  // namespace

SGModel refit_adjacent(const SGModel& model, const InnovationField& h, const std::vector<std::size_t>& pairs,
                       const FitOptions& opt, std::vector<RefitRecord>* log) {
  SGModel out = model;
  const std::size_t M = model.grid.M, N = model.grid.N, R = h.R, T = h.T;
  if (M < 2) return out;
  const std::size_t P = model.meta.blocks;
  const double jac_scale = static_cast<double>((R - 1) * T);
  std::vector<Eigen::MatrixXd> z(M);
  std::vector<double> ldet(M);
  parallel_for(M, resolve_workers(opt.workers),
               [&](std::size_t m) { band_spectral_innovations(h, m, out.band_covariance(m), z[m], ldet[m]); });
  auto profile = [&](std::size_t m) { return coherence_profile(out.lat.xi_at(m), out.lat.tau_at(m), N); };
  auto link = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::size_t m) {
    return link_loglik(link_stats(x, y), R, T, profile(m), out.lat.a, out.lat.b, P);
  };

  for (std::size_t m : pairs) {
    if (m + 1 >= M) continue;
    const BandGeometry g0 = out.geometry(m), g1 = out.geometry(m + 1);
    const BandPacking pk0(out.variant, g0), pk1(out.variant, g1);
    const BandSpectrumParams base0 = out.bands[m], base1 = out.bands[m + 1];

    // Model terms that depend on the spectra of bands m and m+1.
    auto local_total = [&](const Eigen::MatrixXd& za, double la, const Eigen::MatrixXd& zb, double lb) {
      double t = -jac_scale * (la + lb);
      t += m == 0 ? chain_start_loglik(za, R, T) : link(z[m - 1], za, m);
      t += link(za, zb, m + 1);
      if (m + 2 < M) t += link(zb, z[m + 2], m + 2);
      return t;
    };
    RefitRecord rec;
    rec.band = m;
    rec.before = local_total(z[m], ldet[m], z[m + 1], ldet[m + 1]);

    auto split = [&](const std::vector<double>& u) {
      std::vector<double> u0(u.begin(), u.begin() + static_cast<long>(pk0.size()));
      std::vector<double> u1(u.begin() + static_cast<long>(pk0.size()), u.end());
      return std::pair{pk0.unpack(u0, base0), pk1.unpack(u1, base1)};
    };
    const auto prof1 = profile(m + 1);
    Objective f = [&](const std::vector<double>& u) {
      try {
        const auto [p0, p1] = split(u);
        Eigen::MatrixXd za, zb;
        double la, lb;
        band_spectral_innovations(h, m, build_band_covariance(p0, g0, m), za, la);
        band_spectral_innovations(h, m + 1, build_band_covariance(p1, g1, m + 1), zb, lb);
        const double ll = chain_start_loglik(za, R, T) + link_loglik(link_stats(za, zb), R, T, prof1, out.lat.a,
                                                                     out.lat.b, P) -
                          jac_scale * (la + lb);
        return -ll;
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::vector<double> u = pk0.pack(base0);
    const auto u1 = pk1.pack(base1);
    u.insert(u.end(), u1.begin(), u1.end());
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals;
    nm.restarts = 0;
    nm.seed = opt.seed + 31 * (m + 1);
    const OptimResult r = minimize(f, u, nm);
    rec.converged = r.converged;
    const auto [p0, p1] = split(r.x);
    Eigen::MatrixXd za, zb;
    double la = 0, lb = 0;
    bool ok = true;
    try {
      band_spectral_innovations(h, m, build_band_covariance(p0, g0, m), za, la);
      band_spectral_innovations(h, m + 1, build_band_covariance(p1, g1, m + 1), zb, lb);
    } catch (const Error&) {
      ok = false;
    }
    rec.after = rec.before;
    if (ok) {
      const double after = local_total(za, la, zb, lb);
      if (after > rec.before) {
        rec.after = after;
        rec.accepted = true;
        out.bands[m] = p0;
        out.bands[m + 1] = p1;
        z[m] = std::move(za);
        z[m + 1] = std::move(zb);
        ldet[m] = la;
        ldet[m + 1] = lb;
      }
    }
    if (log) log->push_back(rec);
  }
  return out;
}

double temporal_log_det(const TemporalParams& tp, std::size_t K) {
  CompensatedSum s;
  for (std::size_t i = 0; i < tp.phi1.size(); ++i) {
    const auto st = stationary_start(tp.phi1[i], tp.phi2[i], tp.sd[i]);
    s.add(std::log(st.l11) + std::log(st.l22) + static_cast<double>(K - 2) * std::log(tp.sd[i]));
  }
  return s.value();
}

namespace {

double factorized_from_anoms(const Anomalies& anoms, const SGModel& model, std::size_t P, unsigned workers) {
  const auto& g = anoms.spec;
  const InnovationField h = whiten_cube(g, anoms.R, anoms.values, model.temporal, true, true);
  std::vector<BandCovariance> covs(g.M);
  for (std::size_t m = 0; m < g.M; ++m) covs[m] = model.band_covariance(m);
  const MultibandData d = multiband_data(spectral_innovations(h, covs, workers), workers);
  return multiband_loglik_h(model.lat, d, P) -
         static_cast<double>(anoms.R - 1) * temporal_log_det(model.temporal, g.K);
}

}  // namespace

double factorized_restricted_loglik(const EnsembleField& field, const SGModel& model, std::size_t P) {
  if (field.R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  if (!(field.spec.M == model.grid.M && field.spec.N == model.grid.N && field.spec.K == model.grid.K))
    throw Error(ErrorCode::GridMismatch, "ensemble grid differs from model grid");
  return factorized_from_anoms(ensemble_mean_and_anomalies(field), model, P, 1);
}

double exact_restricted_loglik(const EnsembleField& field, const SGModel& model) {
  const auto& g = model.grid;
  const std::size_t L = g.M * g.N, D = g.K * L, R = field.R;
  if (D > 4096) throw Error(ErrorCode::TooLargeForDense, "K*M*N = " + std::to_string(D) + " exceeds 4096");
  if (R < 2) throw Error(ErrorCode::SingleRun, "restricted likelihood needs at least two runs");
  if (!(field.spec.M == g.M && field.spec.N == g.N && field.spec.K == g.K))
    throw Error(ErrorCode::GridMismatch, "ensemble grid differs from model grid");
  const auto Li = static_cast<Eigen::Index>(L), Ni = static_cast<Eigen::Index>(g.N);

  // Spatial covariance of H(t): block-diagonal synthesis applied to the chain.
  Eigen::MatrixXd Bd = Eigen::MatrixXd::Zero(Li, Li);
  for (std::size_t m = 0; m < g.M; ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    Bd.block(mi * Ni, mi * Ni, Ni, Ni) = model.band_covariance(m).synthesis;
  }
  const Eigen::MatrixXd C = Bd * chain_covariance(model.lat, g.M, g.N, 1) * Bd.transpose();

  // Time: e = G h per location, G lower triangular from the AR(2) recursion.
  const auto Di = static_cast<Eigen::Index>(D);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Di, Di);
  std::vector<double> unit(g.K), col(g.K);
  for (std::size_t loc = 0; loc < L; ++loc)
    for (std::size_t k2 = 0; k2 < g.K; ++k2) {
      std::fill(unit.begin(), unit.end(), 0.0);
      unit[k2] = 1.0;
      colorize_into(unit, model.temporal.phi1[loc], model.temporal.phi2[loc], model.temporal.sd[loc], col);
      for (std::size_t k = 0; k < g.K; ++k)
        G(static_cast<Eigen::Index>(k * L + loc), static_cast<Eigen::Index>(k2 * L + loc)) = col[k];
    }
  Eigen::MatrixXd blockC = Eigen::MatrixXd::Zero(Di, Di);
  for (std::size_t k = 0; k < g.K; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    blockC.block(ki * Li, ki * Li, Li, Li) = C;
  }
  const Eigen::MatrixXd Sigma = G * blockC * G.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "dense covariance is not positive definite");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  const Anomalies anoms = ensemble_mean_and_anomalies(field);
  Eigen::MatrixXd Dm(Di, static_cast<Eigen::Index>(R));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t i = 0; i < D; ++i) Dm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = anoms.values[r * D + i];
  const double quad = llt.matrixL().solve(Dm).squaredNorm();
  const double Dd = static_cast<double>(D);
  return -0.5 * (Dd * static_cast<double>(R - 1) * std::log(2.0 * pi) + Dd * std::log(static_cast<double>(R)) +
                 static_cast<double>(R - 1) * logdet + quad);
}

std::size_t model_param_count(const SGModel& model) {
  const std::size_t M = model.grid.M;
  std::size_t k = 3 * M * model.grid.N;
  for (std::size_t m = 0; m < M; ++m) k += band_param_count(model.variant, model.geometry(m));
  const auto& lat = model.lat;
  bool coupled = lat.xi_global > 0.0 || lat.a != 0.0 || lat.b != 0.0;
  std::size_t lat_k = 0;
  bool any_global = false;
  for (std::size_t m = 1; m < M; ++m) {
    if (lat.tropical[m]) {
      lat_k += 2;
      coupled = coupled || lat.xi[m] > 0.0;
    } else {
      any_global = true;
    }
  }
  if (!coupled || M < 2) return k;
  if (any_global) lat_k += 2;
  if (model.meta.var1) lat_k += 2;
  return k + lat_k;
}

std::string FitReport::to_json() const {
  using nlohmann::json;
  json j;
  j["variant"] = std::string(to_string(variant));
  j["latitudinal_model"] = var1 ? "var1" : "ar1";
  j["blocks"] = blocks;
  j["n_obs"] = n_obs;
  j["step2_loglik"] = step2_loglik;
  j["step3_loglik"] = step3_loglik;
  j["refit_loglik"] = refit_loglik;
  j["step2_normalized"] = normalized(step2_loglik);
  j["step3_normalized"] = normalized(step3_loglik);
  j["refit_normalized"] = normalized(refit_loglik);
  j["total_loglik"] = total_loglik;
  j["n_params"] = n_params;
  j["bic"] = bic;
  j["lat_fallback"] = lat_fallback;
  j["converged"] = converged;
  j["seconds"] = {{"step1", seconds_step1}, {"step2", seconds_step2}, {"step3", seconds_step3}, {"refit", seconds_refit}};
  json jb = json::array();
  for (const auto& b : bands) {
    json chain = json::array();
    for (double v : b.chain_loglik) chain.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    jb.push_back({{"band", b.band}, {"loglik", b.loglik}, {"chain_loglik", chain}, {"n_params", b.n_params},
                  {"bic", b.bic}, {"converged", b.converged}});
  }
  j["bands"] = jb;
  json jp = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    jp.push_back({{"bands", {i, i + 1}}, {"xi_ar1", p.xi_ar1}, {"tau_ar1", p.tau_ar1}, {"bic_ar1", p.bic_ar1},
                  {"xi", p.xi}, {"tau", p.tau}, {"a", p.a}, {"b", p.b}, {"bic_var1", p.bic_var1},
                  {"converged", p.converged}});
  }
  j["pairs"] = jp;
  json jr = json::array();
  for (const auto& r : refits)
    jr.push_back({{"bands", {r.band, r.band + 1}}, {"before", r.before}, {"after", r.after}, {"delta", r.after - r.before},
                  {"accepted", r.accepted}, {"converged", r.converged}});
  j["refits"] = jr;
  return j.dump(2);
}

FitOutput fit(const EnsembleField& field, const GeoDescriptors& geo, const FitOptions& opt) {
  if (field.R < 2) throw Error(ErrorCode::SingleRun, "fitting needs at least two runs");
  field.validate();
  const auto& g = field.spec;
  if (geo.M != g.M || geo.N != g.N) throw Error(ErrorCode::GridMismatch, "descriptor grid differs from ensemble grid");
  if (!(opt.lambda > 0.0 && opt.lambda <= 1.0)) throw Error(ErrorCode::ConfigError, "lambda must lie in (0, 1]");
  const unsigned workers = resolve_workers(opt.workers);
  const std::size_t P = opt.blocks ? opt.blocks : default_block_count(g.N);
  check_partition(g.N, P);

  FitOutput out;
  SGModel& model = out.model;
  FitReport& rep = out.report;
  rep.variant = opt.variant;
  rep.var1 = opt.var1;
  rep.blocks = P;
  rep.n_obs = (field.R - 1) * (g.K - 2) * g.M * g.N;

  // Step 1.
  auto t0 = std::chrono::steady_clock::now();
  const Anomalies anoms = ensemble_mean_and_anomalies(field);
  TemporalParams tp = fit_temporal(anoms, workers);
  for (std::size_t i = 0; i < tp.phi1.size(); ++i) {
    // Stored as float32; keep the rounded pair strictly stationary.
    auto round_pair = [&] {
      tp.phi1[i] = static_cast<float>(tp.phi1[i]);
      tp.phi2[i] = static_cast<float>(tp.phi2[i]);
    };
    round_pair();
    if (!check_stationary(tp.phi1[i], tp.phi2[i])) {
      std::tie(tp.phi1[i], tp.phi2[i]) = project_stationary(tp.phi1[i], tp.phi2[i], 1e-5);
      round_pair();
    }
    tp.sd[i] = static_cast<float>(tp.sd[i]);
  }
  model.grid = g;
  model.variant = opt.variant;
  model.temporal = tp;
  model.mean = compress_mean(smooth_mean(anoms, opt.lambda), opt.mean_min_gain);
  if (opt.variant != Variant::AX) encode_geometry(geo, model.surface, model.altitude);
  model.meta.blocks = P;
  model.meta.var1 = opt.var1;
  rep.seconds_step1 = seconds_since(t0);

  // Step 2.
  t0 = std::chrono::steady_clock::now();
  const InnovationField innov = whiten(anoms, tp);
  std::vector<BandFitResult> bres(g.M);
  parallel_for(g.M, workers, [&](std::size_t m) {
    BandFitOptions bo;
    bo.max_evals = opt.max_evals;
    bo.restarts = opt.restarts;
    bo.seed = opt.seed + m;
    bo.max_shift = opt.max_shift;
    bres[m] = fit_band(band_scatter(innov, m), model.geometry(m), opt.variant, bo);
  });
  const std::size_t band_obs = (field.R - 1) * (g.K - 2) * g.N;
  CompensatedSum step2;
  for (std::size_t m = 0; m < g.M; ++m) {
    model.bands.push_back(bres[m].params);
    step2.add(bres[m].loglik);
    BandReport br;
    br.band = m;
    br.loglik = bres[m].loglik;
    br.chain_loglik = bres[m].chain_loglik;
    br.n_params = bres[m].n_params;
    br.bic = band_bic(br.loglik, br.n_params, band_obs);
    br.converged = bres[m].converged;
    rep.converged = rep.converged && br.converged;
    rep.bands.push_back(br);
  }
  rep.step2_loglik = step2.value();
  rep.seconds_step2 = seconds_since(t0);

  // Step 3.
  t0 = std::chrono::steady_clock::now();
  std::vector<BandCovariance> covs(g.M);
  for (std::size_t m = 0; m < g.M; ++m) covs[m] = model.band_covariance(m);
  const MultibandData md = multiband_data(spectral_innovations(innov, covs, workers), workers);
  const LatFitResult lat = fit_latitudinal(md, g.latitudes, opt, P);
  model.lat = lat.params;
  rep.pairs = lat.pairs;
  rep.step3_loglik = lat.loglik;
  rep.lat_fallback = lat.fallback;
  rep.converged = rep.converged && lat.converged;
  rep.seconds_step3 = seconds_since(t0);

  // Optional adjacent-pair refit.
  t0 = std::chrono::steady_clock::now();
  rep.refit_loglik = rep.step3_loglik;
  if (opt.refit_pairs && g.M >= 2) {
    std::vector<std::size_t> pairs(g.M - 1);
    for (std::size_t m = 0; m + 1 < g.M; ++m) pairs[m] = m;
    model = refit_adjacent(model, innov, pairs, opt, &rep.refits);
    for (std::size_t m = 0; m < g.M; ++m) covs[m] = model.band_covariance(m);
    rep.refit_loglik =
        multiband_loglik_h(model.lat, multiband_data(spectral_innovations(innov, covs, workers), workers), P);
  }
  rep.seconds_refit = seconds_since(t0);

  rep.total_loglik = factorized_from_anoms(anoms, model, P, workers);
  rep.n_params = model_param_count(model);
  model.meta.loglik = rep.total_loglik;
  model.meta.n_params = rep.n_params;
  model.meta.n_obs = (field.R - 1) * g.K * g.M * g.N;
  model.meta.bic = band_bic(rep.total_loglik, rep.n_params, model.meta.n_obs);
  rep.bic = model.meta.bic;
  model.validate();
  return out;
}

}  // namespace sgen
