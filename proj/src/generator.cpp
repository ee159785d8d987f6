#include "sgen/generator.hpp"

#include "sgen/container.hpp"
#include "sgen/error.hpp"
#include "sgen/parallel.hpp"
#include "sgen/rng.hpp"

namespace sgen {

Generator::Generator(const SGModel& model) : model_(model) {
  model.validate();
  const std::size_t M = model.grid.M, N = model.grid.N;
  synthesis_.resize(M);
  coupling_.resize(M);
  innov_sd_.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    synthesis_[m] = model.band_covariance(m).synthesis;
    if (m == 0) continue;
    const auto prof = coherence_profile(model.lat.xi_at(m), model.lat.tau_at(m), N);
    coupling_[m] = slot_coupling_matrix(prof, model.lat.a, model.lat.b, 1);
    const auto v = slot_innovation_var(prof);
    innov_sd_[m].resize(static_cast<Eigen::Index>(N));
    for (std::size_t s = 0; s < N; ++s) innov_sd_[m](static_cast<Eigen::Index>(s)) = std::sqrt(v[s]);
  }
  mean_ = model.mean.expand();
}

void Generator::surrogate(std::size_t index, std::uint64_t seed, std::span<double> out) const {
  const std::size_t M = model_.grid.M, N = model_.grid.N, K = model_.grid.K, L = M * N;
  if (out.size() != K * L) throw Error(ErrorCode::DimensionMismatch, "surrogate buffer has the wrong size");
  const auto Ni = static_cast<Eigen::Index>(N);
  Eigen::VectorXd z(Ni), zprev(Ni), e(Ni);
  // Unit-scale innovations H for every (k, m, n), then colorized in place.
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t m = 0; m < M; ++m) {
      NormalStream rs = rng_stream(seed, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(m),
                                   static_cast<std::uint32_t>(k));
      for (Eigen::Index s = 0; s < Ni; ++s) e(s) = rs.normal();
      if (m == 0) {
        z = e;
      } else {
        z.noalias() = coupling_[m] * zprev;
        z += innov_sd_[m].cwiseProduct(e);
      }
      Eigen::Map<Eigen::VectorXd> h(out.data() + k * L + m * N, Ni);
      h.noalias() = synthesis_[m] * z;
      zprev.swap(z);
    }
  }
  std::vector<double> series(K);
  const auto& tp = model_.temporal;
  for (std::size_t loc = 0; loc < L; ++loc) {
    for (std::size_t k = 0; k < K; ++k) series[k] = out[k * L + loc];
    colorize_into(series, tp.phi1[loc], tp.phi2[loc], tp.sd[loc], series);
    for (std::size_t k = 0; k < K; ++k) out[k * L + loc] = series[k] + mean_[k * L + loc];
  }
}

EnsembleField Generator::generate(std::size_t count, std::uint64_t seed, unsigned workers, std::size_t first) const {
  if (count == 0) throw Error(ErrorCode::ConfigError, "surrogate count must be at least 1");
  EnsembleField f(model_.grid, count);
  const std::size_t len = model_.grid.K * model_.grid.M * model_.grid.N;
  parallel_for(count, workers,
               [&](std::size_t i) { surrogate(first + i, seed, std::span<double>(f.values.data() + i * len, len)); });
  return f;
}

std::vector<std::filesystem::path> generate_files(const SGModel& model, const GenerationRequest& req) {
  if (req.count == 0) throw Error(ErrorCode::ConfigError, "surrogate count must be at least 1");
  const Generator gen(model);
  std::vector<std::filesystem::path> paths;
  const auto pos = req.pattern.find("{i}");
  if (pos == std::string::npos) {
    write_ensemble(gen.generate(req.count, req.seed, req.workers), req.pattern);
    paths.emplace_back(req.pattern);
    return paths;
  }
  for (std::size_t i = 0; i < req.count; ++i) {
    std::string name = req.pattern;
    name.replace(pos, 3, std::to_string(i));
    write_ensemble(gen.generate(1, req.seed, req.workers, i), name);
    paths.emplace_back(name);
  }
  return paths;
}

Eigen::MatrixXd model_band_covariance(const SGModel& model, const ChainMoments& cm, std::size_t m) {
  const Eigen::MatrixXd B = model.band_covariance(m).synthesis;
  return B * cm.cov.at(m) * B.transpose();
}

Eigen::MatrixXd model_cross_covariance(const SGModel& model, const ChainMoments& cm, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::RangeError, "band 0 has no southern neighbor");
  return model.band_covariance(m).synthesis * cm.cross.at(m) * model.band_covariance(m - 1).synthesis.transpose();
}

double model_marginal_variance(const SGModel& model, std::size_t m, std::size_t n) {
  const ChainMoments cm = chain_moments(model.lat, m + 1, model.grid.N, 1);
  const Eigen::MatrixXd B = model.band_covariance(m).synthesis;
  const auto ni = static_cast<Eigen::Index>(n);
  const double spatial = B.row(ni) * cm.cov[m] * B.row(ni).transpose();
  const std::size_t loc = model.grid.loc(m, n);
  return ar2_stationary_variance(model.temporal.phi1[loc], model.temporal.phi2[loc], model.temporal.sd[loc]) * spatial;
}

}  // namespace sgen
