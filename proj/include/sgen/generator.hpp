#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgen/model.hpp"

namespace sgen {

/// Precomputed operators for drawing surrogate runs from a model.
class Generator {
 public:
  explicit Generator(const SGModel& model);

  const SGModel& model() const { return model_; }

  /// One surrogate run W~ + eps in (k, m, n) order; `index` selects the
  /// random substreams, so the result does not depend on other draws.
  void surrogate(std::size_t index, std::uint64_t seed, std::span<double> out) const;

  /// Runs first .. first + count - 1 as one ensemble.
  EnsembleField generate(std::size_t count, std::uint64_t seed, unsigned workers = 1, std::size_t first = 0) const;

 private:
  const SGModel& model_;
  std::vector<Eigen::MatrixXd> synthesis_;  // B_m
  std::vector<Eigen::MatrixXd> coupling_;   // Phi_m (m >= 1)
  std::vector<Eigen::VectorXd> innov_sd_;   // sqrt(1 - phi^2) per slot (m >= 1)
  std::vector<double> mean_;                // K*M*N
};

struct GenerationRequest {
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string pattern = "surrogate_{i}.ensf";  // "{i}" -> index; no "{i}" -> one file
  unsigned workers = 1;
};

/// Writes the surrogates and returns the paths written.
std::vector<std::filesystem::path> generate_files(const SGModel& model, const GenerationRequest& req);

/// Covariance of the unit-scale innovations H within band m (N x N).
Eigen::MatrixXd model_band_covariance(const SGModel& model, const ChainMoments& cm, std::size_t m);

/// Cov(H_m, H_{m-1}) for m >= 1 (rows band m, columns band m-1).
Eigen::MatrixXd model_cross_covariance(const SGModel& model, const ChainMoments& cm, std::size_t m);

/// Marginal variance of a surrogate anomaly at (m, n): stationary AR(2)
/// variance times the spatial variance of H.
double model_marginal_variance(const SGModel& model, std::size_t m, std::size_t n);

}  // namespace sgen
