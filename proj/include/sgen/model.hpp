#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sgen/coherence.hpp"
#include "sgen/grid.hpp"
#include "sgen/spectrum.hpp"
#include "sgen/temporal.hpp"

namespace sgen {

inline constexpr int kModelVersion = 1;
inline constexpr std::string_view kSoftwareVersion = "sgen 1.0.0";

/// Orthonormal eigenvectors of D'D (D = second differences) whose smoother
/// gain lambda / (lambda + (1 - lambda) mu) is at least `min_gain`, ordered
/// by increasing mu. The constant and linear vectors are always kept.
Eigen::MatrixXd smoother_basis(std::size_t K, double lambda, double min_gain);

/// Smoothed ensemble mean stored as float32 coefficients on smoother_basis.
/// at() returns the reconstruction, which is the mean the model generates.
struct CompressedMean {
  std::size_t K = 0, M = 0, N = 0;
  double lambda = 0.01;
  double min_gain = 0.02;
  Eigen::MatrixXd basis;    // K x q
  std::vector<float> coef;  // (m * N + n) * q + j

  std::size_t rank() const { return static_cast<std::size_t>(basis.cols()); }
  double at(std::size_t k, std::size_t m, std::size_t n) const;
  std::vector<double> expand() const;  // K*M*N in (k, m, n) order
  bool operator==(const CompressedMean& o) const;
};

CompressedMean compress_mean(const MeanModel& mean, double min_gain = 0.02);

struct FitMetadata {
  double loglik = 0.0;  // full-data restricted log-likelihood
  double bic = 0.0;
  std::size_t n_params = 0;
  std::size_t n_obs = 0;
  std::size_t blocks = 1;
  bool var1 = true;
  std::string software{kSoftwareVersion};
  bool operator==(const FitMetadata&) const = default;
};

enum SurfaceCode : std::uint8_t { kSurfaceOcean = 0, kSurfaceLand = 1, kSurfaceMountain = 2 };

struct SGModel {
  GridSpec grid;
  Variant variant = Variant::AX;
  CompressedMean mean;
  TemporalParams temporal;
  std::vector<BandSpectrumParams> bands;
  LatCoherenceParams lat;
  std::vector<std::uint8_t> surface;  // M*N surface codes, empty under AX
  std::vector<float> altitude;        // M*N meters, empty under AX
  FitMetadata meta;

  BandGeometry geometry(std::size_t m) const;
  BandCovariance band_covariance(std::size_t m) const;
  void validate() const;
  bool operator==(const SGModel&) const = default;
};

/// Surface codes and float32 altitudes of a descriptor set.
void encode_geometry(const GeoDescriptors& geo, std::vector<std::uint8_t>& surface, std::vector<float>& altitude);

/// Model file (*.sgm): one JSON header line, a little-endian binary block
/// (mean basis as float64, mean coefficients as float32, then float32
/// altitudes and surface bytes when present) and a trailing CRC-32.
std::string serialize_model(const SGModel& model);
SGModel parse_model(std::string_view bytes);
void save_model(const SGModel& model, const std::filesystem::path& path);
SGModel load_model(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace sgen
