#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "sgen/model.hpp"

namespace sgen {

/// East-west and north-south contrast variances on the M x N grid. The
/// east-west neighbor of n = 0 is n = N - 1; north-south is NaN at m = 0.
struct ContrastStats {
  std::size_t M = 0, N = 0;
  std::vector<double> ew;
  std::vector<double> ns;
  bool fitted = false;
};

/// Mean over (r, t) of squared differences of H between neighbors. Centered
/// innovations are rescaled by R / (R - 1) so the value estimates the
/// contrast variance of a single run.
ContrastStats contrast_variances(const InnovationField& h);

/// Model-implied contrast variances of H.
ContrastStats fitted_contrasts(const SGModel& model);

/// (emp - A)^2 - (emp - B)^2 pointwise; positive where B is closer.
std::vector<double> contrast_improvement(std::span<const double> empirical, std::span<const double> fitted_a,
                                         std::span<const double> fitted_b);

/// Type-7 sample quantile (linear interpolation between order statistics),
/// p in [0, 1]. NaN entries are ignored.
double quantile7(std::vector<double> values, double p);

struct Quartiles {
  double q25 = 0, q50 = 0, q75 = 0;
};
Quartiles quartiles(std::span<const double> values);

/// Per-location OLS slope of value against year over [year_from, year_to].
std::vector<double> linear_trend(const EnsembleField& field, std::size_t run, int year_from, int year_to);

struct WindPowerConstants {
  double air_density = 1.225;  // kg m^-3
  double shear_exponent = 1.0 / 7.0;
  double hub_height = 80.0;
  double reference_height = 10.0;
};

/// Power density at hub height from 10 m speed, W m^-2.
double wind_power_density(double speed10m, const WindPowerConstants& c = {});

/// 2.5th, 50th and 97.5th percentiles across runs at time index k, per location.
std::array<std::vector<double>, 3> ensemble_percentiles(const EnsembleField& field, std::size_t k);

struct StorageReport {
  std::uintmax_t model_bytes = 0;
  std::uintmax_t ensemble_bytes = 0;
  double ratio = 0.0;  // ensemble_bytes / model_bytes
};

StorageReport storage_report(const std::filesystem::path& model_file,
                             const std::vector<std::filesystem::path>& ensemble_files);

}  // namespace sgen
