#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace sgen {

struct NelderMeadOptions {
  double initial_step = 0.5;     // simplex edge in transformed coordinates
  double tolerance = 1e-6;       // stop when every vertex is this close to the best
  std::size_t max_evals = 2000;  // per simplex run
  int restarts = 3;              // extra runs from a perturbed best point
  double restart_scale = 0.5;
  std::uint64_t seed = 0;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Reflection/expansion/contraction/shrink simplex search minimizing `f`.
/// Non-finite objective values are treated as +inf. The returned point is
/// never worse than x0.
OptimResult nelder_mead(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt);

/// nelder_mead from x0 followed by `opt.restarts` runs started at the best
/// point plus Gaussian noise of scale `restart_scale`. Deterministic in seed.
OptimResult minimize(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt);

// Coordinate transforms between constrained parameters and the real line.
double to_log(double x);
double from_log(double u);
double to_logit(double x, double lo, double hi);
double from_logit(double u, double lo, double hi);

}  // namespace sgen
