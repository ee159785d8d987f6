#include "sgen/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sgen {

namespace {

double safe_eval(const Objective& f, const std::vector<double>& x, std::size_t& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : INFINITY;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt) {
  const std::size_t d = x0.size();
  OptimResult res;
  if (d == 0) {
    res.x = x0;
    res.value = safe_eval(f, x0, res.evals);
    res.converged = true;
    return res;
  }
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= d; ++i) vals[i] = safe_eval(f, pts[i], res.evals);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), trial(d), trial2(d);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(d + 1);
    std::vector<double> v2(d + 1);
    for (std::size_t i = 0; i <= d; ++i) {
      p2[i] = std::move(pts[order[i]]);
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };
  auto diameter = [&] {
    double dm = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t j = 0; j < d; ++j) dm = std::max(dm, std::abs(pts[i][j] - pts[0][j]));
    return dm;
  };
  auto along = [&](double t, std::vector<double>& out) {
    for (std::size_t j = 0; j < d; ++j) out[j] = centroid[j] + t * (pts[d][j] - centroid[j]);
  };

  sort_simplex();
  while (res.evals < opt.max_evals) {
    if (diameter() < opt.tolerance) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j];
    for (double& c : centroid) c /= static_cast<double>(d);

    along(-kReflect, trial);
    const double fr = safe_eval(f, trial, res.evals);
    if (fr < vals[0]) {
      along(-kExpand, trial2);
      const double fe = safe_eval(f, trial2, res.evals);
      if (fe < fr) {
        pts[d] = trial2;
        vals[d] = fe;
      } else {
        pts[d] = trial;
        vals[d] = fr;
      }
    } else if (fr < vals[d - 1]) {
      pts[d] = trial;
      vals[d] = fr;
    } else {
      const bool outside = fr < vals[d];
      along(outside ? -kContract : kContract, trial2);
      const double fc = safe_eval(f, trial2, res.evals);
      if (fc < (outside ? fr : vals[d])) {
        pts[d] = trial2;
        vals[d] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t j = 0; j < d; ++j) pts[i][j] = pts[0][j] + kShrink * (pts[i][j] - pts[0][j]);
          vals[i] = safe_eval(f, pts[i], res.evals);
        }
      }
    }
    sort_simplex();
  }
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

OptimResult minimize(const Objective& f, const std::vector<double>& x0, const NelderMeadOptions& opt) {
  OptimResult best = nelder_mead(f, x0, opt);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, opt.restart_scale);
  for (int k = 0; k < opt.restarts; ++k) {
    std::vector<double> start = best.x;
    for (double& v : start) v += noise(rng);
    OptimResult run = nelder_mead(f, start, opt);
    best.evals += run.evals;
    if (run.value < best.value) {
      best.x = std::move(run.x);
      best.value = run.value;
      best.converged = run.converged;
    }
  }
  // A final polish from the incumbent keeps the convergence flag honest.
  if (opt.restarts > 0) {
    OptimResult polish = nelder_mead(f, best.x, opt);
    best.evals += polish.evals;
    if (polish.value <= best.value) {
      best.x = std::move(polish.x);
      best.value = polish.value;
    }
    best.converged = polish.converged;
  }
  return best;
}

double to_log(double x) { return std::log(x); }
double from_log(double u) { return std::exp(u); }

double to_logit(double x, double lo, double hi) {
  const double p = (x - lo) / (hi - lo);
  return std::log(p / (1.0 - p));
}

double from_logit(double u, double lo, double hi) { return lo + (hi - lo) / (1.0 + std::exp(-u)); }

}  // namespace sgen
