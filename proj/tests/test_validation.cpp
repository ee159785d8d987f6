#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sgen/error.hpp"
#include "sgen/synth.hpp"
#include "sgen/validation.hpp"

using namespace sgen;

namespace {
InnovationField innovations(std::size_t M, std::size_t N, std::size_t R, std::size_t T) {
  InnovationField h;
  h.spec = make_grid(M, N, T + 2, 0.0, 5.0);
  h.R = R;
  h.T = T;
  h.centered = false;
  h.values.assign(R * T * M * N, 0.0);
  return h;
}
}  // namespace

TEST_CASE("empirical contrast variances") {
  auto h = innovations(2, 4, 2, 2);
  for (auto& v : h.values) v = 3.0;
  const auto c = contrast_variances(h);
  for (double v : c.ew) CHECK(v == 0.0);
  CHECK(std::isnan(c.ns[0]));
  CHECK(c.ns[4] == 0.0);

  auto p = innovations(2, 4, 2, 2);
  p.at(1, 0, 1, 2) = 1.0;
  const auto cp = contrast_variances(p);
  // Neighbor pairs (1, 2) and (2, 3) in band 1 each see one unit jump over K R = 4 terms.
  CHECK(cp.ew[1 * 4 + 2] == doctest::Approx(0.25));
  CHECK(cp.ew[1 * 4 + 3] == doctest::Approx(0.25));
  CHECK(cp.ew[1 * 4 + 1] == 0.0);

  auto w = innovations(3, 8, 10, 500);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (auto& v : w.values) v = nd(rng);
  const auto cw = contrast_variances(w);
  for (double v : cw.ew) CHECK(v == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("fitted contrast variances") {
  SGModel model = preset_model("ax-small");
  for (auto& b : model.bands) b.beta[kOcean] = {1.0, 1e6, 0.0};
  model.lat = LatCoherenceParams::independent(model.grid.M);
  const auto fc = fitted_contrasts(model);
  const auto& b = model.bands[0].beta[kOcean];
  const double var = double(model.grid.N) * component_spectrum_sq(0, b.phi, b.alpha, b.nu, model.grid.N);
  for (double v : fc.ew) CHECK(v == doctest::Approx(2 * var).epsilon(1e-6));

  SGModel same = preset_model("ax-small");
  for (auto& bb : same.bands) bb = same.bands[0];
  same.lat.xi_global = 1.0;
  same.lat.tau_global = 0.0;
  same.lat.tropical.assign(same.grid.M, 0);
  same.lat.a = same.lat.b = 0;
  const auto fs = fitted_contrasts(same);
  for (std::size_t i = same.grid.N; i < fs.ns.size(); ++i) CHECK(std::abs(fs.ns[i]) < 1e-10);
}

TEST_CASE("contrast improvement") {
  const std::vector<double> emp{1, 2, 3, 4}, a{1.5, 2, 2, 5}, b{1, 2.5, 3, 4};
  const auto z = contrast_improvement(emp, a, a);
  for (double v : z) CHECK(v == 0.0);
  const auto d = contrast_improvement(emp, a, emp);
  for (std::size_t i = 0; i < 4; ++i) CHECK(d[i] == (emp[i] - a[i]) * (emp[i] - a[i]));
  const auto h = contrast_improvement(emp, a, b);
  CHECK(h[0] == doctest::Approx(0.25));
  CHECK(h[1] == doctest::Approx(-0.25));
  CHECK(h[2] == doctest::Approx(1.0));
  CHECK(h[3] == doctest::Approx(1.0));
}

TEST_CASE("quantiles") {
  CHECK(quantile7({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile7({4, 1, 3, 2}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile7({7}, 0.9) == 7);
  const std::vector<double> v{10, 20, 30, 40, 50};
  const auto q = quartiles(v);
  CHECK(q.q25 == 20);
  CHECK(q.q50 == 30);
  CHECK(q.q75 == 40);
}

TEST_CASE("linear trends") {
  EnsembleField f(make_grid(2, 4, 10, 0.0, 5.0, 2000), 2);
  for (std::size_t k = 0; k < 10; ++k)
    for (std::size_t i = 0; i < 8; ++i) {
      f.at(0, k, i / 4, i % 4) = 7.0;
      f.at(1, k, i / 4, i % 4) = 2.0 * double(2000 + k);
    }
  for (double s : linear_trend(f, 0, 2000, 2009)) CHECK(s == 0.0);
  for (double s : linear_trend(f, 1, 2002, 2007)) CHECK(s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(linear_trend(f, 0, 1999, 2005), Error);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  std::vector<double> y(10);
  for (std::size_t k = 0; k < 10; ++k) {
    y[k] = 0.3 * double(k) + nd(rng);
    f.at(0, k, 1, 2) = y[k];
  }
  // Normal equations on centered years.
  double xm = 4.5, ym = 0, sxy = 0, sxx = 0;
  for (double v : y) ym += v / 10;
  for (std::size_t k = 0; k < 10; ++k) {
    sxy += (double(k) - xm) * (y[k] - ym);
    sxx += (double(k) - xm) * (double(k) - xm);
  }
  CHECK(linear_trend(f, 0, 2000, 2009)[6] == doctest::Approx(sxy / sxx).epsilon(1e-10));
}

TEST_CASE("wind power density") {
  CHECK(wind_power_density(0) == 0.0);
  CHECK(wind_power_density(5) == doctest::Approx(186.7).epsilon(1e-3));
  CHECK_THROWS_AS(wind_power_density(-1), Error);
}

TEST_CASE("ensemble percentiles") {
  EnsembleField f(make_grid(1, 4, 3, 0.0, 5.0), 4);
  for (auto& v : f.values) v = 1.25;
  const auto p = ensemble_percentiles(f, 1);
  for (const auto& arr : p)
    for (double v : arr) CHECK(v == 1.25);
}
