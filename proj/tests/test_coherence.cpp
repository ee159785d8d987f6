#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sgen/coherence.hpp"
#include "sgen/error.hpp"

using namespace sgen;
using std::numbers::pi;

namespace {

// Slot-space chain draws: z[m] is N x S, columns are independent replicates.
std::vector<Eigen::MatrixXd> simulate_chain(const LatCoherenceParams& p, std::size_t M, std::size_t N, std::size_t S,
                                            std::size_t P, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const auto Ni = static_cast<Eigen::Index>(N);
  std::vector<Eigen::MatrixXd> z(M, Eigen::MatrixXd(Ni, static_cast<Eigen::Index>(S)));
  for (Eigen::Index i = 0; i < z[0].size(); ++i) z[0](i) = nd(rng);
  for (std::size_t m = 1; m < M; ++m) {
    const auto prof = coherence_profile(p.xi_at(m), p.tau_at(m), N);
    const auto Phi = slot_coupling_matrix(prof, p.a, p.b, P);
    const auto v = slot_innovation_var(prof);
    z[m] = Phi * z[m - 1];
    for (Eigen::Index s = 0; s < Ni; ++s)
      for (Eigen::Index c = 0; c < z[m].cols(); ++c) z[m](s, c) += std::sqrt(v[s]) * nd(rng);
  }
  return z;
}

LatCoherenceParams global(std::size_t M, double xi, double tau, double a, double b) {
  auto p = LatCoherenceParams::independent(M);
  p.xi_global = xi;
  p.tau_global = tau;
  p.a = a;
  p.b = b;
  return p;
}

// Packs run-major draws (R * T columns) into centered spectral innovations.
SpectralInnovations as_innovations(const std::vector<Eigen::MatrixXd>& z, std::size_t R, std::size_t T) {
  SpectralInnovations si;
  si.M = z.size();
  si.N = static_cast<std::size_t>(z[0].rows());
  si.R = R;
  si.T = T;
  si.log_abs_det.assign(si.M, 0.0);
  for (const auto& zm : z) {
    Eigen::MatrixXd c = zm;
    for (std::size_t t = 0; t < T; ++t) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(zm.rows());
      for (std::size_t r = 0; r < R; ++r) mean += zm.col(static_cast<Eigen::Index>(r * T + t));
      mean /= double(R);
      for (std::size_t r = 0; r < R; ++r) c.col(static_cast<Eigen::Index>(r * T + t)) -= mean;
    }
    si.z.push_back(c);
  }
  return si;
}

double dense_chain_loglik(const SpectralInnovations& si, const Eigen::MatrixXd& C) {
  const std::size_t D = si.M * si.N;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  const double logdet = 2 * llt.matrixLLT().diagonal().array().log().sum();
  double quad = 0;
  for (std::size_t col = 0; col < si.R * si.T; ++col) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(D));
    for (std::size_t m = 0; m < si.M; ++m)
      v.segment(static_cast<Eigen::Index>(m * si.N), static_cast<Eigen::Index>(si.N)) =
          si.z[m].col(static_cast<Eigen::Index>(col));
    quad += v.dot(llt.solve(v));
  }
  const double R = double(si.R), T = double(si.T);
  return -0.5 * (T * D * (R - 1) * std::log(2 * pi) + T * D * std::log(R) + (R - 1) * T * logdet + quad);
}

}  // namespace

TEST_CASE("coherence profile") {
  CHECK(coherence_profile(0, 0.7, 0.3, 16) == doctest::Approx(0.7));
  for (int c = 0; c < 16; ++c) CHECK(coherence_profile(c, 0.0, 0.5, 16) == 0.0);
  CHECK(coherence_profile(8, 0.960, 0.628, 32) == doctest::Approx(0.48156).epsilon(1e-4));
}

TEST_CASE("banded VAR(1) matrix") {
  const auto prof = coherence_profile(0.8, 0.4, 12);
  const auto diag = build_var1(prof, 0, 0);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) CHECK(diag.matrix(i, j) == (i == j ? prof[i] : 0.0));

  const std::vector<double> zero(12, 0.0);
  const auto m = build_var1(zero, 0.136, 0.071);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) {
      const int d = std::abs(i - j);
      const double expect = d == 1 ? 0.136 / 4 : d == 2 ? 0.071 / 4 : 0.0;
      CHECK(m.matrix(i, j) == doctest::Approx(expect));
    }
  const auto full = build_var1(prof, 0.5, 0.3);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      if (std::abs(i - j) > 2) CHECK(full.matrix(i, j) == 0.0);
}

TEST_CASE("AR(1) chain coherence") {
  const std::vector<double> ones{1, 1, 1}, one{0.37}, two{0.9, 0.8};
  CHECK(ar1_coherence(ones) == 1.0);
  CHECK(ar1_coherence(one) == 0.37);
  CHECK(ar1_coherence(two) == doctest::Approx(0.72));
}

TEST_CASE("block partition") {
  CHECK_THROWS_AS(check_partition(8, 0), Error);
  CHECK_THROWS_AS(check_partition(8, 3), Error);
  CHECK_NOTHROW(check_partition(32, 2));
  CHECK(wavenumber_block(15, 32, 2) == 0);
  CHECK(wavenumber_block(16, 32, 2) == 1);
  CHECK(wavenumber_block(31, 30, 4) == 3);
  CHECK(default_block_count(288) == 9);
  CHECK(default_block_count(8) == 1);
}

TEST_CASE("multiband likelihood equals the dense chain likelihood") {
  const std::size_t M = 3, N = 8, R = 3, T = 4;
  for (auto p : {global(M, 0.8, 0.5, 0.0, 0.0), global(M, 0.9, 0.3, 0.2, -0.1)}) {
    for (std::size_t P : {1u, 2u}) {
      const auto z = simulate_chain(p, M, N, R * T, P, 5 + P);
      const auto si = as_innovations(z, R, T);
      const auto d = multiband_data(si);
      const double ref = dense_chain_loglik(si, chain_covariance(p, M, N, P));
      CHECK(multiband_loglik(p, d, P) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
  // With a = b = 0 the partition cuts nothing.
  const auto p0 = global(M, 0.85, 0.6, 0, 0);
  const auto d0 = multiband_data(as_innovations(simulate_chain(p0, M, N, R * T, 1, 9), R, T));
  CHECK(multiband_loglik(p0, d0, 2) == doctest::Approx(multiband_loglik(p0, d0, 1)).epsilon(1e-12));
}

TEST_CASE("chain moments agree with the dense chain covariance") {
  auto p = global(4, 0.9, 0.5, 0.1, 0.05);
  p.tropical[1] = 1;
  p.xi[1] = 0.5;
  p.tau[1] = 0.2;
  const auto C = chain_covariance(p, 4, 8);
  const auto cm = chain_moments(p, 4, 8);
  for (int m = 0; m < 4; ++m) {
    CHECK((cm.cov[m] - C.block(8 * m, 8 * m, 8, 8)).norm() < 1e-12);
    if (m) CHECK((cm.cross[m] - C.block(8 * m, 8 * (m - 1), 8, 8)).norm() < 1e-12);
  }
}

TEST_CASE("block approximation stays close for small couplings") {
  const std::size_t M = 4, N = 32, R = 5, T = 20;
  const auto p = global(M, 0.9, 0.6, 0.05, 0.03);
  const auto d = multiband_data(as_innovations(simulate_chain(p, M, N, R * T, 1, 4), R, T));
  const double n_obs = double((R - 1) * T * N * M);
  CHECK(std::abs(multiband_loglik(p, d, 2) - multiband_loglik(p, d, 1)) / n_obs < 1e-2);
}

TEST_CASE("pair fits recover coupling parameters") {
  const std::size_t N = 32, R = 2, T = 2500;
  const auto truth = global(2, 0.96, 0.628, 0.136, 0.071);
  const auto z = simulate_chain(truth, 2, N, R * T, 1, 77);
  const auto s = link_stats(z[0], z[1]);
  PairFitOptions opt;
  opt.seed = 3;
  const auto fit = fit_adjacent_pair(s, R, T, opt);
  CHECK(fit.xi == doctest::Approx(0.96).epsilon(0.05));
  CHECK(std::abs(fit.a - 0.136) < 0.05);
  CHECK(std::abs(fit.b - 0.071) < 0.05);
  CHECK(fit.bic_var1 < fit.bic_ar1);
  CHECK(fit.loglik_var1 >= fit.loglik_ar1);

  const auto null = global(2, 0.9, 0.5, 0, 0);
  const auto z0 = simulate_chain(null, 2, N, R * T, 1, 78);
  const auto f0 = fit_adjacent_pair(link_stats(z0[0], z0[1]), R, T, opt);
  CHECK(std::abs(f0.a) < 0.05);
  CHECK(std::abs(f0.b) < 0.05);
  CHECK(f0.bic_var1 - f0.bic_ar1 >= -2 * std::log(double(f0.n_obs)));
}
