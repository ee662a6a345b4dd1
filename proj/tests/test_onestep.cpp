#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "lggm/onestep.hpp"
#include "lggm/simulate.hpp"
#include "oracles.hpp"

using Catch::Approx;
using Eigen::MatrixXd;
using namespace lggm;

TEST_CASE("sigma0_moment: K=2 rank-one dataset") {
  MatrixXd values(1, 4);
  values << 1, 0, 1, 0;
  const auto cov = block_covariance(PanelDataset::from_centered(values, 2, 2));
  MatrixXd expect(2, 2);
  expect << 1, 0, 0, 0;
  CHECK((sigma0_moment(cov) - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sigma0_moment: equals the naive six-block sum at K=3") {
  Rng rng(41);
  const int n = 17, K = 3, p = 4;
  const auto data = center_and_wrap(oracle::random_matrix(n, K * p, rng), K, p);
  const auto cov = block_covariance(data);
  MatrixXd naive = MatrixXd::Zero(p, p);
  for (int l = 0; l < K; ++l)
    for (int m = 0; m < K; ++m)
      if (l != m) naive += cov.block(m, l);
  naive /= 6.0;
  CHECK((sigma0_moment(cov) - naive).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(lggm::detail::is_symmetric(sigma0_moment(cov), 1e-12));
}

TEST_CASE("sigma0_moment: shrinks for independent categories") {
  // Z variance zero: cross blocks are pure noise, sup-norm ~ sqrt(log p / n)
  Rng rng(42);
  const int n = 4000, K = 2, p = 10;
  const auto data = center_and_wrap(oracle::random_matrix(n, K * p, rng), K, p);
  const auto s0 = sigma0_moment(block_covariance(data));
  CHECK(lggm::detail::max_abs(s0) <=
        4.0 * std::sqrt(std::log(static_cast<double>(p)) / n));
}

TEST_CASE("sigmak_moment identities") {
  Rng rng(43);
  const int n = 9, K = 2, p = 3;
  const auto data = center_and_wrap(oracle::random_matrix(n, K * p, rng), K, p);
  const auto cov = block_covariance(data);
  const MatrixXd s0 = sigma0_moment(cov);

  // sigma0 + sigma_k reproduces the diagonal block exactly
  for (int k = 1; k <= K; ++k) {
    const MatrixXd sk = sigmak_moment(cov, s0, k);
    CHECK((s0 + sk - cov.block(k - 1, k - 1)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  // zero sigma0 returns the diagonal block unchanged
  CHECK((sigmak_moment(cov, MatrixXd::Zero(p, p), 1) - cov.block(0, 0))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK_THROWS_AS(sigmak_moment(cov, s0, 0), ValidationError);
  CHECK_THROWS_AS(sigmak_moment(cov, s0, K + 1), ValidationError);
}

TEST_CASE("sigmak_moment: Y = Z exactly gives the zero matrix") {
  MatrixXd values(1, 4);
  values << 1, 0, 1, 0;
  const auto cov = block_covariance(PanelDataset::from_centered(values, 2, 2));
  const MatrixXd sk = sigmak_moment(cov, sigma0_moment(cov), 1);
  CHECK(sk.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sigmak_moment: consistent at large n on simulated data") {
  ScenarioSpec spec;
  spec.architecture = Architecture::III;
  spec.p = 10;
  spec.n = 5000;
  spec.k_categories = 3;
  spec.rho = 0.0;
  spec.seed = 4401;
  auto [data, truth] = sample_panel(spec);
  const auto cov = block_covariance(data);
  const MatrixXd s0 = sigma0_moment(cov);
  const MatrixXd true_sigma1 = truth.omega(1).inverse();
  CHECK((sigmak_moment(cov, s0, 1) - true_sigma1).cwiseAbs().maxCoeff() <= 0.15);
}

TEST_CASE("psd_project: PSD input unchanged up to the diagonal floor") {
  const MatrixXd eye = MatrixXd::Identity(4, 4);
  CHECK((psd_project(eye) - eye).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("psd_project: clips and floors diag(1, -2)") {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -2.0;
  const MatrixXd out = psd_project(m);
  CHECK(out(0, 0) == Approx(1.0).epsilon(1e-12));
  CHECK(out(1, 1) == Approx(1e-8).epsilon(1e-6));
  CHECK(out(0, 1) == 0.0);
}

TEST_CASE("psd_project: 2x2 eigen-clip oracle") {
  MatrixXd m(2, 2);
  m << 0, 1, 1, 0;  // eigenvalues +-1
  const MatrixXd out = psd_project(m);
  MatrixXd expect(2, 2);
  expect << 0.5, 0.5, 0.5, 0.5;
  CHECK((out - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("psd_project: idempotent on random symmetric inputs") {
  Rng rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    const int p = 2 + static_cast<int>(rng.below(6));
    const MatrixXd raw = oracle::random_matrix(p, p, rng);
    const MatrixXd m = 0.5 * (raw + raw.transpose());
    const MatrixXd once = psd_project(m);
    const MatrixXd twice = psd_project(once);
    CHECK((once - twice).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(once);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
  CHECK_THROWS_AS(psd_project(oracle::random_matrix(3, 3, rng)), ValidationError);
}

TEST_CASE("onestep_fit: large lambda produces diagonal layers") {
  ScenarioSpec spec;
  spec.architecture = Architecture::III;
  spec.p = 8;
  spec.n = 60;
  spec.k_categories = 2;
  spec.seed = 4501;
  auto [data, truth] = sample_panel(spec);
  GlassoSettings settings;
  const FitReport fit = onestep_fit(data, {50.0, 50.0}, settings);
  REQUIRE(fit.converged);
  CHECK(fit.iterations == 1);
  CHECK(fit.objective_trace.size() == 1);
  CHECK(fit.edge_count == 0);
  for (int k = 0; k <= 2; ++k)
    CHECK(lggm::detail::nonzero_pairs(fit.estimate.omega(k)) == 0);
}

TEST_CASE("onestep_fit: duplicated-block data hits the diagonal floor") {
  Rng rng(45);
  const int n = 30, p = 3;
  const MatrixXd y1 = oracle::random_matrix(n, p, rng);
  MatrixXd values(n, 2 * p);
  values << y1, y1;  // Y1 = Y2 exactly
  const auto data = center_and_wrap(values, 2, p);
  GlassoSettings settings;
  const FitReport fit = onestep_fit(data, {0.1, 0.1}, settings);
  // category layers see sigma_k ~ 0, floored at 1e-8, so omega ~ 1e8 I
  for (int k = 1; k <= 2; ++k)
    CHECK(fit.estimate.omega(k).diagonal().minCoeff() >= 1e7);
}

TEST_CASE("onestep_fit: KKT holds layer-by-layer against projected inputs") {
  ScenarioSpec spec;
  spec.architecture = Architecture::I;
  spec.p = 15;
  spec.n = 80;
  spec.k_categories = 3;
  spec.m = 2;
  spec.seed = 4601;
  auto [data, truth] = sample_panel(spec);
  GlassoSettings settings;
  const PenaltyPair penalties{0.2, 0.15};
  const FitReport fit = onestep_fit(data, penalties, settings);
  REQUIRE(fit.converged);

  const auto sigmas = projected_moment_covariances(block_covariance(data));
  for (int k = 0; k <= 3; ++k) {
    const double lambda = k == 0 ? penalties.lambda2 : penalties.lambda1;
    const MatrixXd w = fit.estimate.omega(k).inverse();
    CHECK(lggm::detail::glasso_kkt_residual(sigmas[static_cast<std::size_t>(k)], w,
                                            fit.estimate.omega(k), lambda) <= 1e-5);
  }
}
