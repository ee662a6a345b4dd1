#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "lggm/hypotest.hpp"
#include "lggm/simulate.hpp"
#include "oracles.hpp"

using Catch::Approx;
using Eigen::MatrixXd;
using namespace lggm;

namespace {

PanelDataset independent_panel(int n, int K, int p, std::uint64_t seed) {
  Rng rng(seed);
  return center_and_wrap(oracle::random_matrix(n, K * p, rng), K, p);
}

}  // namespace

TEST_CASE("cross-block statistic is zero iff the cross blocks vanish") {
  BlockCovariance cov;
  cov.p = 2;
  cov.k_categories = 2;
  cov.blocks.assign(4, MatrixXd::Identity(2, 2));
  cov.block(0, 1).setZero();
  cov.block(1, 0).setZero();
  CHECK(lggm::detail::cross_block_statistic(cov, MatrixNorm::frobenius) == 0.0);
  cov.block(0, 1)(0, 0) = 0.3;
  CHECK(lggm::detail::cross_block_statistic(cov, MatrixNorm::frobenius) > 0.0);
}

TEST_CASE("equal-block statistic is zero iff cross blocks equal their mean") {
  BlockCovariance cov;
  cov.p = 2;
  cov.k_categories = 3;
  cov.blocks.assign(9, MatrixXd::Identity(2, 2));
  const std::vector<std::pair<int, int>> pairs{{0, 1}, {0, 2}, {1, 2}};
  MatrixXd b(2, 2);
  b << 0.4, 0.1, 0.1, 0.5;
  for (auto [l, m] : pairs) {
    cov.block(l, m) = b;
    cov.block(m, l) = b.transpose();
  }
  CHECK(lggm::detail::equal_block_statistic(cov, MatrixNorm::frobenius) ==
        Approx(0.0).margin(1e-15));
  cov.block(0, 1)(0, 1) += 0.2;
  cov.block(1, 0)(1, 0) += 0.2;
  CHECK(lggm::detail::equal_block_statistic(cov, MatrixNorm::frobenius) > 0.0);
}

TEST_CASE("sigma0 test: deterministic given the seed, p-values in (0, 1]") {
  const PanelDataset data = independent_panel(50, 2, 4, 101);
  const auto a = test_sigma0_zero(data, 99, 7);
  const auto b = test_sigma0_zero(data, 99, 7);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == b.statistic);
  REQUIRE(a.null_draws.size() == 99);
  for (std::size_t i = 0; i < a.null_draws.size(); ++i)
    CHECK(a.null_draws[i] == b.null_draws[i]);
  CHECK(a.p_value >= 1.0 / 100.0);
  CHECK(a.p_value <= 1.0);
}

TEST_CASE("sigma0 test: rejects under a strong shared layer") {
  std::vector<MatrixXd> layers(3, 10.0 * MatrixXd::Identity(20, 20));
  layers[0] = MatrixXd::Identity(20, 20);  // Sigma_0 = I, Sigma_k = 0.1 I
  const PrecisionStack truth = PrecisionStack::from_layers(layers);
  for (std::uint64_t seed : {501, 502, 503}) {
    const PanelDataset data = sample_panel_from_truth(truth, 300, seed);
    const auto result = test_sigma0_zero(data, 199, seed);
    CHECK(result.p_value < 0.01);
  }
}

TEST_CASE("sigma0 test: does not reject independent categories (smoke)") {
  int rejections = 0;
  for (std::uint64_t seed = 601; seed <= 605; ++seed) {
    const PanelDataset data = independent_panel(100, 3, 8, seed);
    const auto result = test_sigma0_zero(data, 199, seed);
    rejections += result.p_value < 0.05;
  }
  CHECK(rejections <= 1);
}

TEST_CASE("sigma0 test: input validation") {
  const PanelDataset data = independent_panel(50, 2, 3, 102);
  CHECK_THROWS_AS(test_sigma0_zero(data, 50, 0), ValidationError);
  const PanelDataset tiny = PanelDataset::from_centered(MatrixXd::Zero(2, 4), 2, 2);
  CHECK_THROWS_AS(test_sigma0_zero(tiny, 99, 0), ValidationError);
}

TEST_CASE("equal-blocks test: deterministic and flagged at K = 2") {
  const PanelDataset data = independent_panel(60, 2, 4, 103);
  const auto a = test_equal_cross_blocks(data, 99, 11);
  const auto b = test_equal_cross_blocks(data, 99, 11);
  CHECK(a.p_value == b.p_value);
  REQUIRE_FALSE(a.warnings.empty());  // K = 2 note
  CHECK(a.p_value > 0.0);
}

TEST_CASE("equal-blocks test: model data is not rejected, unequal coupling is") {
  // equal cross blocks by construction
  ScenarioSpec spec;
  spec.architecture = Architecture::III;
  spec.p = 12;
  spec.n = 200;
  spec.k_categories = 3;
  spec.seed = 104;
  auto [model_data, truth] = sample_panel(spec);
  const auto calm = test_equal_cross_blocks(model_data, 199, 21);
  CHECK(calm.p_value > 0.01);

  // one category coupled twice as strongly: alpha = (1, 1, 2)
  std::vector<MatrixXd> layers(4);
  layers[0] = chain_precision(20, 105);
  for (int k = 1; k <= 3; ++k) layers[k] = chain_precision(20, 105 + static_cast<std::uint64_t>(k));
  Eigen::VectorXd alphas(3);
  alphas << 1.0, 1.0, 2.0;
  const PrecisionStack alt = PrecisionStack::from_layers(layers, alphas);
  int rejections = 0;
  for (std::uint64_t seed : {301, 302, 303}) {
    const PanelDataset data = sample_panel_from_truth(alt, 300, seed);
    rejections += test_equal_cross_blocks(data, 199, seed).p_value < 0.05;
  }
  CHECK(rejections == 3);
}

TEST_CASE("norm options parse and alter the statistic") {
  const PanelDataset data = independent_panel(40, 2, 3, 106);
  const auto frob = test_sigma0_zero(data, 99, 1, MatrixNorm::frobenius);
  const auto linf = test_sigma0_zero(data, 99, 1, MatrixNorm::linf);
  const auto l1 = test_sigma0_zero(data, 99, 1, MatrixNorm::l1);
  CHECK(frob.statistic != linf.statistic);
  CHECK(l1.statistic > frob.statistic);
  CHECK(norm_from_string("linf") == MatrixNorm::linf);
  CHECK_THROWS_AS(norm_from_string("spectral"), ValidationError);
}
