#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lggm/errors.hpp"
#include "lggm/panel.hpp"
#include "lggm/rng.hpp"

namespace lggm {

enum class MatrixNorm { frobenius, linf, l1 };

inline MatrixNorm norm_from_string(const std::string& s) {
  if (s == "frobenius") return MatrixNorm::frobenius;
  if (s == "linf") return MatrixNorm::linf;
  if (s == "l1") return MatrixNorm::l1;
  throw ValidationError("unknown norm '" + s + "' (expected frobenius, linf or l1)");
}

namespace detail {

inline double matrix_norm(const Eigen::MatrixXd& m, MatrixNorm norm) {
  switch (norm) {
    case MatrixNorm::frobenius: return m.norm();
    case MatrixNorm::linf: return max_abs(m);
    case MatrixNorm::l1: return m.cwiseAbs().sum();
  }
  return 0.0;
}

/// F_0 = sum_{l != k} |sym(S_lk)|, the distance of the cross blocks from
/// zero. The symmetrized form (S_lk + S_lk')/2 is the permutation formula at
/// the identity permutation; using it for the observed statistic as well
/// keeps the test exactly calibrated under the null.
inline double cross_block_statistic(const BlockCovariance& cov, MatrixNorm norm) {
  double stat = 0.0;
  for (int l = 0; l < cov.k_categories; ++l)
    for (int k = 0; k < cov.k_categories; ++k)
      if (l != k) stat += matrix_norm(symmetrized(cov.block(l, k)), norm);
  return stat;
}

/// Average of all ordered cross blocks; exactly symmetric by pairing.
inline Eigen::MatrixXd mean_cross_block(const BlockCovariance& cov) {
  const int K = cov.k_categories;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cov.p, cov.p);
  for (int l = 0; l < K; ++l)
    for (int k = 0; k < K; ++k)
      if (l != k) acc += cov.block(l, k);
  return acc / (static_cast<double>(K) * (K - 1));
}

/// F_mean = sum_{l != k} |S_lk - mean cross block|.
inline double equal_block_statistic(const BlockCovariance& cov, MatrixNorm norm) {
  const Eigen::MatrixXd mean = mean_cross_block(cov);
  double stat = 0.0;
  for (int l = 0; l < cov.k_categories; ++l)
    for (int k = 0; k < cov.k_categories; ++k)
      if (l != k) stat += matrix_norm(cov.block(l, k) - mean, norm);
  return stat;
}

}  // namespace detail

struct HypoTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::vector<double> null_draws;  // ordered by resample index
  std::vector<std::string> warnings;
};

/// Permutation test of H0: Sigma_0 = 0. Each draw permutes the individual
/// order independently within every category and recomputes the symmetrized
/// cross blocks (y_l,pi_l' y_k,pi_k + y_k,pi_k' y_l,pi_l) / (2n). The p-value
/// uses the add-one convention (1 + #{null >= observed}) / (n_perm + 1).
inline HypoTestResult test_sigma0_zero(const PanelDataset& data, int n_perm,
                                       std::uint64_t seed,
                                       MatrixNorm norm = MatrixNorm::frobenius) {
  if (n_perm < 99) throw ValidationError("test_sigma0_zero: n_perm >= 99 required");
  if (data.n < 3) throw ValidationError("test_sigma0_zero: n >= 3 required");
  if (!data.centered) throw ValidationError("test_sigma0_zero: centered data required");
  const int K = data.k_categories;
  const int p = data.p;
  const int n = data.n;

  HypoTestResult result;
  result.statistic = detail::cross_block_statistic(block_covariance(data), norm);
  result.null_draws.reserve(static_cast<std::size_t>(n_perm));

  std::vector<Eigen::MatrixXd> permuted(static_cast<std::size_t>(K));
  long count_ge = 0;
  for (int it = 0; it < n_perm; ++it) {
    for (int k = 0; k < K; ++k) {
      Rng rng(substream(substream(seed, 5000 + static_cast<std::uint64_t>(it)),
                        static_cast<std::uint64_t>(k)));
      const std::vector<int> pi = rng.permutation(n);
      Eigen::MatrixXd& yk = permuted[static_cast<std::size_t>(k)];
      yk.resize(n, p);
      const auto block = data.category(k);
      for (int i = 0; i < n; ++i)
        yk.row(i) = block.row(pi[static_cast<std::size_t>(i)]);
    }
    double stat = 0.0;
    for (int l = 0; l < K; ++l) {
      for (int k = l + 1; k < K; ++k) {
        const Eigen::MatrixXd cross =
            (permuted[static_cast<std::size_t>(l)].transpose() *
             permuted[static_cast<std::size_t>(k)]) /
            static_cast<double>(n);
        const Eigen::MatrixXd sym = 0.5 * (cross + cross.transpose());
        stat += 2.0 * detail::matrix_norm(sym, norm);  // (l,k) and (k,l)
      }
    }
    result.null_draws.push_back(stat);
    if (stat >= result.statistic) ++count_ge;
  }
  result.p_value = (1.0 + count_ge) / (n_perm + 1.0);
  return result;
}

/// Parametric bootstrap test of H0: all cross blocks equal. The null
/// covariance replaces every off-diagonal block with the average cross block
/// and eigen-floors the assembled Kp x Kp matrix to PD; each draw samples n
/// individuals from it and recomputes F_mean.
inline HypoTestResult test_equal_cross_blocks(const PanelDataset& data, int n_boot,
                                              std::uint64_t seed,
                                              MatrixNorm norm = MatrixNorm::frobenius) {
  if (n_boot < 99)
    throw ValidationError("test_equal_cross_blocks: n_boot >= 99 required");
  if (!data.centered)
    throw ValidationError("test_equal_cross_blocks: centered data required");
  const int K = data.k_categories;
  const int p = data.p;
  const int n = data.n;

  HypoTestResult result;
  if (K < 3)
    result.warnings.push_back(
        "K = 2 has a single distinct cross-block pair; the test only probes block symmetry");

  const BlockCovariance cov = block_covariance(data);
  result.statistic = detail::equal_block_statistic(cov, norm);

  // null model: diagonal blocks kept, every cross block replaced by the mean
  const Eigen::MatrixXd mean = detail::mean_cross_block(cov);
  Eigen::MatrixXd null_cov(K * p, K * p);
  for (int l = 0; l < K; ++l)
    for (int k = 0; k < K; ++k)
      null_cov.block(l * p, k * p, p, p) = (l == k) ? cov.block(l, l) : mean;
  null_cov = detail::symmetrized(null_cov);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(null_cov);
  const double max_ev = es.eigenvalues().maxCoeff();
  if (!(max_ev > 0.0))
    throw ConvergenceError("test_equal_cross_blocks: degenerate null covariance");
  const double floor = 1e-6 * max_ev;
  const long shifted = (es.eigenvalues().array() < floor).count();
  if (shifted > (K * p) / 10)
    result.warnings.push_back(
        "null covariance poorly conditioned: eigen-floor moved " +
        std::to_string(shifted) + " of " + std::to_string(K * p) + " eigenvalues");
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  const Eigen::MatrixXd transform =
      es.eigenvectors() * ev.cwiseSqrt().asDiagonal();  // N(0, null_cov) factor

  result.null_draws.reserve(static_cast<std::size_t>(n_boot));
  long count_ge = 0;
  Eigen::MatrixXd z(K * p, n);
  for (int it = 0; it < n_boot; ++it) {
    Rng rng(substream(seed, 6000 + static_cast<std::uint64_t>(it)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < K * p; ++j) z(j, i) = rng.normal();
    Eigen::MatrixXd draws = (transform * z).transpose();  // n x Kp
    const PanelDataset boot = center_and_wrap(draws, K, p);
    const double stat =
        detail::equal_block_statistic(block_covariance(boot), norm);
    result.null_draws.push_back(stat);
    if (stat >= result.statistic) ++count_ge;
  }
  result.p_value = (1.0 + count_ge) / (n_boot + 1.0);
  return result;
}

}  // namespace lggm
