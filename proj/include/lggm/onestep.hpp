#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <string>
#include <vector>

#include "lggm/fit_report.hpp"
#include "lggm/glasso.hpp"
#include "lggm/likelihood.hpp"
#include "lggm/panel.hpp"
#include "lggm/stack.hpp"

namespace lggm {

/// Moment estimate of the systemic covariance: the average of all K(K-1)
/// ordered cross blocks, Sigma_0^ = (K(K-1))^-1 sum_{m != l} S_ml.
inline Eigen::MatrixXd sigma0_moment(const BlockCovariance& cov) {
  const int K = cov.k_categories;
  if (K < 2) throw ValidationError("sigma0_moment: K >= 2 required");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cov.p, cov.p);
  for (int l = 0; l < K; ++l)
    for (int m = 0; m < K; ++m)
      if (m != l) acc += cov.block(m, l);
  return acc / (static_cast<double>(K) * (K - 1));
}

/// Moment estimate of category k's covariance: S_kk - Sigma_0^ (may be
/// indefinite; fed through psd_project before glasso).
inline Eigen::MatrixXd sigmak_moment(const BlockCovariance& cov,
                                     const Eigen::MatrixXd& sigma0, int k) {
  if (k < 1 || k > cov.k_categories)
    throw ValidationError("sigmak_moment: category index out of range");
  return cov.block(k - 1, k - 1) - sigma0;
}

/// Eigenvalue-clipped PSD projection with a small diagonal floor so the
/// downstream glasso diagonal stays invertible. The floor is
/// max(d_ii, 1e-8 * max diag of the projection, 1e-8).
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, detail::max_abs(m));
  if (!detail::is_symmetric(m, 1e-10 * scale))
    throw ValidationError("psd_project: input is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrized(m));
  if (es.info() != Eigen::Success)
    throw ConvergenceError("psd_project: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = detail::symmetrized(
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
  const double floor = std::max(1e-8 * out.diagonal().maxCoeff(), 1e-8);
  for (int i = 0; i < out.rows(); ++i)
    out(i, i) = std::max(out(i, i), floor);
  return out;
}

/// The K+1 projected moment covariances (Sigma_0', Sigma_1', ..., Sigma_K'),
/// the inputs of the one-step solves and the EM initializer.
inline std::vector<Eigen::MatrixXd> projected_moment_covariances(
    const BlockCovariance& cov) {
  const int K = cov.k_categories;
  std::vector<Eigen::MatrixXd> sigmas(static_cast<std::size_t>(K) + 1);
  const Eigen::MatrixXd sigma0 = sigma0_moment(cov);
  sigmas[0] = psd_project(sigma0);
  for (int k = 1; k <= K; ++k)
    sigmas[static_cast<std::size_t>(k)] = psd_project(sigmak_moment(cov, sigma0, k));
  return sigmas;
}

/// One-step estimator: moment estimates, PSD projection, one glasso per layer
/// (lambda2 for the systemic layer, lambda1 for the others).
inline FitReport onestep_fit(const PanelDataset& data, const PenaltyPair& penalties,
                             const GlassoSettings& settings) {
  penalties.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const BlockCovariance cov = block_covariance(data);
  const auto sigmas = projected_moment_covariances(cov);
  const int K = cov.k_categories;

  std::vector<Eigen::MatrixXd> layers(static_cast<std::size_t>(K) + 1);
  FitReport report;
  for (int k = 0; k <= K; ++k) {
    GlassoSettings layer_settings = settings;
    layer_settings.lambda = (k == 0) ? penalties.lambda2 : penalties.lambda1;
    GlassoResult res = glasso_solve(sigmas[static_cast<std::size_t>(k)], layer_settings);
    if (!res.converged)
      report.warnings.push_back("glasso did not converge for layer " +
                                std::to_string(k) + " (gap " +
                                std::to_string(res.gap) + ")");
    layers[static_cast<std::size_t>(k)] = std::move(res.omega);
  }

  report.estimate = PrecisionStack::from_layers(std::move(layers));
  report.objective_trace = {
      penalized_objective(cov, report.estimate, data.n, penalties)};
  report.iterations = 1;
  report.converged = report.warnings.empty();
  report.edge_count = symmetric_edge_count(report.estimate);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace lggm
