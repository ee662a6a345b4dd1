#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <vector>

#include "lggm/detail/matrix_util.hpp"
#include "lggm/errors.hpp"
#include "lggm/panel.hpp"
#include "lggm/stack.hpp"

namespace lggm {

/// Joint log-likelihood of centered panel data at the given layer stack,
/// computed from K+1 p x p factorizations only:
///   L = -(npK/2) log 2pi + (n/2) { sum_k log det Omega_k - log det A
///       - sum_{k>=1} tr(S_kk Omega_k)
///       + sum_{l,m} a_l a_m tr(Omega_l S_lm Omega_m A^-1) }.
/// The alpha-weighted form uses A = Omega_0 + sum a_k^2 Omega_k throughout.
inline double joint_log_likelihood(const BlockCovariance& cov,
                                   const PrecisionStack& stack, int n) {
  if (n < 1) throw ValidationError("joint_log_likelihood: n >= 1 required");
  if (cov.p != stack.p || cov.k_categories != stack.k_categories)
    throw ValidationError("joint_log_likelihood: dimension mismatch");
  const int K = stack.k_categories;
  const int p = stack.p;

  double logdet_sum = 0.0;
  for (int k = 0; k <= K; ++k)
    logdet_sum += detail::chol_logdet_or_throw(stack.omega(k), "joint_log_likelihood");

  const Eigen::MatrixXd a = stack.combined();
  Eigen::LLT<Eigen::MatrixXd> llt_a(a);
  if (llt_a.info() != Eigen::Success)
    throw ConvergenceError("joint_log_likelihood: combined matrix A not PD");
  const double logdet_a =
      2.0 * llt_a.matrixL().toDenseMatrix().diagonal().array().log().sum();

  double trace_diag = 0.0;
  for (int k = 1; k <= K; ++k)
    trace_diag += cov.block(k - 1, k - 1).cwiseProduct(stack.omega(k)).sum();

  // cross = sum_{l,m} a_l a_m Omega_l S_lm Omega_m, then tr(A^-1 cross)
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(p, p);
  for (int l = 1; l <= K; ++l) {
    Eigen::MatrixXd left = stack.alpha(l) * stack.omega(l);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    for (int m = 1; m <= K; ++m)
      acc += cov.block(l - 1, m - 1) * (stack.alpha(m) * stack.omega(m));
    cross += left * acc;
  }
  const double trace_cross = llt_a.solve(cross).trace();

  const double np_k = static_cast<double>(n) * p * K;
  return -0.5 * np_k * std::log(2.0 * std::numbers::pi) +
         0.5 * n * (logdet_sum - logdet_a - trace_diag + trace_cross);
}

/// Penalized objective driving both estimators: the joint log-likelihood
/// minus (n/2)(lambda1 sum_k |Omega_k^-|_1 + lambda2 |Omega_0^-|_1). The n/2
/// factor keeps the penalty on the scale of the per-layer subproblems
/// tr(S Omega) - log det Omega + lambda |Omega^-|_1, so the EM trace of this
/// quantity is non-decreasing.
inline double penalized_objective(const BlockCovariance& cov,
                                  const PrecisionStack& stack, int n,
                                  const PenaltyPair& penalties) {
  double pen = penalties.lambda2 * detail::offdiag_l1(stack.omega(0));
  for (int k = 1; k <= stack.k_categories; ++k)
    pen += penalties.lambda1 * detail::offdiag_l1(stack.omega(k));
  return joint_log_likelihood(cov, stack, n) - 0.5 * n * pen;
}

/// Dense Kp x Kp precision implied by the stack:
///   Omega_Y = {_d Omega_k} - {a_l a_m Omega_l A^-1 Omega_m}.
inline Eigen::MatrixXd dense_precision(const PrecisionStack& stack) {
  const int K = stack.k_categories;
  const int p = stack.p;
  Eigen::LLT<Eigen::MatrixXd> llt_a(stack.combined());
  if (llt_a.info() != Eigen::Success)
    throw ConvergenceError("dense_precision: combined matrix A not PD");
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(K * p, K * p);
  std::vector<Eigen::MatrixXd> ainv_omega(static_cast<std::size_t>(K) + 1);
  for (int k = 1; k <= K; ++k)
    ainv_omega[static_cast<std::size_t>(k)] =
        llt_a.solve(stack.alpha(k) * stack.omega(k));
  for (int l = 1; l <= K; ++l) {
    for (int m = 1; m <= K; ++m) {
      Eigen::MatrixXd blk = -(stack.alpha(l) * stack.omega(l)) *
                            ainv_omega[static_cast<std::size_t>(m)];
      if (l == m) blk += stack.omega(l);
      full.block((l - 1) * p, (m - 1) * p, p, p) = blk;
    }
  }
  return detail::symmetrized(full);
}

/// Dense Kp x Kp covariance implied by the stack:
///   Sigma_Y = {_d Omega_k^-1} + (alpha alpha') (x) Omega_0^-1.
inline Eigen::MatrixXd dense_covariance(const PrecisionStack& stack) {
  const int K = stack.k_categories;
  const int p = stack.p;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  Eigen::LLT<Eigen::MatrixXd> llt0(stack.omega(0));
  if (llt0.info() != Eigen::Success)
    throw ConvergenceError("dense_covariance: systemic layer not PD");
  const Eigen::MatrixXd sigma0 = llt0.solve(eye);
  Eigen::MatrixXd full(K * p, K * p);
  for (int l = 1; l <= K; ++l) {
    for (int m = l; m <= K; ++m) {
      Eigen::MatrixXd blk = stack.alpha(l) * stack.alpha(m) * sigma0;
      if (l == m) {
        Eigen::LLT<Eigen::MatrixXd> lltk(stack.omega(l));
        if (lltk.info() != Eigen::Success)
          throw ConvergenceError("dense_covariance: category layer not PD");
        blk += lltk.solve(eye);
      }
      full.block((l - 1) * p, (m - 1) * p, p, p) = blk;
      if (l != m)
        full.block((m - 1) * p, (l - 1) * p, p, p) = blk.transpose();
    }
  }
  return detail::symmetrized(full);
}

/// Self-test residual of the determinant identity
///   sum_k log det Omega_k - log det A = log det Omega_Y^dense
/// for unit alphas. Expected <= 1e-8 on well-conditioned stacks.
inline double logdet_identity_check(const PrecisionStack& stack) {
  if (stack.alphas && (stack.alphas->array() != 1.0).any())
    throw ValidationError("logdet_identity_check: requires unit alphas");
  double lhs = -detail::chol_logdet_or_throw(stack.combined(), "logdet_identity_check");
  for (int k = 0; k <= stack.k_categories; ++k)
    lhs += detail::chol_logdet_or_throw(stack.omega(k), "logdet_identity_check");
  const double rhs =
      detail::chol_logdet_or_throw(dense_precision(stack), "logdet_identity_check");
  return std::abs(lhs - rhs);
}

/// Upper sanity bound for objective traces: the unpenalized log-likelihood at
/// the eigen-floored inverse of the dense sample covariance.
inline double saturated_log_likelihood(const BlockCovariance& cov, int n,
                                       double floor_ratio = 1e-8) {
  const Eigen::MatrixXd s = cov.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const double floor = std::max(es.eigenvalues().maxCoeff() * floor_ratio, 1e-12);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  const int kp = static_cast<int>(s.rows());
  // at Omega_Y = Sigma~^-1: log det Omega_Y = -sum log ev, tr term = kp
  double logdet = -ev.array().log().sum();
  return -0.5 * static_cast<double>(n) * kp * std::log(2.0 * std::numbers::pi) +
         0.5 * n * (logdet - kp);
}

}  // namespace lggm
