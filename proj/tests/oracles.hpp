#pragma once

// Test-only oracles: independent dense-matrix reference computations the
// library implementations are checked against. Everything here goes through
// the assembled Kp x Kp matrices on purpose; the library never does.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "lggm/panel.hpp"
#include "lggm/rng.hpp"
#include "lggm/stack.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense Sigma_Y = {_d Omega_k^-1} + (alpha alpha') (x) Omega_0^-1, built with
/// plain inverses, no shared code with the library's block algebra.
inline MatrixXd dense_sigma_y(const lggm::PrecisionStack& stack) {
  const int K = stack.k_categories;
  const int p = stack.p;
  const MatrixXd sigma0 = stack.omega(0).inverse();
  MatrixXd full = MatrixXd::Zero(K * p, K * p);
  for (int l = 1; l <= K; ++l) {
    for (int m = 1; m <= K; ++m) {
      MatrixXd blk = stack.alpha(l) * stack.alpha(m) * sigma0;
      if (l == m) blk += stack.omega(l).inverse();
      full.block((l - 1) * p, (m - 1) * p, p, p) = blk;
    }
  }
  return 0.5 * (full + full.transpose());
}

/// Sum over rows of the N(0, Sigma_Y) log density, via one dense factorization.
inline double dense_mvn_loglik(const Eigen::MatrixXd& values,
                               const lggm::PrecisionStack& stack) {
  const MatrixXd sigma = dense_sigma_y(stack);
  const Eigen::LLT<MatrixXd> llt(sigma);
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const int kp = static_cast<int>(sigma.rows());
  const auto n = values.rows();
  double quad = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VectorXd y = values.row(i).transpose();
    quad += y.dot(llt.solve(y));
  }
  return -0.5 * static_cast<double>(n) * kp * std::log(2.0 * std::numbers::pi) -
         0.5 * static_cast<double>(n) * logdet - 0.5 * quad;
}

/// MVN log density expressed with a sample covariance instead of raw rows
/// (equivalent because sum_i y' S^-1 y = n tr(Cov S^-1)).
inline double dense_mvn_loglik_from_cov(const MatrixXd& sample_cov, int n,
                                        const lggm::PrecisionStack& stack) {
  const MatrixXd sigma = dense_sigma_y(stack);
  const Eigen::LLT<MatrixXd> llt(sigma);
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const int kp = static_cast<int>(sigma.rows());
  const double quad = llt.solve(sample_cov).trace() * n;
  return -0.5 * static_cast<double>(n) * kp * std::log(2.0 * std::numbers::pi) -
         0.5 * n * logdet - 0.5 * quad;
}

/// E-step reference through explicit Gaussian conditioning of (Z, Y):
/// returns the K+1 conditional second-moment matrices given the sample
/// covariance of Y.
inline std::vector<MatrixXd> dense_estep(const lggm::BlockCovariance& cov,
                                         const lggm::PrecisionStack& stack) {
  const int K = stack.k_categories;
  const int p = stack.p;
  const MatrixXd sigma0 = stack.omega(0).inverse();
  MatrixXd c_zy(p, K * p);  // cov(Z, Y)
  for (int k = 1; k <= K; ++k)
    c_zy.middleCols((k - 1) * p, p) = stack.alpha(k) * sigma0;
  const MatrixXd sigma_y = dense_sigma_y(stack);
  const MatrixXd m = c_zy * sigma_y.inverse();        // E[Z|y] = m y
  const MatrixXd cond_var = sigma0 - m * c_zy.transpose();
  const MatrixXd s_hat = cov.dense();

  std::vector<MatrixXd> out(static_cast<std::size_t>(K) + 1);
  out[0] = cond_var + m * s_hat * m.transpose();
  for (int k = 1; k <= K; ++k) {
    MatrixXd ek = MatrixXd::Zero(p, K * p);  // selector of block k
    ek.middleCols((k - 1) * p, p).setIdentity();
    const double a = stack.alpha(k);
    MatrixXd second = ek * s_hat * ek.transpose() -
                      a * (ek * s_hat * m.transpose()) -
                      a * (m * s_hat * ek.transpose()) +
                      a * a * (m * s_hat * m.transpose());
    out[static_cast<std::size_t>(k)] = second + a * a * cond_var;
  }
  for (auto& mtx : out) mtx = 0.5 * (mtx + mtx.transpose());
  return out;
}

/// Random symmetric PD matrix with eigenvalues in [lo, hi].
inline MatrixXd random_pd(int p, lggm::Rng& rng, double lo = 0.5, double hi = 2.0) {
  MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ();
  VectorXd ev(p);
  for (int i = 0; i < p; ++i) ev(i) = rng.uniform(lo, hi);
  MatrixXd m = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

inline lggm::PrecisionStack random_stack(int p, int K, lggm::Rng& rng,
                                         double lo = 0.5, double hi = 2.0) {
  std::vector<MatrixXd> layers;
  for (int k = 0; k <= K; ++k) layers.push_back(random_pd(p, rng, lo, hi));
  return lggm::PrecisionStack::from_layers(std::move(layers));
}

/// Random sparse PD precision: off-diagonal support with given density,
/// diagonally dominated.
inline MatrixXd random_sparse_precision(int p, double density, lggm::Rng& rng) {
  MatrixXd m = MatrixXd::Zero(p, p);
  for (int j = 1; j < p; ++j) {
    for (int i = 0; i < j; ++i) {
      if (rng.uniform() < density) {
        double w = rng.uniform(0.3, 0.8);
        if (rng.uniform() < 0.5) w = -w;
        m(i, j) = m(j, i) = w;
      }
    }
  }
  for (int i = 0; i < p; ++i) m(i, i) = m.row(i).cwiseAbs().sum() + 0.5;
  return m;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, lggm::Rng& rng) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace oracle
