#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "lggm/errors.hpp"

namespace lggm::detail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double tol) {
  return max_abs(m - m.transpose()) <= tol;
}

inline Matrix symmetrized(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

/// log det of a symmetric PD matrix via Cholesky; nullopt when the
/// factorization fails (the PD-violation signal, no eigenvalue fallback).
inline std::optional<double> chol_logdet(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline double chol_logdet_or_throw(const Matrix& m, const char* what) {
  const auto ld = chol_logdet(m);
  if (!ld) throw ConvergenceError(std::string(what) + ": matrix is not positive definite");
  return *ld;
}

inline double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

/// Sum of |off-diagonal| entries, both triangles.
inline double offdiag_l1(const Matrix& m) {
  return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

/// Count of unordered pairs (i<j) with exact nonzero entries.
inline long nonzero_pairs(const Matrix& m) {
  long count = 0;
  for (int j = 1; j < m.cols(); ++j)
    for (int i = 0; i < j; ++i)
      if (m(i, j) != 0.0) ++count;
  return count;
}

inline double max_abs_offdiag(const Matrix& m) {
  double v = 0.0;
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i)
      if (i != j) v = std::max(v, std::abs(m(i, j)));
  return v;
}

}  // namespace lggm::detail
