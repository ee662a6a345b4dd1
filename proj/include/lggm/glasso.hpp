#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>

#include "lggm/detail/matrix_util.hpp"
#include "lggm/errors.hpp"

namespace lggm {

struct GlassoSettings {
  double lambda = 0.0;
  int max_sweeps = 200;
  double dual_gap_tol = 1e-6;
  double inner_cd_tol = 1e-8;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw ValidationError("GlassoSettings: lambda must be finite and >= 0");
    if (max_sweeps < 1) throw ValidationError("GlassoSettings: max_sweeps >= 1");
    if (!(dual_gap_tol > 0.0) || !(inner_cd_tol > 0.0))
      throw ValidationError("GlassoSettings: tolerances must be > 0");
  }
};

struct GlassoResult {
  Eigen::MatrixXd omega;  // precision estimate, exact zeros off-diagonal
  Eigen::MatrixXd w;      // its inverse, diag(w) = diag(s) at the optimum
  double gap = 0.0;       // final max KKT residual
  int sweeps = 0;
  bool converged = false;
};

namespace detail {

/// Stationarity residual of tr(S Omega) - log det Omega + lambda |Omega^-|_1
/// at (omega, w = omega^-1): |s_ij - w_ij| <= lambda where omega_ij = 0,
/// exact subgradient match where omega_ij != 0, s_ii = w_ii on the diagonal.
inline double glasso_kkt_residual(const Eigen::MatrixXd& s,
                                  const Eigen::MatrixXd& w,
                                  const Eigen::MatrixXd& omega, double lambda) {
  const int p = static_cast<int>(s.rows());
  double res = 0.0;
  for (int j = 0; j < p; ++j) {
    res = std::max(res, std::abs(s(j, j) - w(j, j)));
    for (int i = 0; i < j; ++i) {
      const double d = s(i, j) - w(i, j);
      if (omega(i, j) == 0.0)
        res = std::max(res, std::abs(d) - lambda);
      else
        res = std::max(res, std::abs(d + lambda * (omega(i, j) > 0 ? 1.0 : -1.0)));
    }
  }
  return res;
}

}  // namespace detail

/// Block coordinate descent on the precision matrix (the primal graphical
/// lasso), each column solved as a lasso by cyclic coordinate descent. The
/// diagonal is unpenalized, so w_ii = s_ii at the optimum. Off-diagonal zeros
/// come straight out of soft-thresholding and are stored exactly.
///
/// The column update fixes Omega_11 and minimizes over (omega_12, omega_22):
/// with Theta = Omega_11^-1 the solution is
///   omega_12 = argmin 1/2 w' (s_jj Theta) w + s_12' w + lambda |w|_1,
///   omega_22 = 1/s_jj + omega_12' Theta omega_12,
/// which keeps the iterate positive definite for any input. Theta is carried
/// along through the inverse W, rank-one-updated per column and refreshed by
/// a Cholesky solve at the end of every sweep for the KKT check.
inline GlassoResult glasso_solve(const Eigen::MatrixXd& s_in,
                                 const GlassoSettings& settings,
                                 const GlassoResult* warm_start = nullptr) {
  settings.validate();
  const int p = static_cast<int>(s_in.rows());
  if (s_in.cols() != p) throw ValidationError("glasso_solve: S must be square");
  if (!detail::all_finite(s_in))
    throw ValidationError("glasso_solve: non-finite entries in S");
  const double scale = std::max(1.0, detail::max_abs(s_in));
  if (!detail::is_symmetric(s_in, 1e-10 * scale))
    throw ValidationError("glasso_solve: S is not symmetric");
  for (int i = 0; i < p; ++i)
    if (!(s_in(i, i) > 0.0))
      throw ValidationError("glasso_solve: S diagonal must be strictly positive");

  const Eigen::MatrixXd s = detail::symmetrized(s_in);
  const double lambda = settings.lambda;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

  Eigen::MatrixXd omega, w;
  auto cold_init = [&] {
    omega = Eigen::MatrixXd::Zero(p, p);
    omega.diagonal() = s.diagonal().cwiseInverse();
    w = Eigen::MatrixXd::Zero(p, p);
    w.diagonal() = s.diagonal();
  };
  if (warm_start != nullptr && warm_start->omega.rows() == p) {
    Eigen::LLT<Eigen::MatrixXd> llt(warm_start->omega);
    if (llt.info() == Eigen::Success) {
      omega = warm_start->omega;
      w = llt.solve(eye);
    } else {
      cold_init();
    }
  } else {
    cold_init();
  }

  GlassoResult result;
  result.gap = std::numeric_limits<double>::infinity();

  // scratch buffers reused across columns
  Eigen::MatrixXd theta(p - 1 > 0 ? p - 1 : 1, p - 1 > 0 ? p - 1 : 1);
  Eigen::VectorXd s12(p - 1 > 0 ? p - 1 : 1), beta(p - 1 > 0 ? p - 1 : 1),
      h(p - 1 > 0 ? p - 1 : 1);
  const int inner_max = 10000;

  for (int sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
    for (int j = 0; j < p; ++j) {
      if (p == 1) break;
      const int m = p - 1;
      const double q = s(j, j);

      // gather the j-deleted pieces; Theta = Omega_11^-1 via the W identity
      for (int u = 0, r = 0; u < p; ++u) {
        if (u == j) continue;
        s12(r) = s(u, j);
        beta(r) = omega(u, j);
        ++r;
      }
      const double w22 = w(j, j);
      for (int u = 0, r = 0; u < p; ++u) {
        if (u == j) continue;
        int c = 0;
        for (int v = 0; v < p; ++v) {
          if (v == j) continue;
          theta(r, c) = w(u, v) - w(u, j) * w(v, j) / w22;
          ++c;
        }
        ++r;
      }

      // lasso by cyclic coordinate descent, warm-started at the current column
      h.head(m).noalias() = theta.topLeftCorner(m, m) * beta.head(m);
      for (int it = 0; it < inner_max; ++it) {
        double delta_max = 0.0;
        for (int u = 0; u < m; ++u) {
          const double quu = q * theta(u, u);
          const double grad_rest = q * (h(u) - theta(u, u) * beta(u)) + s12(u);
          const double bnew = detail::soft_threshold(-grad_rest, lambda) / quu;
          if (bnew != beta(u)) {
            const double d = bnew - beta(u);
            h.head(m).noalias() += theta.col(u).head(m) * d;
            beta(u) = bnew;
            delta_max = std::max(delta_max, std::abs(d));
          }
        }
        if (delta_max <= settings.inner_cd_tol) break;
      }

      const double omega_jj = 1.0 / q + beta.head(m).dot(h.head(m));
      for (int u = 0, r = 0; u < p; ++u) {
        if (u == j) continue;
        omega(u, j) = omega(j, u) = beta(r);
        ++r;
      }
      omega(j, j) = omega_jj;

      // refresh W for this column: w_jj = s_jj, w_12 = -s_jj Theta omega_12,
      // W_11 = Theta + s_jj (Theta omega_12)(Theta omega_12)'
      w(j, j) = q;
      for (int u = 0, r = 0; u < p; ++u) {
        if (u == j) continue;
        w(u, j) = w(j, u) = -q * h(r);
        ++r;
      }
      for (int u = 0, r = 0; u < p; ++u) {
        if (u == j) continue;
        int c = 0;
        for (int v = 0; v < p; ++v) {
          if (v == j) continue;
          w(u, v) = theta(r, c) + q * h(r) * h(c);
          ++c;
        }
        ++r;
      }
    }
    result.sweeps = sweep;

    // exact inverse refresh, then the optimality check
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("glasso_solve: iterate lost positive definiteness");
    w = llt.solve(eye);
    result.gap = detail::glasso_kkt_residual(s, w, omega, lambda);
    if (result.gap <= settings.dual_gap_tol) {
      result.converged = true;
      break;
    }
  }

  result.omega = std::move(omega);
  result.w = detail::symmetrized(w);
  return result;
}

/// Warm start from a precision matrix only (spec-level convenience API).
inline GlassoResult glasso_solve(const Eigen::MatrixXd& s,
                                 const GlassoSettings& settings,
                                 const Eigen::MatrixXd& warm_omega) {
  GlassoResult warm;
  warm.omega = warm_omega;
  return glasso_solve(s, settings, &warm);
}

/// Objective of the per-layer subproblem tr(S Omega) - log det Omega + lambda |Omega^-|_1.
inline double glasso_objective(const Eigen::MatrixXd& s,
                               const Eigen::MatrixXd& omega, double lambda) {
  const auto ld = detail::chol_logdet(omega);
  if (!ld) return std::numeric_limits<double>::infinity();
  return s.cwiseProduct(omega).sum() - *ld + lambda * detail::offdiag_l1(omega);
}

}  // namespace lggm
