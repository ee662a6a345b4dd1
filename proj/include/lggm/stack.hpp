#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lggm/detail/matrix_util.hpp"
#include "lggm/errors.hpp"

namespace lggm {

/// The K+1 layer precision matrices: index 0 is the systemic layer, indices
/// 1..K the category-specific layers. Optional alphas scale the systemic
/// influence per category (absent means all ones).
struct PrecisionStack {
  int p = 0;
  int k_categories = 0;
  std::vector<Eigen::MatrixXd> omegas;  // size K+1
  std::optional<Eigen::VectorXd> alphas;  // size K when present

  /// alpha_k for category k in 1..K.
  double alpha(int k) const { return alphas ? (*alphas)(k - 1) : 1.0; }

  const Eigen::MatrixXd& omega(int k) const {
    return omegas[static_cast<std::size_t>(k)];
  }

  /// A = Omega_0 + sum_k alpha_k^2 Omega_k.
  Eigen::MatrixXd combined() const {
    Eigen::MatrixXd a = omegas[0];
    for (int k = 1; k <= k_categories; ++k) {
      const double ak = alpha(k);
      a += (ak * ak) * omegas[static_cast<std::size_t>(k)];
    }
    return a;
  }

  static PrecisionStack from_layers(std::vector<Eigen::MatrixXd> layers,
                                    std::optional<Eigen::VectorXd> alphas = std::nullopt) {
    PrecisionStack s;
    if (layers.empty()) throw ValidationError("PrecisionStack: no layers");
    s.k_categories = static_cast<int>(layers.size()) - 1;
    s.p = static_cast<int>(layers[0].rows());
    s.omegas = std::move(layers);
    s.alphas = std::move(alphas);
    s.validate();
    return s;
  }

  static PrecisionStack identity(int p, int k_categories) {
    std::vector<Eigen::MatrixXd> layers(
        static_cast<std::size_t>(k_categories) + 1,
        Eigen::MatrixXd::Identity(p, p));
    return from_layers(std::move(layers));
  }

  void validate() const {
    if (k_categories < 1)
      throw ValidationError("PrecisionStack: need a systemic and >= 1 category layer");
    for (std::size_t k = 0; k < omegas.size(); ++k) {
      const auto& w = omegas[k];
      if (w.rows() != p || w.cols() != p)
        throw ValidationError("PrecisionStack: layer " + std::to_string(k) +
                              " has wrong dimensions");
      if (!detail::is_symmetric(w, 1e-12))
        throw ValidationError("PrecisionStack: layer " + std::to_string(k) +
                              " is not symmetric");
      if (!detail::chol_logdet(w))
        throw ValidationError("PrecisionStack: layer " + std::to_string(k) +
                              " is not positive definite");
    }
    if (alphas) {
      if (alphas->size() != k_categories)
        throw ValidationError("PrecisionStack: alphas must have K entries");
      if ((alphas->array() <= 0.0).any())
        throw ValidationError("PrecisionStack: alphas must be positive");
    }
    if (!detail::chol_logdet(combined()))
      throw ValidationError("PrecisionStack: combined matrix A is not positive definite");
  }
};

/// (lambda1, lambda2): the category-specific and systemic penalty levels.
struct PenaltyPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) ||
        !std::isfinite(lambda1) || !std::isfinite(lambda2))
      throw ValidationError("PenaltyPair: penalties must be finite and >= 0");
  }
};

/// Implied precision of the observed category k: (Omega_k^-1 + alpha_k^2 Omega_0^-1)^-1.
inline Eigen::MatrixXd aggregate_precision(const PrecisionStack& stack, int k) {
  if (k < 1 || k > stack.k_categories)
    throw ValidationError("aggregate_precision: category index out of range");
  Eigen::LLT<Eigen::MatrixXd> llt_k(stack.omega(k));
  Eigen::LLT<Eigen::MatrixXd> llt_0(stack.omega(0));
  if (llt_k.info() != Eigen::Success || llt_0.info() != Eigen::Success)
    throw ConvergenceError("aggregate_precision: singular layer matrix");
  const int p = stack.p;
  const double a2 = stack.alpha(k) * stack.alpha(k);
  Eigen::MatrixXd sum_of_inv = llt_k.solve(Eigen::MatrixXd::Identity(p, p)) +
                               a2 * llt_0.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> llt_sum(detail::symmetrized(sum_of_inv));
  if (llt_sum.info() != Eigen::Success)
    throw ConvergenceError("aggregate_precision: sum of inverses not PD");
  return detail::symmetrized(llt_sum.solve(Eigen::MatrixXd::Identity(p, p)));
}

}  // namespace lggm
