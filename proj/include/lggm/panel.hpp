#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "lggm/detail/matrix_util.hpp"
#include "lggm/errors.hpp"

namespace lggm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Panel of n individuals, each observed on the same p variables in K
/// dependent categories. Row i is the stacked vector (y_1i', ..., y_Ki')
/// with one contiguous p-block per category.
struct PanelDataset {
  int n = 0;
  int k_categories = 0;
  int p = 0;
  Matrix values;  // n x (K*p)
  bool centered = false;

  /// View of the n x p block of category k (0-based).
  auto category(int k) const {
    return values.middleCols(static_cast<Eigen::Index>(k) * p, p);
  }

  /// Wrap values the caller asserts are draws from a mean-zero model;
  /// no sample centering is applied.
  static PanelDataset from_centered(Matrix values, int k_categories, int p) {
    PanelDataset d;
    d.n = static_cast<int>(values.rows());
    d.k_categories = k_categories;
    d.p = p;
    d.values = std::move(values);
    d.centered = true;
    d.validate();
    return d;
  }

  void validate() const {
    if (k_categories < 2)
      throw ValidationError("PanelDataset: K >= 2 required for identifiability");
    if (p < 1) throw ValidationError("PanelDataset: p >= 1 required");
    if (values.cols() != static_cast<Eigen::Index>(k_categories) * p)
      throw ValidationError("PanelDataset: values must have K*p columns, got " +
                            std::to_string(values.cols()));
    if (!detail::all_finite(values))
      throw ValidationError("PanelDataset: non-finite entries");
  }
};

/// Center every column of a raw n x (K*p) matrix and wrap it.
inline PanelDataset center_and_wrap(const Matrix& raw, int k_categories, int p) {
  if (raw.rows() < 2) throw ValidationError("center_and_wrap: n >= 2 required");
  if (k_categories < 2) throw ValidationError("center_and_wrap: K >= 2 required");
  if (p < 1) throw ValidationError("center_and_wrap: p >= 1 required");
  if (raw.cols() != static_cast<Eigen::Index>(k_categories) * p)
    throw ValidationError("center_and_wrap: expected " +
                          std::to_string(static_cast<long>(k_categories) * p) +
                          " columns, got " + std::to_string(raw.cols()));
  if (!detail::all_finite(raw))
    throw ValidationError("center_and_wrap: non-finite entries");

  Matrix centered = raw.rowwise() - raw.colwise().mean();
  return PanelDataset::from_centered(std::move(centered), k_categories, p);
}

/// Kp x Kp sample covariance held as a K x K family of p x p blocks,
/// block (l,m) = n^-1 sum_i y_li y_mi'.
struct BlockCovariance {
  int p = 0;
  int k_categories = 0;
  std::vector<Matrix> blocks;  // row-major, index l*K + m

  const Matrix& block(int l, int m) const {
    return blocks[static_cast<std::size_t>(l) * k_categories + m];
  }
  Matrix& block(int l, int m) {
    return blocks[static_cast<std::size_t>(l) * k_categories + m];
  }

  /// Assemble the dense Kp x Kp matrix (test oracles, CV scoring, hypotest).
  Matrix dense() const {
    const int K = k_categories;
    Matrix full(K * p, K * p);
    for (int l = 0; l < K; ++l)
      for (int m = 0; m < K; ++m)
        full.block(l * p, m * p, p, p) = block(l, m);
    return full;
  }
};

inline BlockCovariance block_covariance(const PanelDataset& data) {
  if (!data.centered)
    throw ValidationError("block_covariance: dataset must be centered");
  const int K = data.k_categories;
  BlockCovariance cov;
  cov.p = data.p;
  cov.k_categories = K;
  cov.blocks.resize(static_cast<std::size_t>(K) * K);
  const double inv_n = 1.0 / data.n;
  for (int l = 0; l < K; ++l) {
    for (int m = l; m < K; ++m) {
      cov.block(l, m) = inv_n * (data.category(l).transpose() * data.category(m));
      if (m != l) cov.block(m, l) = cov.block(l, m).transpose();
    }
  }
  return cov;
}

}  // namespace lggm
