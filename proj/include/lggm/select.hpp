#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lggm/detail/parallel.hpp"
#include "lggm/em.hpp"
#include "lggm/errors.hpp"
#include "lggm/fit_report.hpp"
#include "lggm/likelihood.hpp"
#include "lggm/onestep.hpp"
#include "lggm/panel.hpp"
#include "lggm/rng.hpp"

namespace lggm {

enum class FitMethod { onestep, em, alpha_em };

inline const char* to_string(FitMethod m) {
  switch (m) {
    case FitMethod::onestep: return "onestep";
    case FitMethod::em: return "em";
    case FitMethod::alpha_em: return "alpha-em";
  }
  return "?";
}

/// Dispatch one fit. EM fits may be warm-started from a previous estimate.
inline FitReport run_fit(const PanelDataset& data, const PenaltyPair& penalties,
                         FitMethod method, const EmSettings& settings,
                         std::optional<PrecisionStack> warm = std::nullopt) {
  switch (method) {
    case FitMethod::onestep:
      return onestep_fit(data, penalties, settings.glasso);
    case FitMethod::em:
      return em_fit(data, penalties, settings, std::move(warm));
    case FitMethod::alpha_em: {
      EmSettings s = settings;
      s.estimate_alphas = true;
      return alpha_em_fit(data, penalties, s);
    }
  }
  throw ValidationError("run_fit: unknown method");
}

/// Regularization grid. With tie_to_equal the grid is the diagonal
/// lambda1 = lambda2 (the ROC protocol); otherwise the full cross product.
struct LambdaGrid {
  std::vector<double> lambda1_values;
  std::vector<double> lambda2_values;
  bool tie_to_equal = false;

  void validate() const {
    auto check = [](const std::vector<double>& v, const char* name) {
      if (v.empty()) throw ValidationError(std::string("LambdaGrid: ") + name + " empty");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i]))
          throw ValidationError(std::string("LambdaGrid: ") + name +
                                " must be strictly positive");
        if (i > 0 && !(v[i] > v[i - 1]))
          throw ValidationError(std::string("LambdaGrid: ") + name +
                                " must be strictly increasing");
      }
    };
    check(lambda1_values, "lambda1_values");
    if (!tie_to_equal) check(lambda2_values, "lambda2_values");
  }

  std::vector<PenaltyPair> points() const {
    validate();
    std::vector<PenaltyPair> pts;
    if (tie_to_equal) {
      for (double v : lambda1_values) pts.push_back({v, v});
    } else {
      for (double l2 : lambda2_values)
        for (double l1 : lambda1_values) pts.push_back({l1, l2});
    }
    return pts;
  }

  /// count log-spaced values centered at sqrt(log p / n), spanning a factor
  /// of `span` each way (the Condition-2 scaling used as a heuristic anchor).
  static std::vector<double> default_values(int p, int n, int count = 10,
                                            double span = 8.0) {
    if (p < 2 || n < 2 || count < 1 || !(span > 1.0))
      throw ValidationError("LambdaGrid: bad default-grid parameters");
    const double anchor = std::sqrt(std::log(static_cast<double>(p)) / n);
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1) {
      v[0] = anchor;
      return v;
    }
    const double lo = std::log(anchor / span), hi = std::log(anchor * span);
    for (int i = 0; i < count; ++i)
      v[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
    return v;
  }

  static LambdaGrid defaults(int p, int n, int count = 10, double span = 8.0,
                             bool tie = false) {
    LambdaGrid g;
    g.lambda1_values = default_values(p, n, count, span);
    g.lambda2_values = g.lambda1_values;
    g.tie_to_equal = tie;
    return g;
  }
};

struct SelectionCriterion {
  enum class Kind { ebic, cv };
  Kind kind = Kind::ebic;
  double gamma = 0.1;  // eBIC complexity weight
  int folds = 5;       // CV fold count

  std::string name() const {
    if (kind == Kind::ebic) return "ebic(" + std::to_string(gamma) + ")";
    return "cv(" + std::to_string(folds) + ")";
  }
};

/// log C(n, k) via log-gamma; +inf when k > n (model larger than the space).
inline double log_binomial(long n, long k) {
  if (k < 0 || n < 0) throw ValidationError("log_binomial: negative argument");
  if (k > n) return std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// Extended BIC: -2 L + nu log n + 2 gamma log C(Kp(p-1)/2, nu), with nu the
/// count of nonzero off-diagonal unordered pairs over all K+1 layers.
inline double ebic_score(const FitReport& fit, const BlockCovariance& cov,
                         int n, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ValidationError("ebic_score: gamma must lie in [0, 1]");
  const double ll = joint_log_likelihood(cov, fit.estimate, n);
  if (!std::isfinite(ll))
    throw ConvergenceError("ebic_score: non-finite likelihood");
  const long nu = nonzero_pairs(fit.estimate);
  const long p = fit.estimate.p;
  const long model_space = static_cast<long>(fit.estimate.k_categories) * p * (p - 1) / 2;
  double score = -2.0 * ll + nu * std::log(static_cast<double>(n));
  if (gamma > 0.0) score += 2.0 * gamma * log_binomial(model_space, nu);
  return score;
}

namespace detail {

/// Deterministic J-fold split of {0..n-1} given the seed.
inline std::vector<std::vector<int>> fold_assignment(int n, int folds,
                                                     std::uint64_t seed) {
  Rng rng(substream(seed, 4000));
  std::vector<int> order = rng.permutation(n);
  std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(folds));
  for (int i = 0; i < n; ++i)
    fold_rows[static_cast<std::size_t>(i % folds)].push_back(order[static_cast<std::size_t>(i)]);
  return fold_rows;
}

inline PanelDataset subset_rows(const PanelDataset& data,
                                const std::vector<int>& rows) {
  Matrix values(static_cast<Eigen::Index>(rows.size()), data.values.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    values.row(static_cast<Eigen::Index>(r)) = data.values.row(rows[r]);
  return center_and_wrap(values, data.k_categories, data.p);
}

/// Predictive negative log-likelihood F(Sigma, Omega) = tr(Sigma Omega) - log det Omega.
inline double predictive_nll(const Matrix& sigma, const Matrix& omega) {
  const double ld = chol_logdet_or_throw(omega, "predictive_nll");
  return sigma.cwiseProduct(omega).sum() - ld;
}

}  // namespace detail

/// J-fold cross-validation score of one penalty pair: fit on each fold's
/// complement, assemble the dense Kp x Kp precision via the layer identity,
/// and sum the predictive negative log-likelihood over held-out folds.
inline double cv_score(const PanelDataset& data, const PenaltyPair& penalties,
                       int folds, FitMethod method, const EmSettings& settings,
                       std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cv_score: J >= 2 required");
  if (data.n < folds) throw ValidationError("cv_score: n >= J required");
  const auto fold_rows = detail::fold_assignment(data.n, folds, seed);
  double total = 0.0;
  for (int j = 0; j < folds; ++j) {
    const auto& held = fold_rows[static_cast<std::size_t>(j)];
    if (held.size() < 2)
      throw ValidationError("cv_score: fold " + std::to_string(j) + " has fewer than 2 rows");
    std::vector<int> rest;
    for (int jj = 0; jj < folds; ++jj)
      if (jj != j)
        rest.insert(rest.end(), fold_rows[static_cast<std::size_t>(jj)].begin(),
                    fold_rows[static_cast<std::size_t>(jj)].end());
    const PanelDataset train = detail::subset_rows(data, rest);
    const PanelDataset test = detail::subset_rows(data, held);
    const FitReport fit = run_fit(train, penalties, method, settings);
    total += detail::predictive_nll(block_covariance(test).dense(),
                                    dense_precision(fit.estimate));
  }
  return total;
}

struct SelectionReport {
  PenaltyPair chosen;
  std::vector<std::pair<PenaltyPair, double>> scores;  // grid order
  SelectionCriterion criterion;
  std::optional<FitReport> final_fit;  // full-data refit at the chosen pair
  std::vector<std::string> failures;   // per-point diagnostics
};

/// Evaluate the criterion on every grid point and return the argmin, ties
/// broken toward larger lambda1 + lambda2. eBIC fits warm-start along each
/// lambda2 row (EM only); CV fits chain within each fold.
inline SelectionReport select_lambda(const PanelDataset& data,
                                     const LambdaGrid& grid,
                                     const SelectionCriterion& criterion,
                                     FitMethod method, const EmSettings& settings,
                                     std::uint64_t seed = 0, int jobs = 1) {
  const auto points = grid.points();
  if (points.empty()) throw ValidationError("select_lambda: empty grid");

  SelectionReport report;
  report.criterion = criterion;
  std::vector<double> scores(points.size(),
                             std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> failures(points.size());

  if (criterion.kind == SelectionCriterion::Kind::ebic) {
    const BlockCovariance cov = block_covariance(data);
    // one warm-start chain per lambda2 row, largest lambda1 first
    const std::size_t row_len =
        grid.tie_to_equal ? points.size() : grid.lambda1_values.size();
    const int n_rows = static_cast<int>(points.size() / row_len);
    detail::parallel_for(jobs, n_rows, [&](int row) {
      std::optional<PrecisionStack> warm;
      for (std::size_t c = row_len; c-- > 0;) {
        const std::size_t idx = static_cast<std::size_t>(row) * row_len + c;
        try {
          FitReport fit = run_fit(data, points[idx], method, settings, warm);
          scores[idx] = ebic_score(fit, cov, data.n, criterion.gamma);
          if (method == FitMethod::em) warm = fit.estimate;
        } catch (const std::exception& e) {
          failures[idx] = e.what();
        }
      }
    });
  } else {
    detail::parallel_for(jobs, static_cast<int>(points.size()), [&](int i) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        scores[idx] =
            cv_score(data, points[idx], criterion.folds, method, settings, seed);
      } catch (const std::exception& e) {
        failures[idx] = e.what();
      }
    });
  }

  int best = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    report.scores.emplace_back(points[i], scores[i]);
    if (!std::isfinite(scores[i])) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const double b = scores[static_cast<std::size_t>(best)];
    const double sum_i = points[i].lambda1 + points[i].lambda2;
    const double sum_b = points[static_cast<std::size_t>(best)].lambda1 +
                         points[static_cast<std::size_t>(best)].lambda2;
    if (scores[i] < b || (scores[i] == b && sum_i > sum_b))
      best = static_cast<int>(i);
  }
  if (best < 0) {
    std::string detail = "select_lambda: all grid points failed";
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!failures[i].empty())
        detail += "\n  (" + std::to_string(points[i].lambda1) + ", " +
                  std::to_string(points[i].lambda2) + "): " + failures[i];
    throw ConvergenceError(detail);
  }
  for (auto& f : failures)
    if (!f.empty()) report.failures.push_back(std::move(f));

  report.chosen = points[static_cast<std::size_t>(best)];
  report.final_fit = run_fit(data, report.chosen, method, settings);
  return report;
}

}  // namespace lggm
