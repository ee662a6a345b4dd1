#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lggm/detail/parallel.hpp"
#include "lggm/errors.hpp"
#include "lggm/fit_report.hpp"
#include "lggm/likelihood.hpp"
#include "lggm/panel.hpp"
#include "lggm/select.hpp"
#include "lggm/stack.hpp"

namespace lggm {

/// Unordered off-diagonal support of one layer.
struct EdgeSet {
  int p = 0;
  std::set<std::pair<int, int>> pairs;  // i < j

  static EdgeSet of(const Eigen::MatrixXd& omega) {
    EdgeSet e;
    e.p = static_cast<int>(omega.rows());
    for (int j = 1; j < e.p; ++j)
      for (int i = 0; i < j; ++i)
        if (omega(i, j) != 0.0) e.pairs.emplace(i, j);
    return e;
  }
};

/// Average entropy loss over the K+1 layers:
///   EL = (K+1)^-1 sum_k { tr(Omega_k*^-1 Omega_k^) - log det(Omega_k*^-1 Omega_k^) } - p.
inline double entropy_loss(const PrecisionStack& truth, const PrecisionStack& est) {
  if (truth.p != est.p || truth.k_categories != est.k_categories)
    throw ValidationError("entropy_loss: dimension mismatch");
  const int p = truth.p;
  double sum = 0.0;
  for (int k = 0; k <= truth.k_categories; ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(truth.omega(k));
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("entropy_loss: truth layer not PD");
    const Eigen::MatrixXd ratio = llt.solve(est.omega(k));
    const double logdet_est =
        detail::chol_logdet_or_throw(est.omega(k), "entropy_loss");
    const double logdet_truth =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    sum += ratio.trace() - (logdet_est - logdet_truth);
  }
  return sum / (truth.k_categories + 1) - p;
}

/// Average relative squared Frobenius loss:
///   FL = (K+1)^-1 sum_k |Omega_k* - Omega_k^|_F^2 / |Omega_k*|_F^2.
inline double frobenius_loss(const PrecisionStack& truth, const PrecisionStack& est) {
  if (truth.p != est.p || truth.k_categories != est.k_categories)
    throw ValidationError("frobenius_loss: dimension mismatch");
  double sum = 0.0;
  for (int k = 0; k <= truth.k_categories; ++k)
    sum += (truth.omega(k) - est.omega(k)).squaredNorm() /
           truth.omega(k).squaredNorm();
  return sum / (truth.k_categories + 1);
}

/// Support recovery rates pooled over all K+1 layers (fractions, not
/// percentages). FN over an empty truth support is reported as 0 and flagged.
struct SupportMetrics {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double hamming = 0.0;
  long true_edges = 0;
  long estimated_edges = 0;
  bool fn_undefined = false;
};

inline SupportMetrics support_metrics(const PrecisionStack& truth,
                                      const PrecisionStack& est) {
  if (truth.p != est.p || truth.k_categories != est.k_categories)
    throw ValidationError("support_metrics: dimension mismatch");
  const int p = truth.p;
  long tp = 0, fp = 0, fn = 0;
  long truth_pairs = 0, est_pairs = 0;
  for (int k = 0; k <= truth.k_categories; ++k) {
    const auto& wt = truth.omega(k);
    const auto& we = est.omega(k);
    for (int j = 1; j < p; ++j) {
      for (int i = 0; i < j; ++i) {
        const bool t = wt(i, j) != 0.0;
        const bool e = we(i, j) != 0.0;
        truth_pairs += t;
        est_pairs += e;
        tp += t && e;
        fp += !t && e;
        fn += t && !e;
      }
    }
  }
  const long total = static_cast<long>(truth.k_categories + 1) * p * (p - 1) / 2;
  SupportMetrics m;
  m.true_edges = truth_pairs;
  m.estimated_edges = est_pairs;
  m.fp_rate = (total - truth_pairs) > 0
                  ? static_cast<double>(fp) / static_cast<double>(total - truth_pairs)
                  : 0.0;
  if (truth_pairs > 0) {
    m.fn_rate = static_cast<double>(fn) / static_cast<double>(truth_pairs);
  } else {
    m.fn_rate = 0.0;
    m.fn_undefined = true;
  }
  m.hamming = static_cast<double>(fp + fn) / static_cast<double>(total);
  return m;
}

/// Per-layer FP/FN/Hamming (systemic first), for category-vs-systemic plots.
inline std::vector<SupportMetrics> support_metrics_per_layer(
    const PrecisionStack& truth, const PrecisionStack& est) {
  std::vector<SupportMetrics> out;
  for (int k = 0; k <= truth.k_categories; ++k) {
    PrecisionStack t1, e1;
    t1.p = truth.p;
    e1.p = est.p;
    t1.k_categories = e1.k_categories = 0;  // metrics over a single layer
    t1.omegas = {truth.omega(k)};
    e1.omegas = {est.omega(k)};
    out.push_back(support_metrics(t1, e1));
  }
  return out;
}

struct MetricReport {
  double entropy_loss = 0.0;
  double frobenius_loss = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double hamming = 0.0;
  bool fn_undefined = false;
};

inline MetricReport evaluate_metrics(const PrecisionStack& truth,
                                     const PrecisionStack& est) {
  MetricReport r;
  r.entropy_loss = entropy_loss(truth, est);
  r.frobenius_loss = frobenius_loss(truth, est);
  const SupportMetrics s = support_metrics(truth, est);
  r.fp_rate = s.fp_rate;
  r.fn_rate = s.fn_rate;
  r.hamming = s.hamming;
  r.fn_undefined = s.fn_undefined;
  return r;
}

struct RocPoint {
  double lambda = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by fpr
  double auc = 0.0;
  int failed_points = 0;
};

/// Trapezoid AUC over (0,0) -> traced points -> (1,1).
inline double auc(std::vector<RocPoint> points) {
  std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
  });
  double area = 0.0, x = 0.0, y = 0.0;
  for (const auto& pt : points) {
    area += (pt.fpr - x) * 0.5 * (pt.tpr + y);
    x = pt.fpr;
    y = pt.tpr;
  }
  area += (1.0 - x) * 0.5 * (1.0 + y);
  return area;
}

using StackFitter = std::function<PrecisionStack(const PanelDataset&, const PenaltyPair&)>;

/// Trace pooled (FPR, TPR) over a lambda1 = lambda2 grid with an arbitrary
/// fitter; failed grid points are skipped and counted.
inline RocCurve roc_curve(const PanelDataset& data, const PrecisionStack& truth,
                          const StackFitter& fitter, const LambdaGrid& grid) {
  if (!grid.tie_to_equal)
    throw ValidationError("roc_curve: grid must have tie_to_equal set");
  RocCurve curve;
  for (const PenaltyPair& penalties : grid.points()) {
    try {
      const PrecisionStack est = fitter(data, penalties);
      const SupportMetrics m = support_metrics(truth, est);
      curve.points.push_back({penalties.lambda1, m.fp_rate, 1.0 - m.fn_rate});
    } catch (const std::exception&) {
      ++curve.failed_points;
    }
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RocPoint& a, const RocPoint& b) {
              return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
            });
  curve.auc = auc(curve.points);
  return curve;
}

/// Method-based fitter: EM fits warm-start along the grid from large lambda
/// down, so call roc_curve with this once per (data, method).
inline StackFitter method_fitter(FitMethod method, const EmSettings& settings) {
  // shared warm start across the sweep of one curve
  auto warm = std::make_shared<std::optional<PrecisionStack>>();
  return [method, settings, warm](const PanelDataset& data,
                                  const PenaltyPair& penalties) {
    FitReport fit = run_fit(data, penalties, method, settings,
                            method == FitMethod::em ? *warm : std::nullopt);
    if (method == FitMethod::em) *warm = fit.estimate;
    return fit.estimate;
  };
}

/// roc_curve over a method enum; grid points are visited from the largest
/// lambda down so EM warm starts stay on the sparse side.
inline RocCurve roc_curve(const PanelDataset& data, const PrecisionStack& truth,
                          FitMethod method, const EmSettings& settings,
                          const LambdaGrid& grid) {
  if (!grid.tie_to_equal)
    throw ValidationError("roc_curve: grid must have tie_to_equal set");
  LambdaGrid descending = grid;
  std::reverse(descending.lambda1_values.begin(), descending.lambda1_values.end());
  // bypass the ascending-order validation by tracing manually
  RocCurve curve;
  StackFitter fitter = method_fitter(method, settings);
  for (double v : descending.lambda1_values) {
    const PenaltyPair penalties{v, v};
    try {
      const PrecisionStack est = fitter(data, penalties);
      const SupportMetrics m = support_metrics(truth, est);
      curve.points.push_back({v, m.fp_rate, 1.0 - m.fn_rate});
    } catch (const std::exception&) {
      ++curve.failed_points;
    }
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RocPoint& a, const RocPoint& b) {
              return a.fpr < b.fpr || (a.fpr == b.fpr && a.tpr < b.tpr);
            });
  curve.auc = auc(curve.points);
  return curve;
}

}  // namespace lggm
