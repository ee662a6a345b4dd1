#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lggm/fit_report.hpp"
#include "lggm/glasso.hpp"
#include "lggm/likelihood.hpp"
#include "lggm/onestep.hpp"
#include "lggm/panel.hpp"
#include "lggm/stack.hpp"

namespace lggm {

struct EmSettings {
  /// Convergence threshold on |P(t+1) - P(t)|; defaults to 1e-4 * p.
  std::optional<double> delta;
  int max_iterations = 100;
  GlassoSettings glasso;
  bool estimate_alphas = false;

  double resolved_delta(int p) const { return delta ? *delta : 1e-4 * p; }

  void validate() const {
    if (delta && !(*delta > 0.0))
      throw ValidationError("EmSettings: delta must be > 0");
    if (max_iterations < 1)
      throw ValidationError("EmSettings: max_iterations >= 1");
    glasso.validate();
  }
};

namespace detail {

/// Conditional-moment matrices of one E-step evaluated at (Omega, alpha):
///   m = (1/n) sum_i E[z z' | y_i] = A^-1 + A^-1 C A^-1
///   g[k] = (1/n) sum_i y_ki E[z | y_i]' = B_k A^-1
/// with B_k = sum_l a_l S_kl Omega_l and C = sum_l a_l Omega_l B_l.
struct EStepMoments {
  std::vector<Eigen::MatrixXd> sigdot;  // K+1 updated covariances
  std::vector<Eigen::MatrixXd> g;       // K cross moments, index k-1
  Eigen::MatrixXd m;                    // second moment of the latent layer
};

inline EStepMoments estep_moments(const BlockCovariance& cov,
                                  const PrecisionStack& stack) {
  const int K = stack.k_categories;
  const int p = stack.p;
  Eigen::LLT<Eigen::MatrixXd> llt_a(stack.combined());
  if (llt_a.info() != Eigen::Success)
    throw ConvergenceError("estep: combined matrix A is singular");
  const Eigen::MatrixXd a_inv =
      llt_a.solve(Eigen::MatrixXd::Identity(p, p));

  std::vector<Eigen::MatrixXd> scaled(static_cast<std::size_t>(K) + 1);
  for (int k = 1; k <= K; ++k)
    scaled[static_cast<std::size_t>(k)] = stack.alpha(k) * stack.omega(k);

  EStepMoments out;
  out.g.resize(static_cast<std::size_t>(K));
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (int k = 1; k <= K; ++k) {
    Eigen::MatrixXd b_k = Eigen::MatrixXd::Zero(p, p);
    for (int l = 1; l <= K; ++l)
      b_k.noalias() += cov.block(k - 1, l - 1) * scaled[static_cast<std::size_t>(l)];
    c.noalias() += scaled[static_cast<std::size_t>(k)] * b_k;
    out.g[static_cast<std::size_t>(k - 1)].noalias() = b_k * a_inv;
  }
  out.m = symmetrized(a_inv + a_inv * c * a_inv);

  out.sigdot.resize(static_cast<std::size_t>(K) + 1);
  out.sigdot[0] = out.m;
  for (int k = 1; k <= K; ++k) {
    const double ak = stack.alpha(k);
    const Eigen::MatrixXd& g_k = out.g[static_cast<std::size_t>(k - 1)];
    out.sigdot[static_cast<std::size_t>(k)] = symmetrized(
        cov.block(k - 1, k - 1) - ak * g_k - ak * g_k.transpose() +
        (ak * ak) * out.m);
  }
  return out;
}

}  // namespace detail

/// E-step covariance updates: the K+1 conditional second-moment matrices
/// (Sigma-dot_0, ..., Sigma-dot_K) at the current stack, symmetrized.
inline std::vector<Eigen::MatrixXd> estep(const BlockCovariance& cov,
                                          const PrecisionStack& stack) {
  if (cov.p != stack.p || cov.k_categories != stack.k_categories)
    throw ValidationError("estep: dimension mismatch");
  return detail::estep_moments(cov, stack).sigdot;
}

namespace detail {

struct EmOptions {
  bool estimate_alphas = false;
  std::optional<PrecisionStack> init;
  std::optional<Eigen::VectorXd> initial_alphas;
};

/// Moment initializer generalized to a fixed alpha guess: the mean cross
/// block estimates (avg_l!=m a_l a_m) Sigma_0, and the diagonal blocks give
/// Sigma_k = S_kk - a_k^2 Sigma_0; both are projected to PSD. At unit alphas
/// this is exactly projected_moment_covariances.
inline std::vector<Eigen::MatrixXd> alpha_moment_covariances(
    const BlockCovariance& cov, const Eigen::VectorXd& alphas) {
  const int K = cov.k_categories;
  double pair_mean = 0.0;
  for (int l = 0; l < K; ++l)
    for (int m = 0; m < K; ++m)
      if (l != m) pair_mean += alphas(l) * alphas(m);
  pair_mean /= static_cast<double>(K) * (K - 1);

  const Eigen::MatrixXd sigma0 = sigma0_moment(cov) / pair_mean;
  std::vector<Eigen::MatrixXd> sigmas(static_cast<std::size_t>(K) + 1);
  sigmas[0] = psd_project(sigma0);
  for (int k = 1; k <= K; ++k)
    sigmas[static_cast<std::size_t>(k)] = psd_project(
        cov.block(k - 1, k - 1) - alphas(k - 1) * alphas(k - 1) * sigma0);
  return sigmas;
}

inline FitReport em_core(const PanelDataset& data, const PenaltyPair& penalties,
                         const EmSettings& settings, const EmOptions& options) {
  penalties.validate();
  settings.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const BlockCovariance cov = block_covariance(data);
  const int K = cov.k_categories;
  const int p = cov.p;
  const double delta = settings.resolved_delta(p);

  FitReport report;
  std::vector<Eigen::MatrixXd> sigdot;
  std::vector<Eigen::MatrixXd> layers;   // incumbent per layer
  bool have_incumbent = false;
  Eigen::VectorXd alphas = options.initial_alphas
                               ? *options.initial_alphas
                               : Eigen::VectorXd::Ones(K);

  if (options.init) {
    // start from the caller's stack: one E-step provides the first sigma-dots
    PrecisionStack init = *options.init;
    if (init.p != p || init.k_categories != K)
      throw ValidationError("em_fit: init stack dimension mismatch");
    init.alphas.reset();
    init.validate();
    sigdot = estep(cov, init);
    layers = init.omegas;
    have_incumbent = true;
  } else if (options.initial_alphas) {
    sigdot = alpha_moment_covariances(cov, alphas);
    layers.assign(static_cast<std::size_t>(K) + 1, Eigen::MatrixXd());
  } else {
    sigdot = projected_moment_covariances(cov);
    layers.assign(static_cast<std::size_t>(K) + 1, Eigen::MatrixXd());
  }

  std::vector<GlassoResult> warm(static_cast<std::size_t>(K) + 1);
  std::vector<bool> have_warm(static_cast<std::size_t>(K) + 1, false);
  std::optional<detail::EStepMoments> moments;  // from the previous E-step

  bool converged = false;
  int iterations = 0;
  double prev_obj = 0.0;

  for (int t = 1; t <= settings.max_iterations; ++t) {
    // M-step: one glasso per layer; keep the incumbent when the solver
    // returns a worse subproblem objective so the trace cannot decrease
    for (int k = 0; k <= K; ++k) {
      GlassoSettings ls = settings.glasso;
      ls.lambda = (k == 0) ? penalties.lambda2 : penalties.lambda1;
      const auto idx = static_cast<std::size_t>(k);
      GlassoResult res;
      try {
        res = glasso_solve(sigdot[idx], ls, have_warm[idx] ? &warm[idx] : nullptr);
      } catch (const std::exception& e) {
        throw ConvergenceError("em_fit: iteration " + std::to_string(t) +
                               ", layer " + std::to_string(k) + ": " + e.what());
      }
      if (!res.converged)
        report.warnings.push_back("iteration " + std::to_string(t) + ", layer " +
                                  std::to_string(k) +
                                  ": glasso not converged (gap " +
                                  std::to_string(res.gap) + ")");
      const bool accept =
          !have_incumbent ||
          glasso_objective(sigdot[idx], res.omega, ls.lambda) <=
              glasso_objective(sigdot[idx], layers[idx], ls.lambda);
      if (accept) layers[idx] = res.omega;
      warm[idx] = std::move(res);
      have_warm[idx] = true;
    }
    have_incumbent = true;
    iterations = t;

    // closed-form alpha update from the previous E-step's moments
    if (options.estimate_alphas && moments) {
      for (int k = 1; k <= K; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        const Eigen::MatrixXd& g_k = moments->g[idx - 1];
        const double num = layers[idx].cwiseProduct(g_k + g_k.transpose()).sum();
        const double den = 2.0 * layers[idx].cwiseProduct(moments->m).sum();
        double a = num / den;
        if (!(a >= 1e-6)) {
          // systemic layer vanishing for this category; keep the scale tiny
          // but positive so the stack stays valid
          report.warnings.push_back("alpha_" + std::to_string(k) +
                                    " collapsed below 1e-6 at iteration " +
                                    std::to_string(t));
          a = 1e-6;
        }
        alphas(k - 1) = a;
      }
    }

    PrecisionStack current = PrecisionStack::from_layers(
        layers, options.estimate_alphas ? std::optional<Eigen::VectorXd>(alphas)
                                        : std::nullopt);
    const double obj = penalized_objective(cov, current, data.n, penalties);
    report.objective_trace.push_back(obj);
    if (t >= 2 && std::abs(obj - prev_obj) < delta) {
      converged = true;
      report.estimate = std::move(current);
      break;
    }
    prev_obj = obj;

    detail::EStepMoments em = detail::estep_moments(cov, current);
    sigdot = em.sigdot;
    moments = std::move(em);
    report.estimate = std::move(current);
  }

  if (options.estimate_alphas) {
    // identifiability normalization: rescale so max diag(Sigma_0) = 1 while
    // alpha_k^2 Sigma_0 is unchanged
    Eigen::LLT<Eigen::MatrixXd> llt0(report.estimate.omega(0));
    if (llt0.info() == Eigen::Success) {
      const Eigen::MatrixXd sigma0 =
          llt0.solve(Eigen::MatrixXd::Identity(p, p));
      const double c = sigma0.diagonal().maxCoeff();
      if (c > 0.0 && std::isfinite(c)) {
        report.estimate.omegas[0] *= c;
        Eigen::VectorXd scaled = std::sqrt(c) * alphas;
        report.estimate.alphas = scaled;
      }
    } else {
      report.warnings.push_back("normalization skipped: systemic layer not PD");
    }
  }

  report.iterations = iterations;
  report.converged = converged;
  report.edge_count = symmetric_edge_count(report.estimate);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace detail

/// Graphical EM: alternate per-layer glasso M-steps with closed-form E-step
/// covariance updates until the penalized log-likelihood stabilizes.
/// Without `init`, starts from the projected moment covariances.
inline FitReport em_fit(const PanelDataset& data, const PenaltyPair& penalties,
                        const EmSettings& settings,
                        std::optional<PrecisionStack> init = std::nullopt) {
  detail::EmOptions options;
  options.estimate_alphas = false;
  options.init = std::move(init);
  return detail::em_core(data, penalties, settings, options);
}

namespace detail {

/// Alpha starting points for the biconcave alternation. The likelihood at
/// K = 2 pins only the product alpha_1 alpha_2 (the max diagonal of the mean
/// cross block under the Sigma_0 normalization), so the ratio is explored by
/// a fixed grid of starts; at K >= 3 pairwise cross-block scales identify the
/// alphas directly and provide a moment start.
inline std::vector<Eigen::VectorXd> alpha_start_points(const BlockCovariance& cov) {
  const int K = cov.k_categories;
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Ones(K));

  // pairwise products a_l a_m ~ max diag of the (l,m) cross block, given
  // max diag(Sigma_0) = 1
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(K, K);
  for (int l = 0; l < K; ++l)
    for (int m = 0; m < K; ++m)
      if (l != m)
        t(l, m) = 0.5 * (cov.block(l, m) + cov.block(m, l).transpose())
                      .diagonal()
                      .maxCoeff();

  if (K == 2) {
    const double product = std::max(t(0, 1), 1e-4);
    for (double ratio : {1.0 / 3.0, 0.5, 1.0, 2.0, 3.0}) {
      Eigen::VectorXd a(2);
      a << std::sqrt(product / ratio), std::sqrt(product * ratio);
      starts.push_back(a);
    }
    return starts;
  }

  Eigen::VectorXd moment(K);
  bool valid = true;
  for (int k = 0; k < K && valid; ++k) {
    double log_sum = 0.0;
    int count = 0;
    for (int l = 0; l < K && valid; ++l) {
      for (int m = l + 1; m < K && valid; ++m) {
        if (l == k || m == k) continue;
        const double prod = t(k, l) * t(k, m) / t(l, m);
        if (!(prod > 0.0) || !std::isfinite(prod)) {
          valid = false;
          break;
        }
        log_sum += 0.5 * std::log(prod);
        ++count;
      }
    }
    if (valid && count > 0) moment(k) = std::exp(log_sum / count);
    else valid = false;
  }
  if (valid) starts.push_back(moment);
  return starts;
}

}  // namespace detail

/// EM with per-category systemic intensities alpha_k. When
/// settings.estimate_alphas is false this is exactly em_fit. Otherwise the
/// biconcave alternation (Omega M-step, closed-form alpha update, E-step at
/// the extended A) is run from each alpha starting point, every run ends
/// with the identifiability normalization max diag(Sigma_0) = 1, and the run
/// with the best penalized objective at that common scale is returned.
inline FitReport alpha_em_fit(const PanelDataset& data,
                              const PenaltyPair& penalties,
                              const EmSettings& settings) {
  if (!settings.estimate_alphas) return em_fit(data, penalties, settings);
  const auto t0 = std::chrono::steady_clock::now();
  const BlockCovariance cov = block_covariance(data);

  std::optional<FitReport> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& start : detail::alpha_start_points(cov)) {
    detail::EmOptions options;
    options.estimate_alphas = true;
    options.initial_alphas = start;
    FitReport fit = detail::em_core(data, penalties, settings, options);
    const double score =
        penalized_objective(cov, fit.estimate, data.n, penalties);
    if (score > best_score) {
      best_score = score;
      best = std::move(fit);
    }
  }
  best->wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return *best;
}

}  // namespace lggm
