#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lggm/errors.hpp"
#include "lggm/panel.hpp"
#include "lggm/rng.hpp"
#include "lggm/stack.hpp"

namespace lggm {

enum class Topology { chain, nearest_neighbor };

struct NetworkSpec {
  Topology topology = Topology::chain;
  int p = 0;
  int m = 1;          // neighbor count (nearest_neighbor only)
  double rho = 0.0;   // perturbation ratio
  std::uint64_t seed = 0;
};

/// Category/systemic topology pairings of the simulation study.
enum class Architecture {
  I,    // chain categories, nearest-neighbor systemic
  II,   // all nearest-neighbor
  III,  // all chain
  IV,   // nearest-neighbor categories, chain systemic
};

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "I") return Architecture::I;
  if (s == "II") return Architecture::II;
  if (s == "III") return Architecture::III;
  if (s == "IV") return Architecture::IV;
  throw ValidationError("unknown architecture '" + s + "' (expected I, II, III or IV)");
}

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::I: return "I";
    case Architecture::II: return "II";
    case Architecture::III: return "III";
    case Architecture::IV: return "IV";
  }
  return "?";
}

struct ScenarioSpec {
  Architecture architecture = Architecture::I;
  int p = 100;
  int n = 300;
  int k_categories = 4;
  int m = 5;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> alphas;  // systemic intensities, default 1

  void validate() const {
    if (p < 2) throw ValidationError("ScenarioSpec: p >= 2 required");
    if (n < 2) throw ValidationError("ScenarioSpec: n >= 2 required");
    if (k_categories < 2)
      throw ValidationError("ScenarioSpec: K >= 2 required for identifiability");
    if (m < 1 || m >= p) throw ValidationError("ScenarioSpec: 1 <= m < p required");
    if (!(rho >= 0.0)) throw ValidationError("ScenarioSpec: rho >= 0 required");
    if (alphas) {
      if (alphas->size() != k_categories)
        throw ValidationError("ScenarioSpec: alphas must have K entries");
      if ((alphas->array() <= 0.0).any())
        throw ValidationError("ScenarioSpec: alphas must be positive");
    }
  }
};

/// Chain covariance from cumulative positions s: Sigma_ij = exp(-|s_i - s_j| / 2).
/// Its inverse is tridiagonal in exact arithmetic.
inline Eigen::MatrixXd chain_covariance_from_positions(const std::vector<double>& s) {
  const int p = static_cast<int>(s.size());
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      sigma(i, j) = std::exp(-std::abs(s[static_cast<std::size_t>(i)] -
                                       s[static_cast<std::size_t>(j)]) / 2.0);
  return sigma;
}

/// Cumulative node positions of a chain draw: s_1 = 0, s_i = s_{i-1} + u_i
/// with u_i ~ Unif(0.5, 1).
inline std::vector<double> chain_positions(int p, std::uint64_t seed) {
  if (p < 2) throw ValidationError("chain_positions: p >= 2 required");
  Rng rng(seed);
  std::vector<double> s(static_cast<std::size_t>(p));
  s[0] = 0.0;
  for (int i = 1; i < p; ++i)
    s[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i - 1)] + rng.uniform(0.5, 1.0);
  return s;
}

/// Tridiagonal chain precision: the inverse of the position covariance;
/// entries below 1e-10 are zeroed.
inline Eigen::MatrixXd chain_precision(int p, std::uint64_t seed) {
  const std::vector<double> s = chain_positions(p, seed);
  const Eigen::MatrixXd sigma = chain_covariance_from_positions(s);
  Eigen::MatrixXd omega = sigma.llt().solve(Eigen::MatrixXd::Identity(p, p));
  omega = 0.5 * (omega + omega.transpose());
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && std::abs(omega(i, j)) < 1e-10) omega(i, j) = 0.0;
  return omega;
}

/// Nearest-neighbor precision: p points uniform on [0,1]^2, each joined to its
/// m nearest neighbors (union symmetrized), edge weights uniform on
/// [-1,-0.5] u [0.5,1], diagonal 1.5 * row absolute sum + 0.1 (strictly
/// diagonally dominant, hence PD).
inline Eigen::MatrixXd nn_precision(int p, int m, std::uint64_t seed) {
  if (p < 2) throw ValidationError("nn_precision: p >= 2 required");
  if (m < 1 || m >= p) throw ValidationError("nn_precision: 1 <= m < p required");
  Rng rng(seed);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(p));
  for (auto& pt : pts) {
    pt.first = rng.uniform();
    pt.second = rng.uniform();
  }

  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double dx = pts[static_cast<std::size_t>(i)].first - pts[static_cast<std::size_t>(j)].first;
      const double dy = pts[static_cast<std::size_t>(i)].second - pts[static_cast<std::size_t>(j)].second;
      dist[static_cast<std::size_t>(j)] = {dx * dx + dy * dy, j};
    }
    dist[static_cast<std::size_t>(i)] = {std::numeric_limits<double>::infinity(), i};
    std::partial_sort(dist.begin(), dist.begin() + m, dist.end());
    for (int q = 0; q < m; ++q) {
      const int j = dist[static_cast<std::size_t>(q)].second;
      if (omega(i, j) == 0.0) {
        double w = rng.uniform(0.5, 1.0);
        if (rng.uniform() < 0.5) w = -w;
        omega(i, j) = omega(j, i) = w;
      }
    }
  }
  for (int i = 0; i < p; ++i) {
    const double row_sum = omega.row(i).cwiseAbs().sum();
    omega(i, i) = 1.5 * row_sum + 0.1;
  }
  return omega;
}

/// Add round(rho * T) random edges (T = current unordered support pairs) with
/// weights uniform on [-1,-0.5] u [0.5,1]; if the result loses definiteness,
/// shift the diagonal so the minimum eigenvalue is 0.05. rho = 0 returns the
/// input unchanged.
inline Eigen::MatrixXd perturb(const Eigen::MatrixXd& omega, double rho,
                               std::uint64_t seed) {
  if (!(rho >= 0.0)) throw ValidationError("perturb: rho >= 0 required");
  const int p = static_cast<int>(omega.rows());
  long t_edges = 0;
  std::vector<std::pair<int, int>> zero_pairs;
  for (int j = 1; j < p; ++j) {
    for (int i = 0; i < j; ++i) {
      if (omega(i, j) != 0.0)
        ++t_edges;
      else
        zero_pairs.emplace_back(i, j);
    }
  }
  const long additions = std::lround(rho * static_cast<double>(t_edges));
  if (additions == 0) return omega;
  if (additions > static_cast<long>(zero_pairs.size()))
    throw ValidationError("perturb: not enough zero pairs to add " +
                          std::to_string(additions) + " edges");

  Rng rng(seed);
  Eigen::MatrixXd out = omega;
  for (long a = 0; a < additions; ++a) {
    const auto pick = static_cast<std::size_t>(rng.below(zero_pairs.size()));
    const auto [i, j] = zero_pairs[pick];
    zero_pairs[pick] = zero_pairs.back();
    zero_pairs.pop_back();
    double w = rng.uniform(0.5, 1.0);
    if (rng.uniform() < 0.5) w = -w;
    out(i, j) = out(j, i) = w;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < 0.05)
    out.diagonal().array() += 0.05 - min_ev;
  return out;
}

/// Build the ground-truth stack of a scenario; layer k uses the substream
/// (seed, 1000+k) for topology and (seed, 2000+k) for perturbation.
inline PrecisionStack make_truth(const ScenarioSpec& spec) {
  spec.validate();
  const int K = spec.k_categories;
  const bool chain_categories = spec.architecture == Architecture::I ||
                                spec.architecture == Architecture::III;
  const bool chain_systemic = spec.architecture == Architecture::III ||
                              spec.architecture == Architecture::IV;
  std::vector<Eigen::MatrixXd> layers(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const bool chain = (k == 0) ? chain_systemic : chain_categories;
    const std::uint64_t topo_seed = substream(spec.seed, 1000 + static_cast<std::uint64_t>(k));
    Eigen::MatrixXd base = chain ? chain_precision(spec.p, topo_seed)
                                 : nn_precision(spec.p, spec.m, topo_seed);
    layers[static_cast<std::size_t>(k)] =
        perturb(base, spec.rho, substream(spec.seed, 2000 + static_cast<std::uint64_t>(k)));
  }
  return PrecisionStack::from_layers(std::move(layers), spec.alphas);
}

/// Draw an n-individual panel from a truth stack: Z_i ~ N(0, Omega_0^-1),
/// X_ki ~ N(0, Omega_k^-1), y_ki = x_ki + alpha_k z_i; columns centered.
/// Streams: (seed, 3000) for Z, (seed, 3000+k) for X_k.
inline PanelDataset sample_panel_from_truth(const PrecisionStack& truth, int n,
                                            std::uint64_t seed) {
  if (n < 2) throw ValidationError("sample_panel_from_truth: n >= 2 required");
  const int p = truth.p;
  const int K = truth.k_categories;

  auto draw_layer = [&](const Eigen::MatrixXd& omega, std::uint64_t stream_seed) {
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("sample_panel_from_truth: layer not PD");
    Rng rng(stream_seed);
    Eigen::MatrixXd z(p, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) z(j, i) = rng.normal();
    // x = L^-T z has covariance Omega^-1
    return Eigen::MatrixXd(llt.matrixU().solve(z).transpose());  // n x p
  };

  const Eigen::MatrixXd z = draw_layer(truth.omega(0), substream(seed, 3000));
  Eigen::MatrixXd values(n, K * p);
  for (int k = 1; k <= K; ++k) {
    const Eigen::MatrixXd x =
        draw_layer(truth.omega(k), substream(seed, 3000 + static_cast<std::uint64_t>(k)));
    values.middleCols((k - 1) * p, p) = x + truth.alpha(k) * z;
  }
  return center_and_wrap(values, K, p);
}

inline std::pair<PanelDataset, PrecisionStack> sample_panel(const ScenarioSpec& spec) {
  PrecisionStack truth = make_truth(spec);
  PanelDataset data = sample_panel_from_truth(truth, spec.n, spec.seed);
  return {std::move(data), std::move(truth)};
}

}  // namespace lggm
