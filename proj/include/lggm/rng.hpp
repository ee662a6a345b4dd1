#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace lggm {

/// Counter-based 64-bit generator (SplitMix64). The state is a Weyl counter;
/// each output is a finalizer hash of the counter, so the stream is fully
/// determined by the seed and the draw index on every platform.
///
/// Stream splitting: substream(seed, id) hashes (seed, id) into a fresh seed.
/// Fixed purpose ids keep the draws of independent components (network layers,
/// data draws, resampling iterations) on disjoint reproducible streams:
///   simulate: topology layer k -> 1000+k, perturbation layer k -> 2000+k,
///             systemic draw -> 3000, category-k draw -> 3000+k
///   select:   cross-validation fold shuffle -> 4000
///   hypotest: resample iteration i -> nested substream(5000+i, category)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe under log().
  double uniform_pos() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Marsaglia polar method; pair cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    have_spare_ = true;
    return u * scale;
  }

  /// Integer in [0, bound) by rejection; unbiased.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[i], idx[j]);
    }
    return idx;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Derive the seed of an independent substream identified by `id`.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t id) {
  Rng g(seed ^ (0xda942042e4dd58b5ULL * (id + 1)));
  return g.next();
}

}  // namespace lggm
