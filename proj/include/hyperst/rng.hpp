#pragma once

// Counter-based random streams. A stream is a (key, counter) pair; the n-th
// draw is a pure function of the key and n, so splitting work across
// threads or reordering it never changes the numbers a stream produces.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace hyperst {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(detail::mix64(seed ^ detail::kGolden)) {}

  CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) : CounterRng(seed) {
    for (std::uint64_t s : path) key_ = derive(key_, s);
  }

  /// Independent child stream; does not advance this stream.
  CounterRng split(std::uint64_t stream) const { return CounterRng(derive(key_, stream), Raw{}); }

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("CounterRng::below: empty range");
    // Lemire's multiply-shift with rejection.
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  struct Raw {};
  CounterRng(std::uint64_t key, Raw) : key_(key) {}

  static std::uint64_t derive(std::uint64_t key, std::uint64_t stream) {
    return detail::mix64(key ^ detail::mix64(stream + detail::kGolden));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse-CDF sampling over a finite distribution. Probabilities are
/// clipped at 0 and renormalized.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> probs) : cdf_(probs.size()) {
    if (probs.empty()) throw std::invalid_argument("DiscreteSampler: empty distribution");
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += std::max(probs[k], 0.0);
      cdf_[k] = acc;
    }
    if (!(acc > 0.0)) throw std::invalid_argument("DiscreteSampler: zero total probability");
    for (double& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
  }

  std::size_t operator()(CounterRng& rng) const {
    const double u = rng.uniform();
    return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

/// Multinomial counts of `shots` draws.
inline std::vector<std::uint64_t> sample_counts(std::span<const double> probs, std::uint64_t shots,
                                                CounterRng& rng) {
  const DiscreteSampler draw(probs);
  std::vector<std::uint64_t> counts(probs.size(), 0);
  for (std::uint64_t s = 0; s < shots; ++s) ++counts[draw(rng)];
  return counts;
}

}  // namespace hyperst
