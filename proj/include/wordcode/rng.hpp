#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace wordcode {

/// Seeded generator whose distributions are pinned at the bit level, so runs
/// replay identically across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    // keep log() away from 0
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, n), n > 0. Rejection-free modulo bias is
  /// negligible for the ranges used here, but we reject anyway to keep the
  /// stream well defined.
  int below(int n) {
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<int>(x % range);
  }

  /// Fisher-Yates shuffle driven by below().
  template <class Seq>
  void shuffle(Seq& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      using std::swap;
      swap(v[static_cast<std::size_t>(i)],
           v[static_cast<std::size_t>(below(i + 1))]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wordcode
