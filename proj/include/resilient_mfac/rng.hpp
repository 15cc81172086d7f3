#pragma once

#include <cstdint>
#include <random>

namespace rmfac {

/// Portable seeded generator: std::mt19937_64 (output fixed by the standard)
/// with a hand-rolled 53-bit mantissa conversion, so draws are bit-identical
/// across standard libraries. std::uniform_*_distribution is not used because
/// its algorithm is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [lo, hi], rejection-sampled (unbiased).
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finaliser; derives independent stream seeds from one scenario seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline constexpr std::uint64_t kInitialStateStream = 1;
inline constexpr std::uint64_t kDosStream = 2;

}  // namespace rmfac
