#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace pinn {

// Reproducible generator: std::mt19937_64 (bit-exact by the C++ standard) with
// hand-rolled conversions, since std::*_distribution output is
// implementation-defined. Distinct purposes derive distinct seeds via SplitMix64.
class Rng {
 public:
  static constexpr std::string_view kIdentifier = "mt19937_64+splitmix64-stream+u53";

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

// Stream tags used across the project.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSampling = 2;
inline constexpr std::uint64_t kShuffle = 3;
}  // namespace stream

}  // namespace pinn
