#pragma once

#include <cstdint>
#include <random>

namespace qlips::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for sub-task `stream` of a run seeded with `seed`.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
}

/// mt19937_64 with a portable uniform-double mapping (the std distributions are
/// implementation defined, which would break cross-platform reproducibility).
class Rng {
 public:
  static constexpr const char* kFamily = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qlips::detail
