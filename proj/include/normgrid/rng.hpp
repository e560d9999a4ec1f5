#pragma once
// Seeded randomness with fully specified draw algorithms, so a (config, seed)
// pair replays the same run on any platform. Distributions from <random> are
// avoided on purpose: their output is implementation-defined.

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace normgrid {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed addressed by (stream, index) off one master seed. Streams keep
// independent consumers (world layout, per-agent exploration, evaluation,
// EGTA cells, ...) from sharing state.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(master ^ splitmix64(stream ^ splitmix64(index)));
}

// Named streams used throughout the library.
inline constexpr std::uint64_t kWorldStream = 1;
inline constexpr std::uint64_t kAgentStream = 2;
inline constexpr std::uint64_t kEvalStream = 3;
inline constexpr std::uint64_t kCellStream = 4;
inline constexpr std::uint64_t kDetectorStream = 5;
inline constexpr std::uint64_t kCorpusStream = 6;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). Rejection keeps the result unbiased.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::bounded: n must be positive");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() / n * n;
    for (;;) {
      const std::uint64_t v = next();
      if (v < limit) return v % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Fisher-Yates with our own bounded() (std::shuffle is unspecified).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(bounded(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace normgrid
