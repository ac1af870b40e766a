#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mattekit {

// Deterministic splitmix64 stream. One u64 of state, so streams are cheap
// to derive, fork, and serialize; results are identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n >= 1.
  int64_t below(int64_t n) { return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n)); }

  // Box-Muller; consumes two uniforms per call, no cached spare (keeps the
  // stream position a pure function of call count).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      int64_t j = below(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Mixes a seed with stream tags so independent consumers (per-entry dataset
// workers, per-iteration augmentation, parameter init) never share a stream.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag, uint64_t index = 0) {
  Rng mix(seed ^ (tag * 0xd1342543de82ef95ULL) ^ (index * 0xaf251af3b0f025b5ULL));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace mattekit
