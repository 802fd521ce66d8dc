#pragma once

#include <cstdint>

namespace statecap {

// Counter-based generator (splitmix64 core). A (seed, stream) pair fully
// determines the output sequence, so parallel workers can draw from disjoint
// streams and results do not depend on scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ULL))) {}

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix(key_ ^ counter_);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Samples an index from a finite pmf (assumed normalized).
  template <typename Vec>
  int sample(const Vec& pmf) {
    double u = uniform();
    double acc = 0.0;
    const int last = static_cast<int>(pmf.size()) - 1;
    for (int i = 0; i < last; ++i) {
      acc += pmf[i];
      if (u < acc) return i;
    }
    return last;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace statecap
