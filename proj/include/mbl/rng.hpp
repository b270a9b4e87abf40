#pragma once

#include <cstdint>
#include <string_view>

namespace mbl::rng {

// SplitMix64 step; also serves as the mixing hash for seed derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t x) { return splitmix64_next(x); }

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sub-seed for one coefficient family of one sample: a fixed splittable hash
// of (master seed, sample index, family tag). Draws therefore depend only on
// these three values, never on worker scheduling, which makes ensemble output
// independent of the thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t sample_index,
                                 std::string_view family) {
  std::uint64_t state = master;
  state = mix(state ^ mix(sample_index));
  state = mix(state ^ fnv1a64(family));
  return state;
}

// Deterministic stream of uniform bits and doubles in [0, 1).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace mbl::rng
