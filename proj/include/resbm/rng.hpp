#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace resbm {

/// Counter-based Philox4x32-10 generator (Salmon et al., SC'11), version 1 of the stream layout.
///
/// A stream is identified by (seed, tag, a, b): the seed is the 64-bit key; tag, a and b fill
/// the upper 96 bits of the 128-bit counter; the low 32 bits count blocks within the stream.
/// Each block yields four 32-bit words. Streams never overlap as long as fewer than 2^32 blocks
/// are drawn from one stream.
///
/// Stream tags used by the library are listed in `StreamTag`; `a` and `b` are usually
/// (member, node) or (replicate, restart) indices.
class Philox {
 public:
  using result_type = std::uint32_t;
  static constexpr std::uint32_t kVersion = 1;

  Philox(std::uint64_t seed, std::uint32_t tag, std::uint32_t a = 0, std::uint32_t b = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, b, a, tag} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()() {
    if (idx_ == 4) refill();
    return out_[idx_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return (hi << 32) | lo;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform double in (0, 1).
  double uniform_open() {
    double u;
    do { u = uniform(); } while (u == 0.0);
    return u;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n) by rejection, unbiased.
  std::uint32_t below(std::uint32_t n);
  /// Standard normal via Box-Muller (one value per call, no caching, so the stream position is
  /// a pure function of the call count).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  /// The raw Philox4x32-10 bijection of one counter block under a key.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                            std::array<std::uint32_t, 4> ctr);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> out_{};
  int idx_ = 4;
};

/// Stream tags. Values are part of the reproducibility contract; never renumber.
enum class StreamTag : std::uint32_t {
  zbar = 1,
  member_assignment = 2,  // (member, node)
  blocks = 3,
  edges = 4,              // (member)
  kmeans = 5,             // (call-site salt, restart)
  varem_restart = 6,      // (restart)
  osntf_restart = 7,      // (restart, member)
  resample = 8,           // (resample, attempt)
  spectral_member = 9,    // (member)
  experiment = 10,        // (replicate, purpose)
  subject = 11,           // (subject)
  split = 12,             // (repetition)
};

inline Philox make_stream(std::uint64_t seed, StreamTag tag, std::uint32_t a = 0,
                          std::uint32_t b = 0) {
  return Philox(seed, static_cast<std::uint32_t>(tag), a, b);
}

/// Deterministic 64-bit mix (splitmix64 finalizer) for deriving child seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace resbm
