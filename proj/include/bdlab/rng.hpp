#pragma once

// Reproducible random streams. Each stream is a xoshiro256++ generator whose
// 256-bit state is derived from (master_seed, stream_id) by SplitMix64
// hashing, so any number of independent streams can be split off a single
// master seed without coordination between workers.

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <limits>

namespace bdlab {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ 1.0 (Blackman and Vigna), a UniformRandomBitGenerator.
class Xoshiro256pp {
public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  explicit Xoshiro256pp(std::uint64_t seed = 0) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      w = splitmix64_mix(x);
    }
  }

  static Xoshiro256pp from_state(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3) {
    Xoshiro256pp g;
    g.s_[0] = s0;
    g.s_[1] = s1;
    g.s_[2] = s2;
    g.s_[3] = s3;
    return g;
  }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

class RngStream {
public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_seed_(master_seed), stream_id_(stream_id), engine_(derive(master_seed, stream_id)) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  std::uint64_t bits() { return engine_(); }

private:
  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    const std::uint64_t a = splitmix64_mix(master + 0x9E3779B97F4A7C15ULL);
    return splitmix64_mix(a ^ splitmix64_mix(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  }

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  Xoshiro256pp engine_;
  boost::random::normal_distribution<double> normal_;
};

inline RngStream seed_rng(std::uint64_t master_seed, std::uint64_t stream_id) {
  return RngStream(master_seed, stream_id);
}

}  // namespace bdlab
