#pragma once

#include <cstdint>
#include <vector>

#include "moco/errors.hpp"

namespace moco {

// splitmix64 step; used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives a child stream id from a parent id and a tag. Pure function of its
// arguments, so derived streams are replayable from the run seed alone.
inline std::uint64_t derive_stream(std::uint64_t parent, std::uint64_t tag) {
  std::uint64_t s = parent ^ (0xD1B54A32D192ED03ULL * (tag + 1));
  return splitmix64(s);
}

// Deterministic random stream: xoshiro256** seeded via splitmix64 from
// (seed, stream_id). Identical (seed, stream_id) pairs produce identical
// sequences on every platform; everything random in the project (phantoms,
// coils, motion, noise, weight init, batching, trial restarts) flows through
// one of these, keyed by a documented stream id.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {
    std::uint64_t sm = seed ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return next_u64() % n;
  }

  // Child stream for an independent purpose (noise vs. motion vs. init...).
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, derive_stream(stream_, tag));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_[4];
};

// n i.i.d. N(0, sigma^2) samples via the Box-Muller transform (pairs drawn
// from two uniforms; the second member of each pair is used for odd indices,
// so a stream consumed only through this function is call-pattern
// independent).
std::vector<double> gaussian_sample(RngStream& rng, std::size_t n, double sigma);

// Single N(0, sigma^2) pair, the primitive behind gaussian_sample.
void gaussian_pair(RngStream& rng, double sigma, double& z0, double& z1);

// Well-known stream tags, so independent draws never alias.
namespace stream {
inline constexpr std::uint64_t kPhantom = 1;
inline constexpr std::uint64_t kCoils = 2;
inline constexpr std::uint64_t kMotion = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kWeightInit = 5;
inline constexpr std::uint64_t kBatch = 6;
inline constexpr std::uint64_t kTrial = 7;
inline constexpr std::uint64_t kRecordBase = 1000;
}  // namespace stream

}  // namespace moco
