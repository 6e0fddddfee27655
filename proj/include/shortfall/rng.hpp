#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace shortfall {

// Counter-based splittable stream. The i-th output is a stateless mix of
// (seed, stream_id, i), so identical (seed, stream_id) replays the identical
// sequence bit for bit, and distinct stream ids decorrelate without
// coordination -- replication r simply owns stream r. Jumping ahead is a
// counter bump.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(derive_key(seed, stream_id)) {}

  std::uint64_t next_u64() { return mix64(key_ + ++counter_ * kGolden); }

  // Uniform on (0,1]: the +1 keeps 0 out so log() below is always finite.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // One standard normal; always consumes exactly 2 words (cos branch only).
  double normal() {
    const auto [r, phi] = box_muller_polar();
    return r * std::cos(phi);
  }

  // Both Box-Muller branches from one polar draw: two normals for the same
  // 2 words a single normal costs. Used for common-random-number pairs.
  std::pair<double, double> normal_pair() {
    const auto [r, phi] = box_muller_polar();
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  std::uint64_t counter() const { return counter_; }
  void skip(std::uint64_t words) { counter_ += words; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kStreamSalt = 0x8BADF00D5DEECE66ull;

  // splitmix64 finalizer
  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed + kGolden * mix64(stream + kStreamSalt));
  }

  std::pair<double, double> box_muller_polar() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * 3.14159265358979323846 * u2;
    return {r, phi};
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace shortfall
