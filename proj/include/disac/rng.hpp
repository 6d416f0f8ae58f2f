#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace disac {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3", SC'11).
//
// Seeding: the 64-bit seed is the key (low word k0, high word k1). The
// 128-bit counter is split into a 64-bit stream id (words 2..3) and a
// 64-bit block index (words 0..1). Each block yields four 32-bit words.
// Doubles are built from two consecutive words as (hi << 21 | lo >> 11)
// scaled by 2^-53, so a given (seed, stream) produces the same sequence on
// every platform.
class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  static Block generate(Block counter, std::array<std::uint32_t, 2> key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; both variates of a pair are used.
  double normal();
  // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stream ids used across the library, so that independent consumers of one
// seed never overlap.
namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kPathPhase = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kCpdInit = 4;
inline constexpr std::uint64_t kTest = 99;
}  // namespace streams

// Stateless draw keyed by an arbitrary tuple; used where a value must depend
// only on identity (e.g. a path's random phase) and not on call order.
double hashed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Child seed for sub-task (purpose, index) of `seed`, e.g. per-UE noise.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index);

}  // namespace disac
