#pragma once

#include <cstdint>

namespace qtransport {

/// SplitMix64 finalizer. Used to derive stream keys from (seed, index).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Domain tags keep streams for different purposes of the same index apart.
enum class StreamPurpose : std::uint64_t {
  kConformation = 0x636f6e66ULL,
  kReservoir = 0x72657376ULL,
  kRestart = 0x72737472ULL,
  kPerturbation = 0x70657274ULL,
};

/// Random stream keyed by (campaign seed, sample index, purpose).
///
/// The state is a pure function of the key, so sample i draws the same
/// numbers no matter which worker runs it or in which order. The generator
/// is xoshiro256** seeded through SplitMix64; all conversions to real
/// numbers are done here rather than through <random> distributions, whose
/// output is implementation-defined.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index,
               StreamPurpose purpose = StreamPurpose::kConformation) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept;

  /// Standard normal (Box-Muller, second variate cached).
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Deterministic 64-bit key for a (seed, index, purpose) triple.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index,
                         StreamPurpose purpose) noexcept;

}  // namespace qtransport
