#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace refmmd {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit key is the master seed; the 128-bit counter is split into a
/// 64-bit block index and two 32-bit words holding (trial, stream). Every
/// (seed, trial, stream) triple is an independent stream, so work can be
/// split across threads in any way without changing results.
class RandomStream {
 public:
  using result_type = std::uint32_t;

  RandomStream(std::uint64_t seed, std::uint32_t trial, std::uint32_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Derives a child seed from (seed, a, b) without touching any shared state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t a, std::uint32_t b) noexcept;

/// Stream identifiers used across the library.
namespace streams {
inline constexpr std::uint32_t kSampleX = 1;
inline constexpr std::uint32_t kSampleY = 2;
inline constexpr std::uint32_t kReferences = 3;
inline constexpr std::uint32_t kPermutations = 4;
inline constexpr std::uint32_t kTrialData = 5;
inline constexpr std::uint32_t kTrialReferences = 6;
inline constexpr std::uint32_t kTrialPermutations = 7;
}  // namespace streams

}  // namespace refmmd
