#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner loops shared by kernel assembly and the permutation statistics.
//
// Every kernel has a scalar reference implementation and vector variants
// selected at runtime from the CPU feature set. squared_distances performs
// the same operations in the same order per lane as the scalar loop, so its
// output is bit-identical across levels. dot uses split accumulators and
// differs from the scalar sum by rounding only.
namespace refmmd::simd {

enum class Level { Scalar, Avx2, Neon };

std::string_view level_name(Level level) noexcept;

/// Best level supported by this CPU and build.
Level detected_level() noexcept;

bool supported(Level level) noexcept;

/// Level used by the dispatching entry points. Defaults to detected_level(),
/// or to the value of REFMMD_SIMD (scalar|avx2|neon) when set and supported.
Level active_level() noexcept;

/// Throws refmmd::Error when the level is not supported.
void set_active_level(Level level);

/// out[j] = sum_c (points[c * count + j] - query[c])^2 for j < count.
/// `points` is column-major (count x dim); dim = query.size().
void squared_distances(std::span<const double> points, std::size_t count,
                       std::span<const double> query, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

namespace scalar {
void squared_distances(const double* points, std::size_t count, const double* query,
                       std::size_t dim, double* out) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace scalar

namespace avx2 {
bool compiled() noexcept;
void squared_distances(const double* points, std::size_t count, const double* query,
                       std::size_t dim, double* out) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace avx2

namespace neon {
bool compiled() noexcept;
void squared_distances(const double* points, std::size_t count, const double* query,
                       std::size_t dim, double* out) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
}  // namespace neon

}  // namespace refmmd::simd
