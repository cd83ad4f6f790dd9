#include "refmmd/simd.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace refmmd::simd::neon {

#if defined(__aarch64__)

bool compiled() noexcept { return true; }

// vmlaq would fuse; keep separate mul and add to match the scalar rounding.
void squared_distances(const double* points, std::size_t count, const double* query, std::size_t dim,
                       double* out) noexcept {
  std::size_t j = 0;
  for (; j + 2 <= count; j += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t c = 0; c < dim; ++c) {
      const float64x2_t d = vsubq_f64(vld1q_f64(points + c * count + j), vdupq_n_f64(query[c]));
      acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    vst1q_f64(out + j, acc);
  }
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = points[c * count + j] - query[c];
      acc = acc + d * d;
    }
    out[j] = acc;
  }
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

#else

bool compiled() noexcept { return false; }
void squared_distances(const double* points, std::size_t count, const double* query, std::size_t dim,
                       double* out) noexcept {
  scalar::squared_distances(points, count, query, dim, out);
}
double dot(const double* a, const double* b, std::size_t n) noexcept { return scalar::dot(a, b, n); }

#endif

}  // namespace refmmd::simd::neon
