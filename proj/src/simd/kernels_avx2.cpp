#include "refmmd/simd.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define REFMMD_HAVE_AVX2 1
#endif

namespace refmmd::simd::avx2 {

#if defined(REFMMD_HAVE_AVX2)

bool compiled() noexcept { return true; }

// No "fma" in the target list: the per-lane arithmetic must match the scalar
// loop exactly.
__attribute__((target("avx2"))) void squared_distances(const double* points, std::size_t count,
                                                       const double* query, std::size_t dim,
                                                       double* out) noexcept {
  std::size_t j = 0;
  for (; j + 8 <= count; j += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t c = 0; c < dim; ++c) {
      const __m256d q = _mm256_set1_pd(query[c]);
      const double* col = points + c * count + j;
      const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(col), q);
      const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(col + 4), q);
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
    }
    _mm256_storeu_pd(out + j, acc0);
    _mm256_storeu_pd(out + j + 4, acc1);
  }
  for (; j + 4 <= count; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < dim; ++c) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(points + c * count + j), _mm256_set1_pd(query[c]));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    _mm256_storeu_pd(out + j, acc);
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

__attribute__((target("avx2"))) double dot(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8)));
    acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  const __m256d sum = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, sum);
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
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

}  // namespace refmmd::simd::avx2
