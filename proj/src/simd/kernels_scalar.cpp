#include "refmmd/simd.hpp"

namespace refmmd::simd::scalar {

void squared_distances(const double* points, std::size_t count, const double* query,
                       std::size_t dim, double* out) noexcept {
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = points[c * count + j] - query[c];
      acc = acc + d * d;
    }
    out[j] = acc;
  }
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace refmmd::simd::scalar
