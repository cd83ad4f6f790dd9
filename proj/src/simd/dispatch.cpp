#include <atomic>
#include <cstdlib>
#include <string>

#include "refmmd/error.hpp"
#include "refmmd/simd.hpp"

namespace refmmd::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return avx2::compiled() && __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Level initial_level() noexcept {
  if (const char* env = std::getenv("REFMMD_SIMD")) {
    const std::string_view name(env);
    for (Level l : {Level::Scalar, Level::Avx2, Level::Neon}) {
      if (name == level_name(l) && supported(l)) return l;
    }
  }
  return detected_level();
}

std::atomic<Level>& current() noexcept {
  static std::atomic<Level> level{initial_level()};
  return level;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return "scalar";
    case Level::Avx2: return "avx2";
    case Level::Neon: return "neon";
  }
  return "unknown";
}

bool supported(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2: return cpu_has_avx2();
    case Level::Neon: return neon::compiled();
  }
  return false;
}

Level detected_level() noexcept {
  if (supported(Level::Avx2)) return Level::Avx2;
  if (supported(Level::Neon)) return Level::Neon;
  return Level::Scalar;
}

Level active_level() noexcept { return current().load(std::memory_order_relaxed); }

void set_active_level(Level level) {
  if (!supported(level)) {
    throw Error("simd", "level " + std::string(level_name(level)) + " not supported on this CPU");
  }
  current().store(level, std::memory_order_relaxed);
}

void squared_distances(std::span<const double> points, std::size_t count, std::span<const double> query,
                       std::span<double> out) {
  const std::size_t dim = query.size();
  if (points.size() < count * dim || out.size() < count) {
    throw Error("simd", "squared_distances: buffer too small");
  }
  switch (active_level()) {
    case Level::Avx2: avx2::squared_distances(points.data(), count, query.data(), dim, out.data()); return;
    case Level::Neon: neon::squared_distances(points.data(), count, query.data(), dim, out.data()); return;
    case Level::Scalar: break;
  }
  scalar::squared_distances(points.data(), count, query.data(), dim, out.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("simd", "dot: length mismatch");
  switch (active_level()) {
    case Level::Avx2: return avx2::dot(a.data(), b.data(), a.size());
    case Level::Neon: return neon::dot(a.data(), b.data(), a.size());
    case Level::Scalar: break;
  }
  return scalar::dot(a.data(), b.data(), a.size());
}

}  // namespace refmmd::simd
