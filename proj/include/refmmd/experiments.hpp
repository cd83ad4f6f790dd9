#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "refmmd/spectral.hpp"

namespace refmmd {

/// Witness energy outside the leading eigenvectors of P, for pairs of
/// shifted 2-D Gaussians.
struct SpectraConfig {
  std::vector<double> shifts = {0.0, 0.5, 1.0};
  std::vector<Eigen::Index> kept_counts = {1, 2, 5, 10, 20, 40, 80, 160};
  int trials = 20;
  int n = 200;
  int m = 200;
  int dim = 2;
  double bandwidth = 0.5;
  /// Eigenbasis the witness is projected on; walk-kernel is a diagnostic.
  SpectralSource source = SpectralSource::LazyWalk;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct SpectraCurve {
  double shift = 0.0;
  /// Trial-averaged reports; tau is the mean tau.
  std::vector<ProjectionReport> mean;
  /// Per-trial reports, trials x kept_counts.
  std::vector<std::vector<ProjectionReport>> trials;
};

/// Trial t of shift index s uses data seed derive_seed(seed, s, t).
std::vector<SpectraCurve> run_energy_experiment(const SpectraConfig& cfg);

}  // namespace refmmd
