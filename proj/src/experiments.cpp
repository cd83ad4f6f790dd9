#include "refmmd/experiments.hpp"

#include "refmmd/datagen.hpp"
#include "refmmd/error.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/parallel.hpp"
#include "refmmd/rng.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {

std::vector<SpectraCurve> run_energy_experiment(const SpectraConfig& cfg) {
  if (cfg.trials < 1) throw Error("spectral", "trials must be >= 1");
  if (cfg.shifts.empty() || cfg.kept_counts.empty()) throw Error("spectral", "shift and kept-count grids must be non-empty");
  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<SpectraCurve> curves(cfg.shifts.size());
  for (std::size_t s = 0; s < curves.size(); ++s) {
    curves[s].shift = cfg.shifts[s];
    curves[s].trials.resize(trials);
  }
  KernelSpec spec;
  spec.bandwidth = cfg.bandwidth;
  parallel_for(curves.size() * trials, cfg.threads, [&](std::size_t slot) {
    const std::size_t s = slot / trials;
    const std::size_t t = slot % trials;
    const LabeledPool pool = generate_shifted_gaussians(
        cfg.n, cfg.m, cfg.dim, cfg.shifts[s],
        derive_seed(cfg.seed, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t)));
    const KernelStack stack = build_stack(build_base_kernel(pool, spec));
    const SpectralBasis basis = decompose(stack, cfg.source);
    const MmdValue full = mmd_full(stack, pool);
    curves[s].trials[t] = energy_curve(basis, witness(stack, pool), full.tau, cfg.kept_counts);
  });
  for (auto& curve : curves) {
    curve.mean.assign(cfg.kept_counts.size(), ProjectionReport{});
    for (const auto& trial : curve.trials) {
      for (std::size_t g = 0; g < trial.size(); ++g) {
        auto& acc = curve.mean[g];
        acc.kept_count = trial[g].kept_count;
        acc.lambda += trial[g].lambda;
        acc.projected_norm += trial[g].projected_norm;
        acc.residual_norm += trial[g].residual_norm;
        acc.eps_paper += trial[g].eps_paper;
        acc.eps_relative += trial[g].eps_relative;
        acc.tau += trial[g].tau;
        acc.tau_eps += trial[g].tau_eps;
      }
    }
    const double inv = 1.0 / static_cast<double>(trials);
    for (auto& acc : curve.mean) {
      acc.lambda *= inv;
      acc.projected_norm *= inv;
      acc.residual_norm *= inv;
      acc.eps_paper *= inv;
      acc.eps_relative *= inv;
      acc.tau *= inv;
      acc.tau_eps *= inv;
    }
  }
  return curves;
}

}  // namespace refmmd
