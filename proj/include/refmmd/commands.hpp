#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refmmd/datagen.hpp"
#include "refmmd/experiments.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/permtest.hpp"
#include "refmmd/refselect.hpp"

namespace refmmd {

enum class Mode { Exact, ReferenceOnly };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

/// Weight-optimizer settings as seen by the CLI. When lambda/epsilon are not
/// given they are derived from the spectrum of P (exact mode only).
struct OptimizeSettings {
  std::optional<double> lambda;
  std::optional<double> epsilon;
  Eigen::Index kept_count = 40;
  std::string epsilon_source = "relative";
  int max_iters = 2000;
  double step_init = 1.0;
  double tolerance = 1e-13;
};

struct InputFiles {
  std::filesystem::path x;
  std::filesystem::path y;
  bool header = false;
};

struct PowerSettings {
  std::vector<double> deltas = {0.0, 0.05, 0.1, 0.15, 0.2};
  int trials = 100;
  std::vector<StatisticKind> variants = {StatisticKind::Full, StatisticKind::ReferenceUniform,
                                         StatisticKind::ReferenceWeighted};
  Eigen::Index ref_size = 25;
  std::optional<KernelSpec> full_kernel;
};

struct BoundCurveSettings {
  std::vector<Eigen::Index> sizes = {10, 25, 50, 100};
  int draws = 50;
};

struct RunConfig {
  std::string command;
  GeneratorConfig generator;
  KernelSpec kernel;
  SelectConfig select;
  OptimizeSettings optimize;
  PermTestConfig perm;
  InputFiles inputs;
  PowerSettings power;
  SpectraConfig spectra;
  BoundCurveSettings bound_curve;
  std::filesystem::path output_dir = ".";
  std::vector<std::string> formats = {"csv", "json"};
  /// When set, fans out to every sub-seed.
  std::optional<std::uint64_t> seed;
  Mode mode = Mode::Exact;
  unsigned threads = 1;

  bool wants(const std::string& format) const;
  /// Applies the master seed (if any) to every sub-config.
  void apply_master_seed();
};

/// Strict: unknown keys are errors.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Named starting configurations: fig1, fig2, fig3, fig4.
RunConfig preset_config(const std::string& name);

/// Files written by a command, in write order.
using Outputs = std::vector<std::filesystem::path>;

/// X.csv, Y.csv, meta.json
Outputs cmd_generate(const RunConfig& cfg);
/// report.json (statistics, permutation tests, selection, optimizer, bound)
/// plus weights.csv and trace.csv.
Outputs cmd_test(const RunConfig& cfg);
/// power.csv, power.json
Outputs cmd_power(const RunConfig& cfg);
/// spectra_<i>.csv per shift, spectra.json
Outputs cmd_spectra(const RunConfig& cfg);
/// bound_curve.csv, bound_curve_summary.csv, bound_curve.json
Outputs cmd_bound_curve(const RunConfig& cfg);

Outputs run_command(const RunConfig& cfg);

/// The JSON report cmd_test writes, for callers that want it in memory.
nlohmann::json test_report(const RunConfig& cfg);

}  // namespace refmmd
