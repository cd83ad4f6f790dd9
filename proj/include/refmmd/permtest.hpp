#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refmmd/datagen.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {

struct PermTestConfig {
  int num_permutations = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  StatisticKind statistic_kind = StatisticKind::Full;
  unsigned threads = 1;

  void validate() const;
};

PermTestConfig perm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PermTestConfig& cfg);

/// Statistic of an arbitrary relabelling of the pooled points (0 = X, 1 = Y).
/// Must be safe to call concurrently.
using StatisticEvaluator = std::function<double(std::span<const std::uint8_t>)>;

StatisticEvaluator full_evaluator(const Eigen::MatrixXd& base);
/// R and a are fixed; only the labels move.
StatisticEvaluator reference_evaluator(const ReferenceColumns& cols, const Eigen::VectorXd& weights);

/// Label assignment used by permutation `index`: a uniform shuffle of the
/// observed labels drawn from the stream (seed, index).
Labels permutation_labels(Eigen::Index n, Eigen::Index m, std::uint64_t seed, std::uint32_t index);

struct PermTestResult {
  double p_value = 1.0;
  bool reject = false;
  double observed = 0.0;
  std::vector<double> permuted;
};

/// p = (1 + #{permuted >= observed}) / (1 + num_permutations); reject when p <= alpha.
PermTestResult permutation_test(Eigen::Index n, Eigen::Index m, const StatisticEvaluator& evaluator,
                                const PermTestConfig& cfg);

/// How R and a are chosen for the reference statistics in power experiments.
struct ReferencePlan {
  Eigen::Index ref_size = 25;
  /// Eigenvectors of P kept when deriving lambda and eps for the optimizer.
  Eigen::Index kept_count = 40;
  /// "paper" or "relative"; which eps reading feeds the optimizer.
  std::string epsilon_source = "relative";
  int max_iters = 2000;
  double tolerance = 1e-13;
};

struct PowerConfig {
  GeneratorConfig generator;
  KernelSpec kernel;
  /// Kernel for the full statistic when it should differ from `kernel`
  /// (isotropic full MMD against anisotropic reference statistics).
  std::optional<KernelSpec> full_kernel;
  std::vector<double> deltas;
  int trials = 100;
  PermTestConfig perm;
  std::vector<StatisticKind> variants = {StatisticKind::Full, StatisticKind::ReferenceUniform,
                                         StatisticKind::ReferenceWeighted};
  ReferencePlan plan;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct TrialRecord {
  double delta = 0.0;
  int trial = 0;
  /// Indexed like PowerConfig::variants.
  std::vector<double> statistic;
  std::vector<double> p_value;
  std::vector<bool> reject;
  double full_value_sq = 0.0;
};

struct PowerCurve {
  StatisticKind variant = StatisticKind::Full;
  std::vector<double> deltas;
  std::vector<int> rejections;
  int trials = 0;

  double power(std::size_t i) const { return static_cast<double>(rejections[i]) / trials; }
};

struct PowerResult {
  std::vector<PowerCurve> curves;
  std::vector<TrialRecord> records;
};

/// Trial t draws its data, references and permutations from seeds derived
/// from (seed, t) only, so every delta reuses the same random numbers.
/// Results do not depend on the thread count.
PowerResult power_curve(const PowerConfig& cfg);

/// delta, variant, trials, rejections, power
std::string power_curve_csv(const std::vector<PowerCurve>& curves);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace refmmd
