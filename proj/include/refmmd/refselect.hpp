#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refmmd/datagen.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {

/// Uniform sample of `size` distinct pool indices, sorted ascending.
/// Deterministic in (seed, trial).
std::vector<Eigen::Index> select_random(Eigen::Index pool_size, Eigen::Index size, std::uint64_t seed,
                                        std::uint32_t trial = 0);

struct SelectConfig {
  Eigen::Index initial_size = 25;
  /// A point is covered when sum_r k(x, r) >= coverage_threshold.
  double coverage_threshold = 0.5;
  int max_additions = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

SelectConfig select_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectConfig& cfg);

struct CoverageSelection {
  std::vector<Eigen::Index> indices;
  ReferenceColumns columns;
  DegreeEstimate degrees;
  /// sum_r k(x, r) for every pooled point.
  Eigen::VectorXd coverage;
  int additions = 0;
  /// max_additions reached with points still below the threshold.
  bool saturated = false;
};

/// Random start, then repeatedly adds the least-covered point outside R
/// while its coverage is below the threshold.
CoverageSelection select_with_coverage(const LabeledPool& pool, const KernelSpec& spec, const SelectConfig& cfg);

/// Columns of the lazy walk P at the reference indices, plus the pool size.
struct DiffusionColumns {
  Eigen::MatrixXd columns;
  Eigen::Index pool_size = 0;
};

/// Exact columns from an assembled stack.
DiffusionColumns lazy_columns(const KernelStack& stack, std::span<const Eigen::Index> refs);

/// Columns of P from k and k_R: K_R = k k_R and D = k (k 1), both exact.
DiffusionColumns lazy_columns_from_base(const Eigen::MatrixXd& base, const ReferenceColumns& cols);

/// Reference-only approximation: K_R ~ ((n+m)/|R|) k_R k_R[R,:] and
/// D(z) ~ ((n+m)/|R|) sum_r K_R(z, r). Exact when R is the whole pool.
DiffusionColumns lazy_columns_from_reference(const ReferenceColumns& cols);

struct OptimizeConfig {
  double lambda = 0.9;
  double epsilon = 0.1;
  int max_iters = 2000;
  double step_init = 1.0;
  double tolerance = 1e-13;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ObjectiveValue {
  double value = 0.0;
  /// sqrt(max(|P a|^2 - 1/(n+m), 1e-14))
  double quadrature_term = 0.0;
  double a_norm = 0.0;
};

inline constexpr double kQuadratureFloor = 1e-14;

/// J(a) = ((1-eps)/lambda) quadrature_term + (1/sqrt(n+m) + |a|_2) eps
ObjectiveValue weight_objective(const DiffusionColumns& diffusion, const Eigen::VectorXd& a, double lambda,
                                double epsilon);
Eigen::VectorXd weight_objective_gradient(const DiffusionColumns& diffusion, const Eigen::VectorXd& a, double lambda,
                                          double epsilon);

/// Euclidean projection onto {a >= 0, sum a = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double quadrature_term = 0.0;
  double a_norm2 = 0.0;
  double step = 0.0;
};

struct OptimizeResult {
  ReferenceSet refs;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::vector<TraceRow> trace;
  bool converged = false;
};

/// Projected gradient descent from uniform weights with backtracking (step
/// halved until J decreases, doubled after each accepted step). Stops when
/// the decrease falls below tolerance, no decreasing step exists, or
/// max_iters is reached.
OptimizeResult optimize_weights(const DiffusionColumns& diffusion, std::vector<Eigen::Index> refs,
                                const OptimizeConfig& cfg);

/// iter, J, quad_term, a_norm2, step_size
std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace refmmd
