#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refmmd/datagen.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/spectral.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {

/// Error bound for a weighted reference statistic and the three terms of its
/// triangle split:
///   t1 = |mean(Pi f) - sum_w a_w (Pi f)(w)|
///   t2 = |mean((I - Pi) f)|
///   t3 = |sum_w a_w ((I - Pi) f)(w)|
/// with Pi the projection onto eigenvectors of P with |eigenvalue| > lambda.
struct BoundReport {
  double tau = 0.0;
  double mmd_sq = 0.0;
  double mmd_a_sq = 0.0;
  double lambda = 0.0;
  Eigen::Index kept_count = 0;
  double eps_paper_raw = 0.0;
  /// eps_paper_raw clamped to [0,1].
  double eps_paper = 0.0;
  double eps_relative = 0.0;
  /// |P a|^2 - 1/(n+m) before the square root.
  double quadrature_argument = 0.0;
  double quadrature_term = 0.0;
  double a_norm = 0.0;
  double residual_term = 0.0;
  double total_bound = 0.0;
  double actual_deviation = 0.0;
  std::array<double, 3> proof_terms{};
  /// (|Pi f| / lambda) * quadrature_term; reported, never asserted.
  double projection_step_term = 0.0;

  bool covers() const noexcept { return total_bound >= actual_deviation; }
};

nlohmann::json to_json(const BoundReport& r);

/// ((1/d_max^2) |(K + d_max I - D) a|^2 - 1/(n+m)), evaluated as |P a|^2 - 1/(n+m).
double quadrature_argument(const KernelStack& stack, const ReferenceSet& refs);

BoundReport evaluate_bound(const KernelStack& stack, const LabeledPool& pool, const ReferenceSet& refs,
                           const SpectralBasis& basis, double lambda);

/// Evaluates the bound at lambda = each decile of {|eigenvalue|} and returns
/// the report with the smallest total bound.
BoundReport best_bound_over_deciles(const KernelStack& stack, const LabeledPool& pool, const ReferenceSet& refs,
                                    const SpectralBasis& basis);

/// lambda values at the deciles 0.1 .. 0.9 of the sorted |eigenvalues|.
std::vector<double> decile_lambdas(const SpectralBasis& basis);

struct BoundCurveRow {
  Eigen::Index r_size = 0;
  int draw = 0;
  double quadrature_term = 0.0;
  double a_norm = 0.0;
  double deviation = 0.0;
  double total_bound = 0.0;
};

struct BoundCurveSummary {
  Eigen::Index r_size = 0;
  double mean_quadrature_term = 0.0;
  double mean_a_norm = 0.0;
  double mean_deviation = 0.0;
  double coverage_fraction = 0.0;
};

struct BoundCurve {
  std::vector<BoundCurveRow> rows;
  std::vector<BoundCurveSummary> summary;
};

/// Uniform-weight random reference draws of each size. Draw d of size index
/// s uses the stream (seed, s, d).
BoundCurve bound_vs_size_curve(const KernelStack& stack, const LabeledPool& pool, const std::vector<Eigen::Index>& sizes,
                               int draws_per_size, std::uint64_t seed, const SpectralBasis& basis, double lambda,
                               unsigned threads = 1);

/// r_size, draw, quadrature_term, a_norm, deviation, total_bound
std::string bound_curve_csv(const BoundCurve& curve);

}  // namespace refmmd
