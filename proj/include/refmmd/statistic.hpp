#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refmmd/datagen.hpp"
#include "refmmd/kernel.hpp"

namespace refmmd {

/// Reference indices R with simplex weights a.
struct ReferenceSet {
  std::vector<Eigen::Index> indices;
  Eigen::VectorXd weights;

  static ReferenceSet uniform(std::vector<Eigen::Index> indices);

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(indices.size()); }
  /// Distinct in-range indices, weights in [0,1] summing to 1 within 1e-9.
  void validate(Eigen::Index pool_size) const;
  /// Length-pool_size vector holding a on R and 0 elsewhere.
  Eigen::VectorXd dense(Eigen::Index pool_size) const;
};

struct MmdValue {
  double value_sq = 0.0;  // raw, may be slightly negative
  double tau = 0.0;       // sqrt(max(value_sq, 0))
};

/// Biased MMD^2 from the block sums of the random-walk kernel K.
MmdValue mmd_full(const KernelStack& stack, const LabeledPool& pool);

/// Signed label weights: sqrt(n+m)/n on X, -sqrt(n+m)/m on Y.
Eigen::VectorXd label_weights(Eigen::Index n, Eigen::Index m);

/// f(z) = (sqrt(n+m)/n sum_x k(x,z) - sqrt(n+m)/m sum_y k(y,z))^2; its mean is MMD^2.
Eigen::VectorXd witness(const KernelStack& stack, const LabeledPool& pool);
Eigen::VectorXd witness(const Eigen::MatrixXd& base, Eigen::Index n, Eigen::Index m);

/// Weighted: sum_r a(r) g(r)^2. Unweighted: a(r) = 1/|R|.
double mmd_reference(const ReferenceColumns& cols, const LabeledPool& pool, const ReferenceSet& refs, bool weighted);

/// Pool labels: 0 marks the X group, 1 the Y group.
using Labels = std::vector<std::uint8_t>;
Labels identity_labels(Eigen::Index n, Eigen::Index m);

/// Full MMD^2 for an arbitrary relabelling, (1/N) |k w|^2 with w the signed
/// label weights. Uses the SIMD dot kernel.
double mmd_full_relabeled(const Eigen::MatrixXd& base, std::span<const std::uint8_t> labels);

/// sum_r a(r) (k_R^T w)_r^2 for an arbitrary relabelling.
double mmd_reference_relabeled(const Eigen::MatrixXd& k_ref, const Eigen::VectorXd& weights,
                               std::span<const std::uint8_t> labels);

enum class StatisticKind { Full, ReferenceUniform, ReferenceWeighted };
std::string to_string(StatisticKind kind);
StatisticKind statistic_kind_from_string(const std::string& name);

/// {statistic_kind, value_sq, tau, n, m, r_count, seed}
nlohmann::json statistic_record(StatisticKind kind, double value_sq, Eigen::Index n, Eigen::Index m,
                                Eigen::Index r_count, std::uint64_t seed);

}  // namespace refmmd
