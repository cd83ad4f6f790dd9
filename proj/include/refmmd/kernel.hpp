#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "refmmd/datagen.hpp"

namespace refmmd {

enum class KernelKind { Gaussian, LocalCovariance };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double bandwidth = 1.0;
  /// Neighbourhood size for local covariances; the point itself counts.
  int knn = 10;
  double regularizer = 1e-3;

  void validate(Eigen::Index dim) const;
};

KernelSpec kernel_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KernelSpec& spec);

/// Base kernel k over the pooled points.
///   gaussian:         k(x,z) = exp(-|x-z|^2 / sigma^2)
///   local-covariance: k(x,z) = (h(x,z) + h(z,x)) / 2 with
///                     h(x,z) = exp(-(x-z)^T C_z^{-1} (x-z) / sigma^2)
Eigen::MatrixXd build_base_kernel(const LabeledPool& pool, const KernelSpec& spec);

/// Per-point precision matrices (C_z + reg I)^{-1} from the knn nearest
/// neighbours of each point (including the point).
std::vector<Eigen::MatrixXd> local_precisions(const Eigen::MatrixXd& points, int knn, double regularizer);

/// Local-covariance kernel with caller-supplied precision matrices.
Eigen::MatrixXd local_covariance_kernel(const Eigen::MatrixXd& points,
                                        const std::vector<Eigen::MatrixXd>& precisions, double bandwidth);

/// k, the random-walk kernel K = k k, degrees D, d_max and the lazy walk
/// P = (K - diag(D) + d_max I) / d_max. Immutable once built.
struct KernelStack {
  Eigen::MatrixXd base;
  Eigen::MatrixXd walk;
  Eigen::VectorXd degrees;
  double d_max = 0.0;
  Eigen::MatrixXd lazy;

  Eigen::Index size() const noexcept { return base.rows(); }
};

/// Throws when k is not square, has entries outside [0,1], or is asymmetric
/// beyond 1e-10.
KernelStack build_stack(const Eigen::MatrixXd& base);

/// Columns of the base kernel at the reference indices.
struct ReferenceColumns {
  Eigen::MatrixXd values;  // (n+m) x |R|
  std::vector<Eigen::Index> indices;
};

/// Bit-identical to the matching columns of build_base_kernel.
ReferenceColumns reference_columns(const LabeledPool& pool, const KernelSpec& spec,
                                   std::span<const Eigen::Index> refs);

/// Appends the column for a new reference index.
void append_reference_column(ReferenceColumns& cols, const LabeledPool& pool, const KernelSpec& spec,
                             Eigen::Index index);

struct DegreeEstimate {
  /// ((n+m)/|R|) sum_r k_R(z, r): estimate of sum_z' k(z, z').
  Eigen::VectorXd base;
  /// base(z) * mean(base): proxy for the walk-kernel degree sum_z' K(z, z').
  Eigen::VectorXd walk_proxy;
};

DegreeEstimate estimate_degrees(const ReferenceColumns& cols, Eigen::Index n_plus_m);

/// 17 significant digits, row-major.
void export_kernel_csv(const std::filesystem::path& path, const Eigen::MatrixXd& k);

}  // namespace refmmd
