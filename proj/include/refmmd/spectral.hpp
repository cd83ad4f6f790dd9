#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "refmmd/datagen.hpp"
#include "refmmd/kernel.hpp"

namespace refmmd {

enum class SpectralSource { LazyWalk, WalkKernel };

std::string to_string(SpectralSource source);
SpectralSource spectral_source_from_string(const std::string& name);

/// Eigenpairs sorted by descending |eigenvalue| (stable for ties). Each
/// eigenvector's largest-magnitude entry is positive, lowest index on ties.
struct SpectralBasis {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  SpectralSource source = SpectralSource::LazyWalk;

  Eigen::Index size() const noexcept { return values.size(); }
};

SpectralBasis decompose(const KernelStack& stack, SpectralSource source);
SpectralBasis decompose_matrix(const Eigen::MatrixXd& symmetric, SpectralSource source);

struct ProjectionReport {
  double lambda = 0.0;
  Eigen::Index kept_count = 0;
  double projected_norm = 0.0;
  double residual_norm = 0.0;
  /// 1 - projected_norm / tau, unclamped.
  double eps_paper = 0.0;
  /// residual_norm / |f|.
  double eps_relative = 0.0;
  double tau = 0.0;
  /// tau * eps_relative: witness energy left outside the kept eigenspace,
  /// on the MMD scale.
  double tau_eps = 0.0;
  /// kept_count == 0.
  bool empty_projection = false;
};

/// Projection of f onto the eigenvectors with |eigenvalue| > lambda.
ProjectionReport project_witness(const SpectralBasis& basis, const Eigen::VectorXd& f, double lambda, double tau);

/// Projection onto the first kept_count eigenvectors; lambda is reported as
/// |eigenvalue[kept_count]| (0 when every vector is kept).
ProjectionReport project_top(const SpectralBasis& basis, const Eigen::VectorXd& f, Eigen::Index kept_count, double tau);

/// Split f into its projection on the first kept_count eigenvectors and the residual.
void split_projection(const SpectralBasis& basis, const Eigen::VectorXd& f, Eigen::Index kept_count,
                      Eigen::VectorXd& projected, Eigen::VectorXd& residual);

/// Number of eigenvalues with |value| > lambda.
Eigen::Index kept_for_threshold(const SpectralBasis& basis, double lambda);

std::vector<ProjectionReport> energy_curve(const SpectralBasis& basis, const Eigen::VectorXd& f, double tau,
                                           const std::vector<Eigen::Index>& kept_counts);

/// kept_count, lambda, eps_paper, eps_relative, tau_eps
std::string energy_curve_csv(const std::vector<ProjectionReport>& curve);

struct PairEnergy {
  Eigen::Index k = 0;
  Eigen::Index k2 = 0;
  double fraction = 0.0;
  bool degenerate = false;
};

struct TripleProductDiagnostic {
  /// c_k = sigma_k^{1/2} (sqrt(n+m)/n sum_x Psi_xk - sqrt(n+m)/m sum_y Psi_yk)
  Eigen::VectorXd c;
  /// Same label contrast over the lazy-walk eigenvectors, without the scale.
  Eigen::VectorXd diff;
  std::vector<PairEnergy> pairs;
};

/// basis_walk: eigenpairs of K; basis_lazy: eigenpairs of P. Pairs (k, k')
/// with k <= k' are visited in order of k + k', then k.
TripleProductDiagnostic triple_product_diagnostic(const SpectralBasis& basis_walk, const SpectralBasis& basis_lazy,
                                                  const LabeledPool& pool, double lambda, Eigen::Index pair_budget);

}  // namespace refmmd
