#include "refmmd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("spectral", message); }

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= peak * (1.0 - 1e-12)) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

std::string to_string(SpectralSource source) {
  return source == SpectralSource::LazyWalk ? "lazy-walk" : "walk-kernel";
}

SpectralSource spectral_source_from_string(const std::string& name) {
  if (name == "lazy-walk") return SpectralSource::LazyWalk;
  if (name == "walk-kernel") return SpectralSource::WalkKernel;
  fail("unknown spectral source '" + name + "' (expected lazy-walk|walk-kernel)");
}

SpectralBasis decompose_matrix(const Eigen::MatrixXd& symmetric, SpectralSource source) {
  if (symmetric.rows() != symmetric.cols() || symmetric.rows() == 0) fail("matrix must be square and non-empty");
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-10) fail("matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric);
  if (solver.info() != Eigen::Success) fail("eigensolver did not converge");

  const Eigen::Index count = symmetric.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  // Eigen returns ascending values; walk from the top so equal magnitudes
  // keep the larger signed value first.
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::reverse(order.begin(), order.end());
  const auto& vals = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(vals[a]) > std::abs(vals[b]); });

  SpectralBasis basis;
  basis.source = source;
  basis.values.resize(count);
  basis.vectors.resize(count, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    basis.values[j] = vals[src];
    basis.vectors.col(j) = solver.eigenvectors().col(src);
    fix_sign(basis.vectors.col(j));
  }
  return basis;
}

SpectralBasis decompose(const KernelStack& stack, SpectralSource source) {
  return decompose_matrix(source == SpectralSource::LazyWalk ? stack.lazy : stack.walk, source);
}

Eigen::Index kept_for_threshold(const SpectralBasis& basis, double lambda) {
  Eigen::Index kept = 0;
  while (kept < basis.size() && std::abs(basis.values[kept]) > lambda) ++kept;
  return kept;
}

void split_projection(const SpectralBasis& basis, const Eigen::VectorXd& f, Eigen::Index kept_count,
                      Eigen::VectorXd& projected, Eigen::VectorXd& residual) {
  if (f.size() != basis.vectors.rows()) fail("witness length does not match the basis");
  if (kept_count < 0 || kept_count > basis.size()) fail("kept count out of range");
  const auto phi = basis.vectors.leftCols(kept_count);
  const Eigen::VectorXd coeffs = phi.transpose() * f;
  projected = phi * coeffs;
  residual = f - projected;
}

ProjectionReport project_top(const SpectralBasis& basis, const Eigen::VectorXd& f, Eigen::Index kept_count, double tau) {
  Eigen::VectorXd projected, residual;
  split_projection(basis, f, kept_count, projected, residual);
  ProjectionReport r;
  r.kept_count = kept_count;
  r.lambda = kept_count < basis.size() ? std::abs(basis.values[kept_count]) : 0.0;
  r.tau = tau;
  r.projected_norm = projected.norm();
  r.residual_norm = residual.norm();
  r.empty_projection = kept_count == 0;
  r.eps_paper = tau > 0.0 ? 1.0 - r.projected_norm / tau : 0.0;
  if (kept_count == 0) r.eps_paper = 1.0;
  const double fn = f.norm();
  r.eps_relative = fn > 0.0 ? r.residual_norm / fn : 0.0;
  r.tau_eps = tau * r.eps_relative;
  return r;
}

ProjectionReport project_witness(const SpectralBasis& basis, const Eigen::VectorXd& f, double lambda, double tau) {
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  ProjectionReport r = project_top(basis, f, kept_for_threshold(basis, lambda), tau);
  r.lambda = lambda;
  return r;
}

std::vector<ProjectionReport> energy_curve(const SpectralBasis& basis, const Eigen::VectorXd& f, double tau,
                                           const std::vector<Eigen::Index>& kept_counts) {
  std::vector<ProjectionReport> out;
  out.reserve(kept_counts.size());
  for (Eigen::Index kept : kept_counts) {
    if (kept < 1 || kept > basis.size()) fail("kept count " + std::to_string(kept) + " outside 1..N");
    out.push_back(project_top(basis, f, kept, tau));
  }
  return out;
}

std::string energy_curve_csv(const std::vector<ProjectionReport>& curve) {
  std::string out = "kept_count,lambda,eps_paper,eps_relative,tau_eps\n";
  for (const auto& r : curve) {
    out += std::to_string(r.kept_count) + ',' + csv::format_double(r.lambda) + ',' + csv::format_double(r.eps_paper) +
           ',' + csv::format_double(r.eps_relative) + ',' + csv::format_double(r.tau_eps) + '\n';
  }
  return out;
}

TripleProductDiagnostic triple_product_diagnostic(const SpectralBasis& basis_walk, const SpectralBasis& basis_lazy,
                                                  const LabeledPool& pool, double lambda, Eigen::Index pair_budget) {
  const Eigen::Index count = pool.size();
  if (basis_walk.vectors.rows() != count || basis_lazy.vectors.rows() != count) fail("bases do not match the pool");
  if (pair_budget < 0) fail("pair budget must be >= 0");
  const Eigen::VectorXd w = label_weights(pool.n(), pool.m());

  TripleProductDiagnostic d;
  const Eigen::VectorXd contrast_walk = basis_walk.vectors.transpose() * w;
  d.c = basis_walk.values.cwiseMax(0.0).cwiseSqrt().cwiseProduct(contrast_walk);
  d.diff = basis_lazy.vectors.transpose() * w;

  const Eigen::Index kept = kept_for_threshold(basis_lazy, lambda);
  const auto phi = basis_lazy.vectors.leftCols(kept);
  for (Eigen::Index total = 0; total <= 2 * (count - 1) && static_cast<Eigen::Index>(d.pairs.size()) < pair_budget; ++total) {
    for (Eigen::Index k = std::max<Eigen::Index>(0, total - (count - 1)); 2 * k <= total; ++k) {
      if (static_cast<Eigen::Index>(d.pairs.size()) >= pair_budget) break;
      const Eigen::Index k2 = total - k;
      const Eigen::VectorXd prod = basis_walk.vectors.col(k).cwiseProduct(basis_walk.vectors.col(k2));
      PairEnergy e{k, k2, 1.0, false};
      const double norm2 = prod.squaredNorm();
      if (norm2 == 0.0) {
        e.degenerate = true;
      } else {
        e.fraction = (phi.transpose() * prod).squaredNorm() / norm2;
      }
      d.pairs.push_back(e);
    }
  }
  return d;
}

}  // namespace refmmd
