#include "refmmd/bound.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include "refmmd/rng.hpp"

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/parallel.hpp"
#include "refmmd/refselect.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("bound", message); }

double weighted_sum(const Eigen::VectorXd& v, const ReferenceSet& refs) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < refs.size(); ++j) acc += refs.weights[j] * v[refs.indices[static_cast<std::size_t>(j)]];
  return acc;
}

}  // namespace

nlohmann::json to_json(const BoundReport& r) {
  return {{"tau", r.tau},
          {"mmd_sq", r.mmd_sq},
          {"mmd_a_sq", r.mmd_a_sq},
          {"lambda", r.lambda},
          {"kept_count", r.kept_count},
          {"eps_paper_raw", r.eps_paper_raw},
          {"eps_paper", r.eps_paper},
          {"eps_relative", r.eps_relative},
          {"quadrature_argument", r.quadrature_argument},
          {"quadrature_term", r.quadrature_term},
          {"a_norm", r.a_norm},
          {"residual_term", r.residual_term},
          {"total_bound", r.total_bound},
          {"actual_deviation", r.actual_deviation},
          {"proof_terms", r.proof_terms},
          {"projection_step_term", r.projection_step_term},
          {"bound_covers_deviation", r.covers()}};
}

double quadrature_argument(const KernelStack& stack, const ReferenceSet& refs) {
  const Eigen::VectorXd a = refs.dense(stack.size());
  const Eigen::VectorXd pa = stack.lazy * a;
  return pa.squaredNorm() - 1.0 / static_cast<double>(stack.size());
}

BoundReport evaluate_bound(const KernelStack& stack, const LabeledPool& pool, const ReferenceSet& refs,
                           const SpectralBasis& basis, double lambda) {
  const Eigen::Index count = pool.size();
  if (stack.size() != count || basis.vectors.rows() != count) fail("stack/basis do not match the pool");
  if (!(lambda > 0.0)) fail("lambda must be > 0");
  try {
    refs.validate(count);
  } catch (const Error& e) {
    fail(std::string("invalid reference set: ") + e.what());
  }

  BoundReport r;
  const MmdValue full = mmd_full(stack, pool);
  r.mmd_sq = full.value_sq;
  r.tau = full.tau;
  r.lambda = lambda;

  const Eigen::VectorXd f = witness(stack, pool);
  r.mmd_a_sq = weighted_sum(f, refs);
  r.actual_deviation = std::abs(r.mmd_a_sq - r.mmd_sq);

  r.quadrature_argument = quadrature_argument(stack, refs);
  r.quadrature_term = std::sqrt(std::max(r.quadrature_argument, 0.0));
  r.a_norm = refs.weights.norm();

  r.kept_count = kept_for_threshold(basis, lambda);
  Eigen::VectorXd projected, residual;
  split_projection(basis, f, r.kept_count, projected, residual);
  const double mean_weight = 1.0 / static_cast<double>(count);
  r.proof_terms[0] = std::abs(projected.sum() * mean_weight - weighted_sum(projected, refs));
  r.proof_terms[1] = std::abs(residual.sum() * mean_weight);
  r.proof_terms[2] = std::abs(weighted_sum(residual, refs));

  const double projected_norm = projected.norm();
  const double f_norm = f.norm();
  r.eps_paper_raw = r.kept_count == 0 ? 1.0 : (r.tau > 0.0 ? 1.0 - projected_norm / r.tau : 0.0);
  r.eps_paper = std::clamp(r.eps_paper_raw, 0.0, 1.0);
  r.eps_relative = f_norm > 0.0 ? residual.norm() / f_norm : 0.0;

  r.residual_term = (std::sqrt(mean_weight) + r.a_norm) * r.eps_paper;
  r.total_bound = r.tau * ((1.0 - r.eps_paper) / lambda * r.quadrature_term + r.residual_term);
  r.projection_step_term = projected_norm / lambda * r.quadrature_term;
  return r;
}

std::vector<double> decile_lambdas(const SpectralBasis& basis) {
  std::vector<double> mags(static_cast<std::size_t>(basis.size()));
  for (Eigen::Index i = 0; i < basis.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(basis.values[i]);
  std::sort(mags.begin(), mags.end());
  std::vector<double> out;
  for (int d = 1; d <= 9; ++d) {
    const auto idx = static_cast<std::size_t>(std::floor(d / 10.0 * static_cast<double>(mags.size() - 1)));
    if (mags[idx] > 0.0) out.push_back(mags[idx]);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) fail("no positive eigenvalue magnitudes to threshold");
  return out;
}

BoundReport best_bound_over_deciles(const KernelStack& stack, const LabeledPool& pool, const ReferenceSet& refs,
                                    const SpectralBasis& basis) {
  std::optional<BoundReport> best;
  for (double lambda : decile_lambdas(basis)) {
    BoundReport r = evaluate_bound(stack, pool, refs, basis, lambda);
    if (!best || r.total_bound < best->total_bound) best = r;
  }
  return *best;
}

BoundCurve bound_vs_size_curve(const KernelStack& stack, const LabeledPool& pool, const std::vector<Eigen::Index>& sizes,
                               int draws_per_size, std::uint64_t seed, const SpectralBasis& basis, double lambda,
                               unsigned threads) {
  if (draws_per_size < 1) fail("draws_per_size must be >= 1");
  for (auto s : sizes) {
    if (s < 1 || s > pool.size()) fail("reference size " + std::to_string(s) + " outside 1..n+m");
  }
  const auto draws = static_cast<std::size_t>(draws_per_size);
  BoundCurve curve;
  curve.rows.resize(sizes.size() * draws);
  parallel_for(curve.rows.size(), threads, [&](std::size_t slot) {
    const std::size_t s = slot / draws;
    const std::size_t d = slot % draws;
    const auto refs = ReferenceSet::uniform(
        select_random(pool.size(), sizes[s], derive_seed(seed, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(d))));
    const BoundReport r = evaluate_bound(stack, pool, refs, basis, lambda);
    curve.rows[slot] = {sizes[s], static_cast<int>(d), r.quadrature_term, r.a_norm, r.actual_deviation, r.total_bound};
  });
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    BoundCurveSummary sum;
    sum.r_size = sizes[s];
    for (std::size_t d = 0; d < draws; ++d) {
      const auto& row = curve.rows[s * draws + d];
      sum.mean_quadrature_term += row.quadrature_term;
      sum.mean_a_norm += row.a_norm;
      sum.mean_deviation += row.deviation;
      sum.coverage_fraction += row.total_bound >= row.deviation ? 1.0 : 0.0;
    }
    const double inv = 1.0 / static_cast<double>(draws);
    sum.mean_quadrature_term *= inv;
    sum.mean_a_norm *= inv;
    sum.mean_deviation *= inv;
    sum.coverage_fraction *= inv;
    curve.summary.push_back(sum);
  }
  return curve;
}

std::string bound_curve_csv(const BoundCurve& curve) {
  std::string out = "r_size,draw,quadrature_term,a_norm,deviation,total_bound\n";
  for (const auto& r : curve.rows) {
    out += std::to_string(r.r_size) + ',' + std::to_string(r.draw) + ',' + csv::format_double(r.quadrature_term) + ',' +
           csv::format_double(r.a_norm) + ',' + csv::format_double(r.deviation) + ',' +
           csv::format_double(r.total_bound) + '\n';
  }
  return out;
}

}  // namespace refmmd
