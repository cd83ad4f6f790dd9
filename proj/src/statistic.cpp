#include "refmmd/statistic.hpp"

#include <cmath>

#include "refmmd/error.hpp"
#include "refmmd/simd.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("statistic", message); }

Eigen::VectorXd signed_weights(std::span<const std::uint8_t> labels) {
  Eigen::Index n = 0;
  for (auto l : labels) n += (l == 0);
  const Eigen::Index total = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index m = total - n;
  if (n == 0 || m == 0) fail("relabelling must leave both groups non-empty");
  const double root = std::sqrt(static_cast<double>(total));
  const double wx = root / static_cast<double>(n);
  const double wy = -root / static_cast<double>(m);
  Eigen::VectorXd w(total);
  for (Eigen::Index i = 0; i < total; ++i) w[i] = labels[static_cast<std::size_t>(i)] == 0 ? wx : wy;
  return w;
}

double column_dot(const Eigen::MatrixXd& mat, Eigen::Index col, const Eigen::VectorXd& w) {
  return simd::dot(std::span<const double>(mat.col(col).data(), static_cast<std::size_t>(mat.rows())),
                   std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

}  // namespace

ReferenceSet ReferenceSet::uniform(std::vector<Eigen::Index> indices) {
  ReferenceSet r;
  const auto size = static_cast<Eigen::Index>(indices.size());
  if (size == 0) fail("reference set must be non-empty");
  r.indices = std::move(indices);
  r.weights = Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size));
  return r;
}

void ReferenceSet::validate(Eigen::Index pool_size) const {
  if (indices.empty()) fail("reference set must be non-empty");
  if (weights.size() != size()) fail("weight/index count mismatch");
  std::vector<bool> seen(static_cast<std::size_t>(pool_size), false);
  for (Eigen::Index r : indices) {
    if (r < 0 || r >= pool_size) fail("reference index out of range");
    if (seen[static_cast<std::size_t>(r)]) fail("duplicate reference index");
    seen[static_cast<std::size_t>(r)] = true;
  }
  if (!weights.allFinite() || weights.minCoeff() < 0.0 || weights.maxCoeff() > 1.0) fail("weights must lie in [0,1]");
  if (std::abs(weights.sum() - 1.0) > 1e-9) fail("weights must sum to 1");
}

Eigen::VectorXd ReferenceSet::dense(Eigen::Index pool_size) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(pool_size);
  for (Eigen::Index j = 0; j < size(); ++j) a[indices[static_cast<std::size_t>(j)]] = weights[j];
  return a;
}

MmdValue mmd_full(const KernelStack& stack, const LabeledPool& pool) {
  const Eigen::Index n = pool.n();
  const Eigen::Index m = pool.m();
  if (stack.size() != n + m) fail("kernel stack does not match the pool");
  const auto& K = stack.walk;
  const double xx = K.topLeftCorner(n, n).sum();
  const double yy = K.bottomRightCorner(m, m).sum();
  const double xy = K.topRightCorner(n, m).sum();
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  MmdValue v;
  v.value_sq = xx / (dn * dn) + yy / (dm * dm) - 2.0 * xy / (dn * dm);
  v.tau = std::sqrt(std::max(v.value_sq, 0.0));
  return v;
}

Eigen::VectorXd label_weights(Eigen::Index n, Eigen::Index m) {
  return signed_weights(identity_labels(n, m));
}

Eigen::VectorXd witness(const Eigen::MatrixXd& base, Eigen::Index n, Eigen::Index m) {
  if (base.rows() != n + m || base.cols() != n + m) fail("kernel does not match the pool");
  const Eigen::VectorXd g = base.transpose() * label_weights(n, m);
  return g.array().square();
}

Eigen::VectorXd witness(const KernelStack& stack, const LabeledPool& pool) {
  return witness(stack.base, pool.n(), pool.m());
}

double mmd_reference(const ReferenceColumns& cols, const LabeledPool& pool, const ReferenceSet& refs, bool weighted) {
  if (cols.values.rows() != pool.size()) fail("reference columns do not match the pool");
  if (cols.indices != refs.indices) fail("reference set does not match the reference columns");
  if (weighted) {
    if (refs.weights.size() != refs.size()) fail("weight/index count mismatch");
  }
  const Eigen::VectorXd g = cols.values.transpose() * label_weights(pool.n(), pool.m());
  if (!weighted) return g.squaredNorm() / static_cast<double>(g.size());
  return refs.weights.dot(g.array().square().matrix());
}

Labels identity_labels(Eigen::Index n, Eigen::Index m) {
  Labels labels(static_cast<std::size_t>(n + m), 1);
  std::fill_n(labels.begin(), n, std::uint8_t{0});
  return labels;
}

double mmd_full_relabeled(const Eigen::MatrixXd& base, std::span<const std::uint8_t> labels) {
  if (base.rows() != static_cast<Eigen::Index>(labels.size())) fail("label count does not match the kernel");
  const Eigen::VectorXd w = signed_weights(labels);
  double acc = 0.0;
  // k is symmetric, so row z of k w is a dot with column z.
  for (Eigen::Index z = 0; z < base.cols(); ++z) {
    const double g = column_dot(base, z, w);
    acc += g * g;
  }
  return acc / static_cast<double>(base.cols());
}

double mmd_reference_relabeled(const Eigen::MatrixXd& k_ref, const Eigen::VectorXd& weights,
                               std::span<const std::uint8_t> labels) {
  if (k_ref.rows() != static_cast<Eigen::Index>(labels.size())) fail("label count does not match the kernel");
  if (weights.size() != k_ref.cols()) fail("weight count does not match the reference columns");
  const Eigen::VectorXd w = signed_weights(labels);
  double acc = 0.0;
  for (Eigen::Index r = 0; r < k_ref.cols(); ++r) {
    const double g = column_dot(k_ref, r, w);
    acc += weights[r] * g * g;
  }
  return acc;
}

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::Full: return "full";
    case StatisticKind::ReferenceUniform: return "reference-uniform";
    case StatisticKind::ReferenceWeighted: return "reference-weighted";
  }
  return "unknown";
}

StatisticKind statistic_kind_from_string(const std::string& name) {
  for (auto k : {StatisticKind::Full, StatisticKind::ReferenceUniform, StatisticKind::ReferenceWeighted}) {
    if (to_string(k) == name) return k;
  }
  fail("unknown statistic kind '" + name + "'");
}

nlohmann::json statistic_record(StatisticKind kind, double value_sq, Eigen::Index n, Eigen::Index m,
                                Eigen::Index r_count, std::uint64_t seed) {
  return {{"statistic_kind", to_string(kind)},
          {"value_sq", value_sq},
          {"tau", std::sqrt(std::max(value_sq, 0.0))},
          {"n", n},
          {"m", m},
          {"r_count", r_count},
          {"seed", seed}};
}

}  // namespace refmmd
