#include "refmmd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/parallel.hpp"
#include "refmmd/simd.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("kernel", message); }

// Squared Euclidean distances from point `query` to every pooled point.
void distances_from(const Eigen::MatrixXd& points, Eigen::Index query, std::span<double> out) {
  const Eigen::Index dim = points.cols();
  Eigen::VectorXd q = points.row(query).transpose();
  simd::squared_distances(std::span<const double>(points.data(), static_cast<std::size_t>(points.size())),
                          static_cast<std::size_t>(points.rows()),
                          std::span<const double>(q.data(), static_cast<std::size_t>(dim)), out);
}

double mahalanobis(const Eigen::MatrixXd& points, Eigen::Index from, Eigen::Index to, const Eigen::MatrixXd& precision) {
  const Eigen::VectorXd d = (points.row(from) - points.row(to)).transpose();
  return d.dot(precision * d);
}

// Symmetrised local-covariance entry; operand order fixed so full and
// column-wise assembly agree bit-for-bit.
double local_entry(const Eigen::MatrixXd& points, const std::vector<Eigen::MatrixXd>& precisions, double inv_s2,
                   Eigen::Index x, Eigen::Index z) {
  const Eigen::Index lo = std::min(x, z);
  const Eigen::Index hi = std::max(x, z);
  const double a = std::exp(-mahalanobis(points, lo, hi, precisions[static_cast<std::size_t>(hi)]) * inv_s2);
  const double b = std::exp(-mahalanobis(points, hi, lo, precisions[static_cast<std::size_t>(lo)]) * inv_s2);
  return 0.5 * (a + b);
}

// Column `index` of the base kernel.
void kernel_column(const LabeledPool& pool, const KernelSpec& spec, const std::vector<Eigen::MatrixXd>* precisions,
                   Eigen::Index index, double* out) {
  const auto& points = pool.stacked();
  const Eigen::Index count = points.rows();
  const double inv_s2 = 1.0 / (spec.bandwidth * spec.bandwidth);
  if (spec.kind == KernelKind::Gaussian) {
    std::span<double> col(out, static_cast<std::size_t>(count));
    distances_from(points, index, col);
    for (double& v : col) {
      if (!std::isfinite(v)) fail("non-finite distance");
      v = std::exp(-v * inv_s2);
    }
    return;
  }
  for (Eigen::Index x = 0; x < count; ++x) out[x] = local_entry(points, *precisions, inv_s2, x, index);
}

}  // namespace

std::string to_string(KernelKind kind) {
  return kind == KernelKind::Gaussian ? "gaussian" : "local-covariance";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "local-covariance") return KernelKind::LocalCovariance;
  fail("unknown kernel kind '" + name + "'");
}

void KernelSpec::validate(Eigen::Index dim) const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) fail("bandwidth must be finite and > 0");
  if (kind == KernelKind::LocalCovariance) {
    if (knn < dim + 1) fail("knn must be >= dim + 1 for the local-covariance kernel");
    if (!(regularizer > 0.0)) fail("regularizer must be > 0");
  }
}

KernelSpec kernel_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("kernel spec must be a JSON object");
  KernelSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") spec.kind = kernel_kind_from_string(value.get<std::string>());
    else if (key == "bandwidth") spec.bandwidth = value.get<double>();
    else if (key == "knn") spec.knn = value.get<int>();
    else if (key == "regularizer") spec.regularizer = value.get<double>();
    else fail("unknown kernel spec key '" + key + "'");
  }
  return spec;
}

nlohmann::json to_json(const KernelSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"bandwidth", spec.bandwidth},
          {"knn", spec.knn},
          {"regularizer", spec.regularizer}};
}

std::vector<Eigen::MatrixXd> local_precisions(const Eigen::MatrixXd& points, int knn, double regularizer) {
  const Eigen::Index count = points.rows();
  const Eigen::Index dim = points.cols();
  if (knn > count) fail("knn exceeds the number of points");
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(count));
  std::vector<double> dist(static_cast<std::size_t>(count));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  for (Eigen::Index z = 0; z < count; ++z) {
    distances_from(points, z, dist);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + knn, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)] ||
             (dist[static_cast<std::size_t>(a)] == dist[static_cast<std::size_t>(b)] && a < b);
    });
    Eigen::MatrixXd nb(knn, dim);
    for (int i = 0; i < knn; ++i) nb.row(i) = points.row(order[static_cast<std::size_t>(i)]);
    const Eigen::RowVectorXd mean = nb.colwise().mean();
    nb.rowwise() -= mean;
    Eigen::MatrixXd cov = (nb.transpose() * nb) / static_cast<double>(knn);
    cov.diagonal().array() += regularizer;
    out[static_cast<std::size_t>(z)] = cov.ldlt().solve(Eigen::MatrixXd::Identity(dim, dim));
  }
  return out;
}

Eigen::MatrixXd local_covariance_kernel(const Eigen::MatrixXd& points, const std::vector<Eigen::MatrixXd>& precisions,
                                        double bandwidth) {
  const Eigen::Index count = points.rows();
  if (static_cast<Eigen::Index>(precisions.size()) != count) fail("one precision matrix per point required");
  const double inv_s2 = 1.0 / (bandwidth * bandwidth);
  Eigen::MatrixXd k(count, count);
  for (Eigen::Index z = 0; z < count; ++z) {
    for (Eigen::Index x = z; x < count; ++x) {
      const double v = local_entry(points, precisions, inv_s2, x, z);
      k(x, z) = v;
      k(z, x) = v;
    }
  }
  return k;
}

Eigen::MatrixXd build_base_kernel(const LabeledPool& pool, const KernelSpec& spec) {
  spec.validate(pool.dim());
  const Eigen::Index count = pool.size();
  if (spec.kind == KernelKind::LocalCovariance) {
    return local_covariance_kernel(pool.stacked(), local_precisions(pool.stacked(), spec.knn, spec.regularizer),
                                   spec.bandwidth);
  }
  Eigen::MatrixXd k(count, count);
  parallel_for(static_cast<std::size_t>(count), 0, [&](std::size_t z) {
    kernel_column(pool, spec, nullptr, static_cast<Eigen::Index>(z), k.col(static_cast<Eigen::Index>(z)).data());
  });
  return k;
}

KernelStack build_stack(const Eigen::MatrixXd& base) {
  if (base.rows() != base.cols() || base.rows() == 0) fail("kernel must be square and non-empty");
  if (!base.allFinite()) fail("kernel has non-finite entries");
  if (base.minCoeff() < 0.0 || base.maxCoeff() > 1.0) fail("kernel entries must lie in [0,1]");
  const double asym = (base - base.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) fail("kernel is not symmetric (max asymmetry " + std::to_string(asym) + ")");

  KernelStack s;
  s.base = base;
  Eigen::MatrixXd prod;
  prod.noalias() = base * base;
  s.walk = 0.5 * (prod + prod.transpose());
  s.degrees = s.walk.rowwise().sum();
  s.d_max = s.degrees.maxCoeff();
  s.lazy = s.walk;
  s.lazy.diagonal() += (Eigen::VectorXd::Constant(s.size(), s.d_max) - s.degrees);
  s.lazy /= s.d_max;
  return s;
}

ReferenceColumns reference_columns(const LabeledPool& pool, const KernelSpec& spec, std::span<const Eigen::Index> refs) {
  spec.validate(pool.dim());
  const Eigen::Index count = pool.size();
  std::vector<bool> seen(static_cast<std::size_t>(count), false);
  for (Eigen::Index r : refs) {
    if (r < 0 || r >= count) fail("reference index " + std::to_string(r) + " out of range");
    if (seen[static_cast<std::size_t>(r)]) fail("duplicate reference index " + std::to_string(r));
    seen[static_cast<std::size_t>(r)] = true;
  }
  std::vector<Eigen::MatrixXd> precisions;
  if (spec.kind == KernelKind::LocalCovariance) precisions = local_precisions(pool.stacked(), spec.knn, spec.regularizer);

  ReferenceColumns cols;
  cols.indices.assign(refs.begin(), refs.end());
  cols.values.resize(count, static_cast<Eigen::Index>(refs.size()));
  for (std::size_t j = 0; j < refs.size(); ++j) {
    kernel_column(pool, spec, &precisions, refs[j], cols.values.col(static_cast<Eigen::Index>(j)).data());
  }
  return cols;
}

void append_reference_column(ReferenceColumns& cols, const LabeledPool& pool, const KernelSpec& spec, Eigen::Index index) {
  if (index < 0 || index >= pool.size()) fail("reference index out of range");
  if (std::find(cols.indices.begin(), cols.indices.end(), index) != cols.indices.end()) fail("duplicate reference index");
  std::vector<Eigen::MatrixXd> precisions;
  if (spec.kind == KernelKind::LocalCovariance) precisions = local_precisions(pool.stacked(), spec.knn, spec.regularizer);
  cols.values.conservativeResize(pool.size(), cols.values.cols() + 1);
  kernel_column(pool, spec, &precisions, index, cols.values.col(cols.values.cols() - 1).data());
  cols.indices.push_back(index);
}

DegreeEstimate estimate_degrees(const ReferenceColumns& cols, Eigen::Index n_plus_m) {
  const Eigen::Index r = cols.values.cols();
  if (r == 0) fail("degree estimation needs at least one reference column");
  if (cols.values.rows() != n_plus_m) fail("reference columns do not match the pool size");
  DegreeEstimate est;
  est.base.resize(n_plus_m);
  const double scale = static_cast<double>(n_plus_m) / static_cast<double>(r);
  for (Eigen::Index z = 0; z < n_plus_m; ++z) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < r; ++j) acc += cols.values(z, j);
    est.base[z] = scale * acc;
  }
  est.walk_proxy = est.base * est.base.mean();
  return est;
}

void export_kernel_csv(const std::filesystem::path& path, const Eigen::MatrixXd& k) {
  csv::write_matrix(path, k, csv::Precision::Significant17);
}

}  // namespace refmmd
