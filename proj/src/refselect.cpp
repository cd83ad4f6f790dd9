#include "refmmd/refselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/rng.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("refselect", message); }

DiffusionColumns lazy_from_walk_columns(Eigen::MatrixXd walk_cols, const Eigen::VectorXd& degrees,
                                        std::span<const Eigen::Index> refs) {
  const double d_max = degrees.maxCoeff();
  if (!(d_max > 0.0)) fail("degenerate degrees");
  for (std::size_t j = 0; j < refs.size(); ++j) {
    walk_cols(refs[j], static_cast<Eigen::Index>(j)) += d_max - degrees[refs[j]];
  }
  return {walk_cols / d_max, walk_cols.rows()};
}

}  // namespace

std::vector<Eigen::Index> select_random(Eigen::Index pool_size, Eigen::Index size, std::uint64_t seed,
                                        std::uint32_t trial) {
  if (size < 1) fail("reference set size must be >= 1");
  if (size > pool_size) fail("reference set size exceeds the pool size");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(pool_size));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  RandomStream rng(seed, trial, streams::kReferences);
  // Partial Fisher-Yates.
  for (Eigen::Index i = 0; i < size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, pool_size - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(size));
  std::sort(all.begin(), all.end());
  return all;
}

void SelectConfig::validate() const {
  if (initial_size < 1) fail("initial_size must be >= 1");
  if (!(coverage_threshold >= 0.0)) fail("coverage_threshold must be >= 0");
  if (max_additions < 0) fail("max_additions must be >= 0");
}

SelectConfig select_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("select config must be a JSON object");
  SelectConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "initial_size") cfg.initial_size = value.get<Eigen::Index>();
    else if (key == "coverage_threshold") cfg.coverage_threshold = value.get<double>();
    else if (key == "max_additions") cfg.max_additions = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else fail("unknown select config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const SelectConfig& cfg) {
  return {{"initial_size", cfg.initial_size},
          {"coverage_threshold", cfg.coverage_threshold},
          {"max_additions", cfg.max_additions},
          {"seed", cfg.seed}};
}

CoverageSelection select_with_coverage(const LabeledPool& pool, const KernelSpec& spec, const SelectConfig& cfg) {
  cfg.validate();
  const Eigen::Index count = pool.size();
  CoverageSelection sel;
  sel.indices = select_random(count, std::min(cfg.initial_size, count), cfg.seed);
  sel.columns = reference_columns(pool, spec, sel.indices);
  sel.coverage = sel.columns.values.rowwise().sum();

  std::vector<bool> in_refs(static_cast<std::size_t>(count), false);
  for (auto r : sel.indices) in_refs[static_cast<std::size_t>(r)] = true;

  while (true) {
    Eigen::Index worst = -1;
    double worst_cov = std::numeric_limits<double>::infinity();
    for (Eigen::Index x = 0; x < count; ++x) {
      if (in_refs[static_cast<std::size_t>(x)]) continue;
      if (sel.coverage[x] < cfg.coverage_threshold && sel.coverage[x] < worst_cov) {
        worst = x;
        worst_cov = sel.coverage[x];
      }
    }
    if (worst < 0) break;
    if (sel.additions >= cfg.max_additions) {
      sel.saturated = true;
      break;
    }
    append_reference_column(sel.columns, pool, spec, worst);
    sel.coverage += sel.columns.values.col(sel.columns.values.cols() - 1);
    in_refs[static_cast<std::size_t>(worst)] = true;
    sel.indices.push_back(worst);
    ++sel.additions;
  }
  sel.degrees = estimate_degrees(sel.columns, count);
  return sel;
}

DiffusionColumns lazy_columns(const KernelStack& stack, std::span<const Eigen::Index> refs) {
  DiffusionColumns d;
  d.pool_size = stack.size();
  d.columns.resize(stack.size(), static_cast<Eigen::Index>(refs.size()));
  for (std::size_t j = 0; j < refs.size(); ++j) {
    if (refs[j] < 0 || refs[j] >= stack.size()) fail("reference index out of range");
    d.columns.col(static_cast<Eigen::Index>(j)) = stack.lazy.col(refs[j]);
  }
  return d;
}

DiffusionColumns lazy_columns_from_base(const Eigen::MatrixXd& base, const ReferenceColumns& cols) {
  if (base.rows() != cols.values.rows()) fail("kernel does not match the reference columns");
  const Eigen::VectorXd base_degrees = base.rowwise().sum();
  const Eigen::VectorXd degrees = base * base_degrees;
  Eigen::MatrixXd walk_cols = base * cols.values;
  return lazy_from_walk_columns(std::move(walk_cols), degrees, cols.indices);
}

DiffusionColumns lazy_columns_from_reference(const ReferenceColumns& cols) {
  const Eigen::Index count = cols.values.rows();
  const Eigen::Index r = cols.values.cols();
  if (r == 0) fail("at least one reference column required");
  Eigen::MatrixXd block(r, r);
  for (Eigen::Index i = 0; i < r; ++i) block.row(i) = cols.values.row(cols.indices[static_cast<std::size_t>(i)]);
  const double scale = static_cast<double>(count) / static_cast<double>(r);
  Eigen::MatrixXd walk_cols = scale * (cols.values * block);
  const Eigen::VectorXd degrees = scale * walk_cols.rowwise().sum();
  return lazy_from_walk_columns(std::move(walk_cols), degrees, cols.indices);
}

void OptimizeConfig::validate() const {
  if (!(lambda > 0.0)) fail("lambda must be > 0");
  if (!std::isfinite(epsilon)) fail("epsilon must be finite");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(tolerance > 0.0)) fail("tolerance must be > 0");
  if (!(step_init > 0.0)) fail("step_init must be > 0");
}

ObjectiveValue weight_objective(const DiffusionColumns& diffusion, const Eigen::VectorXd& a, double lambda,
                                double epsilon) {
  if (a.size() != diffusion.columns.cols()) fail("weight count does not match the diffusion columns");
  const double inv_n = 1.0 / static_cast<double>(diffusion.pool_size);
  const double q = (diffusion.columns * a).squaredNorm() - inv_n;
  ObjectiveValue v;
  v.quadrature_term = std::sqrt(std::max(q, kQuadratureFloor));
  v.a_norm = a.norm();
  v.value = (1.0 - epsilon) / lambda * v.quadrature_term + (std::sqrt(inv_n) + v.a_norm) * epsilon;
  return v;
}

Eigen::VectorXd weight_objective_gradient(const DiffusionColumns& diffusion, const Eigen::VectorXd& a, double lambda,
                                          double epsilon) {
  const double inv_n = 1.0 / static_cast<double>(diffusion.pool_size);
  const Eigen::VectorXd pa = diffusion.columns * a;
  const double q = pa.squaredNorm() - inv_n;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(a.size());
  if (q > kQuadratureFloor) grad += ((1.0 - epsilon) / lambda / std::sqrt(q)) * (diffusion.columns.transpose() * pa);
  const double norm = a.norm();
  if (norm > 0.0) grad += (epsilon / norm) * a;
  return grad;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index size = v.size();
  if (size == 0) fail("cannot project an empty vector");
  std::vector<double> u(v.data(), v.data() + size);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < size; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

OptimizeResult optimize_weights(const DiffusionColumns& diffusion, std::vector<Eigen::Index> refs,
                                const OptimizeConfig& cfg) {
  cfg.validate();
  const auto r = static_cast<Eigen::Index>(refs.size());
  if (r == 0) fail("reference set must be non-empty");
  if (diffusion.columns.cols() != r) fail("diffusion columns do not match the reference set");

  OptimizeResult res;
  res.refs = ReferenceSet::uniform(std::move(refs));
  Eigen::VectorXd a = res.refs.weights;
  ObjectiveValue cur = weight_objective(diffusion, a, cfg.lambda, cfg.epsilon);
  if (!std::isfinite(cur.value)) fail("non-finite objective");
  res.initial_objective = cur.value;
  res.trace.push_back({0, cur.value, cur.quadrature_term, a.squaredNorm(), 0.0});
  if (r == 1) {
    res.objective = cur.value;
    res.converged = true;
    return res;
  }

  double step = cfg.step_init;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Eigen::VectorXd grad = weight_objective_gradient(diffusion, a, cfg.lambda, cfg.epsilon);
    if (!grad.allFinite()) fail("non-finite gradient");
    bool accepted = false;
    Eigen::VectorXd trial;
    ObjectiveValue next;
    while (step > 1e-20) {
      trial = project_to_simplex(a - step * grad);
      next = weight_objective(diffusion, trial, cfg.lambda, cfg.epsilon);
      if (next.value < cur.value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double decrease = cur.value - next.value;
    a = trial;
    cur = next;
    res.trace.push_back({it, cur.value, cur.quadrature_term, a.squaredNorm(), step});
    if (decrease < cfg.tolerance) {
      res.converged = true;
      break;
    }
    step *= 2.0;
  }
  res.refs.weights = a;
  res.objective = cur.value;
  return res;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iter,J,quad_term,a_norm2,step_size\n";
  for (const auto& t : trace) {
    out += std::to_string(t.iter) + ',' + csv::format_double(t.objective) + ',' + csv::format_double(t.quadrature_term) +
           ',' + csv::format_double(t.a_norm2) + ',' + csv::format_double(t.step) + '\n';
  }
  return out;
}

}  // namespace refmmd
