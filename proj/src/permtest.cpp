#include "refmmd/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/parallel.hpp"
#include "refmmd/refselect.hpp"
#include "refmmd/rng.hpp"
#include "refmmd/spectral.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("permtest", message); }

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

void PermTestConfig::validate() const {
  if (num_permutations < 1) fail("num_permutations must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
}

PermTestConfig perm_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("perm config must be a JSON object");
  PermTestConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_permutations") cfg.num_permutations = value.get<int>();
    else if (key == "alpha") cfg.alpha = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "statistic_kind") cfg.statistic_kind = statistic_kind_from_string(value.get<std::string>());
    else fail("unknown perm config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const PermTestConfig& cfg) {
  return {{"num_permutations", cfg.num_permutations},
          {"alpha", cfg.alpha},
          {"seed", cfg.seed},
          {"statistic_kind", to_string(cfg.statistic_kind)}};
}

StatisticEvaluator full_evaluator(const Eigen::MatrixXd& base) {
  return [&base](std::span<const std::uint8_t> labels) { return mmd_full_relabeled(base, labels); };
}

StatisticEvaluator reference_evaluator(const ReferenceColumns& cols, const Eigen::VectorXd& weights) {
  return [&cols, weights](std::span<const std::uint8_t> labels) {
    return mmd_reference_relabeled(cols.values, weights, labels);
  };
}

Labels permutation_labels(Eigen::Index n, Eigen::Index m, std::uint64_t seed, std::uint32_t index) {
  Labels labels = identity_labels(n, m);
  RandomStream rng(seed, index, streams::kPermutations);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

PermTestResult permutation_test(Eigen::Index n, Eigen::Index m, const StatisticEvaluator& evaluator,
                                const PermTestConfig& cfg) {
  cfg.validate();
  PermTestResult res;
  const Labels observed = identity_labels(n, m);
  res.observed = evaluator(observed);
  res.permuted.resize(static_cast<std::size_t>(cfg.num_permutations));
  parallel_for(res.permuted.size(), cfg.threads, [&](std::size_t i) {
    res.permuted[i] = evaluator(permutation_labels(n, m, cfg.seed, static_cast<std::uint32_t>(i)));
  });
  const auto exceed = std::count_if(res.permuted.begin(), res.permuted.end(),
                                    [&](double v) { return v >= res.observed; });
  res.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + cfg.num_permutations);
  res.reject = res.p_value <= cfg.alpha;
  return res;
}

void PowerConfig::validate() const {
  if (deltas.empty()) fail("delta grid must be non-empty");
  if (trials < 1) fail("trials must be >= 1");
  if (variants.empty()) fail("at least one statistic variant required");
  if (plan.ref_size < 1) fail("ref_size must be >= 1");
  if (plan.kept_count < 1) fail("kept_count must be >= 1");
  if (plan.epsilon_source != "paper" && plan.epsilon_source != "relative") fail("epsilon_source must be paper|relative");
  perm.validate();
}

PowerResult power_curve(const PowerConfig& cfg) {
  cfg.validate();
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  const bool need_refs = std::any_of(cfg.variants.begin(), cfg.variants.end(),
                                     [](StatisticKind k) { return k != StatisticKind::Full; });
  const bool need_weights = std::find(cfg.variants.begin(), cfg.variants.end(), StatisticKind::ReferenceWeighted) !=
                            cfg.variants.end();

  PowerResult result;
  result.records.resize(cfg.deltas.size() * trials);
  parallel_for(result.records.size(), cfg.threads, [&](std::size_t slot) {
    const std::size_t d = slot / trials;
    const auto t = static_cast<std::uint32_t>(slot % trials);
    GeneratorConfig gen = cfg.generator;
    gen.shift = cfg.deltas[d];
    gen.seed = derive_seed(cfg.seed, t, streams::kTrialData);
    const LabeledPool pool = generate(gen);
    const Eigen::MatrixXd k = build_base_kernel(pool, cfg.kernel);

    ReferenceColumns cols;
    Eigen::VectorXd uniform, optimized;
    if (need_refs) {
      cols.indices = select_random(pool.size(), std::min(cfg.plan.ref_size, pool.size()),
                                   derive_seed(cfg.seed, t, streams::kTrialReferences));
      cols.values.resize(pool.size(), static_cast<Eigen::Index>(cols.indices.size()));
      for (std::size_t j = 0; j < cols.indices.size(); ++j) {
        cols.values.col(static_cast<Eigen::Index>(j)) = k.col(cols.indices[j]);
      }
      uniform = ReferenceSet::uniform(cols.indices).weights;
    }
    if (need_weights) {
      const KernelStack stack = build_stack(k);
      const SpectralBasis basis = decompose(stack, SpectralSource::LazyWalk);
      const Eigen::Index kept = std::min(cfg.plan.kept_count, pool.size() - 1);
      const MmdValue full = mmd_full(stack, pool);
      const ProjectionReport proj = project_top(basis, witness(stack, pool), kept, full.tau);
      OptimizeConfig oc;
      oc.lambda = std::max(proj.lambda, 1e-12);
      oc.epsilon = cfg.plan.epsilon_source == "paper" ? std::clamp(proj.eps_paper, 0.0, 1.0) : proj.eps_relative;
      oc.max_iters = cfg.plan.max_iters;
      oc.tolerance = cfg.plan.tolerance;
      optimized = optimize_weights(lazy_columns(stack, cols.indices), cols.indices, oc).refs.weights;
    }

    PermTestConfig pc = cfg.perm;
    pc.seed = derive_seed(cfg.seed, t, streams::kTrialPermutations);
    pc.threads = 1;
    TrialRecord& rec = result.records[slot];
    rec.delta = cfg.deltas[d];
    rec.trial = static_cast<int>(t);
    Eigen::MatrixXd k_full_storage;
    if (cfg.full_kernel) k_full_storage = build_base_kernel(pool, *cfg.full_kernel);
    const Eigen::MatrixXd& k_full = cfg.full_kernel ? k_full_storage : k;
    rec.full_value_sq = mmd_full_relabeled(k_full, identity_labels(pool.n(), pool.m()));
    for (StatisticKind kind : cfg.variants) {
      StatisticEvaluator eval;
      switch (kind) {
        case StatisticKind::Full: eval = full_evaluator(k_full); break;
        case StatisticKind::ReferenceUniform: eval = reference_evaluator(cols, uniform); break;
        case StatisticKind::ReferenceWeighted: eval = reference_evaluator(cols, optimized); break;
      }
      const PermTestResult r = permutation_test(pool.n(), pool.m(), eval, pc);
      rec.statistic.push_back(r.observed);
      rec.p_value.push_back(r.p_value);
      rec.reject.push_back(r.reject);
    }
  });

  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    PowerCurve curve;
    curve.variant = cfg.variants[v];
    curve.deltas = cfg.deltas;
    curve.trials = cfg.trials;
    curve.rejections.assign(cfg.deltas.size(), 0);
    for (const auto& rec : result.records) {
      const auto d = static_cast<std::size_t>(std::find(cfg.deltas.begin(), cfg.deltas.end(), rec.delta) - cfg.deltas.begin());
      if (rec.reject[v]) ++curve.rejections[d];
    }
    result.curves.push_back(std::move(curve));
  }
  return result;
}

std::string power_curve_csv(const std::vector<PowerCurve>& curves) {
  std::string out = "delta,variant,trials,rejections,power\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
      out += csv::format_double(c.deltas[i]) + ',' + to_string(c.variant) + ',' + std::to_string(c.trials) + ',' +
             std::to_string(c.rejections[i]) + ',' + csv::format_double(c.power(i)) + '\n';
    }
  }
  return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) fail("spearman needs two equal-length series of length >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace refmmd
