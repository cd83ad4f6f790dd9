#include "refmmd/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "refmmd/bound.hpp"
#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/rng.hpp"
#include "refmmd/spectral.hpp"
#include "refmmd/statistic.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("cli", message); }

template <typename F>
void for_keys(const nlohmann::json& j, const char* section, F&& handle) {
  if (!j.is_object()) fail(std::string(section) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!handle(key, value)) fail("unknown " + std::string(section) + " key '" + key + "'");
  }
}

std::vector<StatisticKind> variants_from_json(const nlohmann::json& j) {
  std::vector<StatisticKind> out;
  for (const auto& v : j) out.push_back(statistic_kind_from_string(v.get<std::string>()));
  return out;
}

std::filesystem::path prepare_out(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) fail("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
  return cfg.output_dir;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j, Outputs& outputs) {
  csv::write_file_atomic(path, j.dump(2) + "\n");
  outputs.push_back(path);
}

void write_text(const std::filesystem::path& path, const std::string& text, Outputs& outputs) {
  csv::write_file_atomic(path, text);
  outputs.push_back(path);
}

LabeledPool input_pool(const RunConfig& cfg) {
  if (!cfg.inputs.x.empty() || !cfg.inputs.y.empty()) {
    if (cfg.inputs.x.empty() || cfg.inputs.y.empty()) fail("inputs need both x and y paths");
    return load_pool(cfg.inputs.x, cfg.inputs.y, cfg.inputs.header);
  }
  return generate(cfg.generator);
}

std::uint64_t master(const RunConfig& cfg) { return cfg.seed.value_or(cfg.generator.seed); }

struct ChosenLambda {
  double lambda;
  double epsilon;
};

ChosenLambda choose_lambda(const RunConfig& cfg, const SpectralBasis* basis, const Eigen::VectorXd* f, double tau) {
  const auto& o = cfg.optimize;
  if (o.lambda && o.epsilon) return {*o.lambda, *o.epsilon};
  if (basis == nullptr) fail("reference-only mode requires optimize.lambda and optimize.epsilon");
  const Eigen::Index kept = std::clamp<Eigen::Index>(o.kept_count, 1, basis->size() - 1);
  const ProjectionReport rep = project_top(*basis, *f, kept, tau);
  ChosenLambda c{};
  c.lambda = o.lambda.value_or(std::max(rep.lambda, 1e-12));
  const double eps = o.epsilon_source == "paper" ? std::clamp(rep.eps_paper, 0.0, 1.0) : rep.eps_relative;
  c.epsilon = o.epsilon.value_or(eps);
  return c;
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::Exact ? "exact" : "reference-only"; }

Mode mode_from_string(const std::string& name) {
  if (name == "exact") return Mode::Exact;
  if (name == "reference-only") return Mode::ReferenceOnly;
  fail("unknown mode '" + name + "'");
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

void RunConfig::apply_master_seed() {
  if (!seed) return;
  generator.seed = derive_seed(*seed, 0, streams::kTrialData);
  select.seed = derive_seed(*seed, 0, streams::kTrialReferences);
  perm.seed = derive_seed(*seed, 0, streams::kTrialPermutations);
  spectra.seed = *seed;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    for_keys(j, "run config", [&](const std::string& key, const nlohmann::json& v) {
      if (key == "command") cfg.command = v.get<std::string>();
      else if (key == "generator") cfg.generator = generator_config_from_json(v);
      else if (key == "kernel") cfg.kernel = kernel_spec_from_json(v);
      else if (key == "select") cfg.select = select_config_from_json(v);
      else if (key == "perm") cfg.perm = perm_config_from_json(v);
      else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
      else if (key == "formats") cfg.formats = v.get<std::vector<std::string>>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "mode") cfg.mode = mode_from_string(v.get<std::string>());
      else if (key == "threads") cfg.threads = v.get<unsigned>();
      else if (key == "optimize") {
        for_keys(v, "optimize", [&](const std::string& k, const nlohmann::json& x) {
          auto& o = cfg.optimize;
          if (k == "lambda") o.lambda = x.get<double>();
          else if (k == "epsilon") o.epsilon = x.get<double>();
          else if (k == "kept_count") o.kept_count = x.get<Eigen::Index>();
          else if (k == "epsilon_source") o.epsilon_source = x.get<std::string>();
          else if (k == "max_iters") o.max_iters = x.get<int>();
          else if (k == "step_init") o.step_init = x.get<double>();
          else if (k == "tolerance") o.tolerance = x.get<double>();
          else return false;
          return true;
        });
      } else if (key == "inputs") {
        for_keys(v, "inputs", [&](const std::string& k, const nlohmann::json& x) {
          if (k == "x") cfg.inputs.x = x.get<std::string>();
          else if (k == "y") cfg.inputs.y = x.get<std::string>();
          else if (k == "header") cfg.inputs.header = x.get<bool>();
          else return false;
          return true;
        });
      } else if (key == "power") {
        for_keys(v, "power", [&](const std::string& k, const nlohmann::json& x) {
          if (k == "deltas") cfg.power.deltas = x.get<std::vector<double>>();
          else if (k == "trials") cfg.power.trials = x.get<int>();
          else if (k == "variants") cfg.power.variants = variants_from_json(x);
          else if (k == "ref_size") cfg.power.ref_size = x.get<Eigen::Index>();
          else if (k == "full_kernel") cfg.power.full_kernel = kernel_spec_from_json(x);
          else return false;
          return true;
        });
      } else if (key == "spectra") {
        for_keys(v, "spectra", [&](const std::string& k, const nlohmann::json& x) {
          auto& s = cfg.spectra;
          if (k == "shifts") s.shifts = x.get<std::vector<double>>();
          else if (k == "kept_counts") s.kept_counts = x.get<std::vector<Eigen::Index>>();
          else if (k == "trials") s.trials = x.get<int>();
          else if (k == "n") s.n = x.get<int>();
          else if (k == "m") s.m = x.get<int>();
          else if (k == "dim") s.dim = x.get<int>();
          else if (k == "bandwidth") s.bandwidth = x.get<double>();
          else if (k == "source") s.source = spectral_source_from_string(x.get<std::string>());
          else return false;
          return true;
        });
      } else if (key == "bound_curve") {
        for_keys(v, "bound_curve", [&](const std::string& k, const nlohmann::json& x) {
          if (k == "sizes") cfg.bound_curve.sizes = x.get<std::vector<Eigen::Index>>();
          else if (k == "draws") cfg.bound_curve.draws = x.get<int>();
          else return false;
          return true;
        });
      } else {
        return false;
      }
      return true;
    });
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
  cfg.spectra.threads = cfg.threads;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.kernel.bandwidth = 0.5;
  if (name == "fig1") {
    cfg.command = "spectra";
    cfg.spectra.trials = 100;
  } else if (name == "fig2") {
    cfg.command = "power";
    cfg.generator.family = Family::GaussianAnomaly;
    cfg.generator.dim = 5;
  } else if (name == "fig3") {
    cfg.command = "power";
    cfg.generator.family = Family::SphereShift;
    cfg.generator.dim = 5;
    cfg.kernel.bandwidth = 1.0;
    cfg.power.deltas = {0.0, 0.1, 0.2, 0.3, 0.4};
  } else if (name == "fig4") {
    cfg.command = "power";
    cfg.generator.family = Family::Mixture3d;
    cfg.generator.dim = 3;
    cfg.kernel.kind = KernelKind::LocalCovariance;
    cfg.kernel.bandwidth = 1.0;
    cfg.kernel.knn = 20;
    cfg.kernel.regularizer = 1e-3;
    cfg.power.deltas = {0.0, 0.05, 0.1, 0.15, 0.2};
    KernelSpec iso;
    iso.bandwidth = 1.0;
    cfg.power.full_kernel = iso;
  } else {
    fail("unknown preset '" + name + "' (expected fig1|fig2|fig3|fig4)");
  }
  return cfg;
}

Outputs cmd_generate(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const LabeledPool pool = generate(cfg.generator);
  Outputs files;
  save_pool(pool, out / "X.csv", out / "Y.csv");
  files.push_back(out / "X.csv");
  files.push_back(out / "Y.csv");
  nlohmann::json meta = {{"generator", to_json(cfg.generator)}, {"n", pool.n()}, {"m", pool.m()}, {"dim", pool.dim()}};
  write_json(out / "meta.json", meta, files);
  return files;
}

nlohmann::json test_report(const RunConfig& cfg) {
  const LabeledPool pool = input_pool(cfg);
  const Eigen::Index count = pool.size();
  nlohmann::json report;
  report["mode"] = to_string(cfg.mode);
  report["n"] = pool.n();
  report["m"] = pool.m();
  report["kernel"] = to_json(cfg.kernel);

  const CoverageSelection sel = select_with_coverage(pool, cfg.kernel, cfg.select);
  report["selection"] = {{"r_count", sel.indices.size()},
                         {"initial_size", std::min(cfg.select.initial_size, count)},
                         {"additions", sel.additions},
                         {"saturated", sel.saturated},
                         {"min_coverage_outside_r", [&] {
                            double lo = INFINITY;
                            std::vector<bool> in(static_cast<std::size_t>(count), false);
                            for (auto r : sel.indices) in[static_cast<std::size_t>(r)] = true;
                            for (Eigen::Index x = 0; x < count; ++x)
                              if (!in[static_cast<std::size_t>(x)]) lo = std::min(lo, sel.coverage[x]);
                            return std::isfinite(lo) ? lo : 0.0;
                          }()}};

  std::optional<KernelStack> stack;
  std::optional<SpectralBasis> basis;
  Eigen::VectorXd f;
  MmdValue full;
  if (cfg.mode == Mode::Exact) {
    stack = build_stack(build_base_kernel(pool, cfg.kernel));
    basis = decompose(*stack, SpectralSource::LazyWalk);
    f = witness(*stack, pool);
    full = mmd_full(*stack, pool);
  }
  const ChosenLambda chosen = choose_lambda(cfg, basis ? &*basis : nullptr, &f, full.tau);

  OptimizeConfig oc;
  oc.lambda = chosen.lambda;
  oc.epsilon = chosen.epsilon;
  oc.max_iters = cfg.optimize.max_iters;
  oc.step_init = cfg.optimize.step_init;
  oc.tolerance = cfg.optimize.tolerance;
  oc.seed = cfg.select.seed;
  const DiffusionColumns diffusion =
      cfg.mode == Mode::Exact ? lazy_columns(*stack, sel.indices) : lazy_columns_from_reference(sel.columns);
  const OptimizeResult opt = optimize_weights(diffusion, sel.indices, oc);
  report["optimizer"] = {{"lambda", oc.lambda},
                         {"epsilon", oc.epsilon},
                         {"initial_objective", opt.initial_objective},
                         {"objective", opt.objective},
                         {"iterations", opt.trace.size() - 1},
                         {"converged", opt.converged}};

  const ReferenceSet uniform = ReferenceSet::uniform(sel.indices);
  struct Variant {
    StatisticKind kind;
    double value;
    StatisticEvaluator eval;
  };
  std::vector<Variant> variants;
  if (cfg.mode == Mode::Exact) {
    variants.push_back({StatisticKind::Full, full.value_sq, full_evaluator(stack->base)});
  }
  variants.push_back({StatisticKind::ReferenceUniform, mmd_reference(sel.columns, pool, uniform, false),
                      reference_evaluator(sel.columns, uniform.weights)});
  variants.push_back({StatisticKind::ReferenceWeighted, mmd_reference(sel.columns, pool, opt.refs, true),
                      reference_evaluator(sel.columns, opt.refs.weights)});

  PermTestConfig pc = cfg.perm;
  pc.threads = cfg.threads;
  report["statistics"] = nlohmann::json::array();
  for (const auto& v : variants) {
    const PermTestResult t = permutation_test(pool.n(), pool.m(), v.eval, pc);
    nlohmann::json rec = statistic_record(v.kind, v.value, pool.n(), pool.m(),
                                          v.kind == StatisticKind::Full ? count : uniform.size(), pc.seed);
    rec["p_value"] = t.p_value;
    rec["reject"] = t.reject;
    rec["alpha"] = pc.alpha;
    rec["num_permutations"] = pc.num_permutations;
    report["statistics"].push_back(rec);
  }

  if (cfg.mode == Mode::Exact) {
    report["bound"] = to_json(evaluate_bound(*stack, pool, opt.refs, *basis, oc.lambda));
    report["bound_best_decile"] = to_json(best_bound_over_deciles(*stack, pool, opt.refs, *basis));
  }
  report["references"] = sel.indices;
  report["weights"] = std::vector<double>(opt.refs.weights.data(), opt.refs.weights.data() + opt.refs.weights.size());
  report["trace"] = trace_csv(opt.trace);
  return report;
}

Outputs cmd_test(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  nlohmann::json report = test_report(cfg);
  Outputs files;
  if (cfg.wants("csv")) {
    std::string weights = "index,weight\n";
    const auto& idx = report["references"];
    const auto& w = report["weights"];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      weights += std::to_string(idx[i].get<long long>()) + ',' + csv::format_double(w[i].get<double>()) + '\n';
    }
    write_text(out / "weights.csv", weights, files);
    write_text(out / "trace.csv", report["trace"].get<std::string>(), files);
  }
  report.erase("trace");
  write_json(out / "report.json", report, files);
  return files;
}

Outputs cmd_power(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  PowerConfig pc;
  pc.generator = cfg.generator;
  pc.kernel = cfg.kernel;
  pc.full_kernel = cfg.power.full_kernel;
  pc.deltas = cfg.power.deltas;
  pc.trials = cfg.power.trials;
  pc.perm = cfg.perm;
  pc.variants = cfg.power.variants;
  pc.plan.ref_size = cfg.power.ref_size;
  pc.plan.kept_count = cfg.optimize.kept_count;
  pc.plan.epsilon_source = cfg.optimize.epsilon_source;
  pc.plan.max_iters = cfg.optimize.max_iters;
  pc.plan.tolerance = cfg.optimize.tolerance;
  pc.seed = master(cfg);
  pc.threads = cfg.threads;
  const PowerResult res = power_curve(pc);

  Outputs files;
  if (cfg.wants("csv")) write_text(out / "power.csv", power_curve_csv(res.curves), files);
  if (cfg.wants("json")) {
    nlohmann::json j;
    j["config"] = {{"generator", to_json(cfg.generator)},
                   {"kernel", to_json(cfg.kernel)},
                   {"perm", to_json(cfg.perm)},
                   {"trials", pc.trials},
                   {"ref_size", pc.plan.ref_size},
                   {"seed", pc.seed}};
    for (const auto& c : res.curves) {
      nlohmann::json cj = {{"variant", to_string(c.variant)}, {"deltas", c.deltas}, {"rejections", c.rejections}};
      for (std::size_t i = 0; i < c.deltas.size(); ++i) cj["power"].push_back(c.power(i));
      j["curves"].push_back(cj);
    }
    write_json(out / "power.json", j, files);
  }
  return files;
}

Outputs cmd_spectra(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  SpectraConfig sc = cfg.spectra;
  sc.seed = master(cfg);
  sc.threads = cfg.threads;
  const auto curves = run_energy_experiment(sc);
  Outputs files;
  nlohmann::json j;
  for (std::size_t s = 0; s < curves.size(); ++s) {
    if (cfg.wants("csv")) {
      write_text(out / ("spectra_" + std::to_string(s) + ".csv"), energy_curve_csv(curves[s].mean), files);
    }
    nlohmann::json cj = {{"shift", curves[s].shift}, {"file", "spectra_" + std::to_string(s) + ".csv"}};
    for (const auto& r : curves[s].mean) {
      cj["kept_count"].push_back(r.kept_count);
      cj["eps_relative"].push_back(r.eps_relative);
      cj["tau_eps"].push_back(r.tau_eps);
    }
    j["curves"].push_back(cj);
  }
  j["trials"] = sc.trials;
  j["bandwidth"] = sc.bandwidth;
  j["source"] = to_string(sc.source);
  j["seed"] = sc.seed;
  if (cfg.wants("json")) write_json(out / "spectra.json", j, files);
  return files;
}

Outputs cmd_bound_curve(const RunConfig& cfg) {
  const auto out = prepare_out(cfg);
  const LabeledPool pool = input_pool(cfg);
  const KernelStack stack = build_stack(build_base_kernel(pool, cfg.kernel));
  const SpectralBasis basis = decompose(stack, SpectralSource::LazyWalk);
  const MmdValue full = mmd_full(stack, pool);
  const Eigen::VectorXd f = witness(stack, pool);
  const ChosenLambda chosen = choose_lambda(cfg, &basis, &f, full.tau);
  const BoundCurve curve = bound_vs_size_curve(stack, pool, cfg.bound_curve.sizes, cfg.bound_curve.draws, master(cfg),
                                               basis, chosen.lambda, cfg.threads);
  Outputs files;
  if (cfg.wants("csv")) {
    write_text(out / "bound_curve.csv", bound_curve_csv(curve), files);
    std::string summary = "r_size,mean_quadrature_term,mean_a_norm,mean_deviation,coverage_fraction\n";
    for (const auto& s : curve.summary) {
      summary += std::to_string(s.r_size) + ',' + csv::format_double(s.mean_quadrature_term) + ',' +
                 csv::format_double(s.mean_a_norm) + ',' + csv::format_double(s.mean_deviation) + ',' +
                 csv::format_double(s.coverage_fraction) + '\n';
    }
    write_text(out / "bound_curve_summary.csv", summary, files);
  }
  if (cfg.wants("json")) {
    nlohmann::json j = {{"lambda", chosen.lambda}, {"mmd_sq", full.value_sq}, {"draws", cfg.bound_curve.draws}};
    for (const auto& s : curve.summary) {
      j["summary"].push_back({{"r_size", s.r_size},
                              {"mean_quadrature_term", s.mean_quadrature_term},
                              {"mean_a_norm", s.mean_a_norm},
                              {"mean_deviation", s.mean_deviation},
                              {"coverage_fraction", s.coverage_fraction}});
    }
    write_json(out / "bound_curve.json", j, files);
  }
  return files;
}

Outputs run_command(const RunConfig& cfg) {
  if (cfg.command == "generate") return cmd_generate(cfg);
  if (cfg.command == "test") return cmd_test(cfg);
  if (cfg.command == "power") return cmd_power(cfg);
  if (cfg.command == "spectra") return cmd_spectra(cfg);
  if (cfg.command == "bound-curve") return cmd_bound_curve(cfg);
  fail("unknown command '" + cfg.command + "'");
}

}  // namespace refmmd
