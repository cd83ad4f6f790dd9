#include "refmmd/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/rng.hpp"

namespace refmmd {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error("datagen", message); }

Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

Eigen::MatrixXd standard_normal(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  return out;
}

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) fail(std::string(what) + ": expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void PointCloud::validate() const {
  if (points.rows() < 1 || points.cols() < 1) fail("point cloud must have at least one point and one dimension");
  if (!points.allFinite()) fail("point cloud contains non-finite coordinates");
}

LabeledPool::LabeledPool(PointCloud x_, PointCloud y_) : x(std::move(x_)), y(std::move(y_)) {
  x.validate();
  y.validate();
  if (x.dim() != y.dim()) {
    fail("dimension mismatch: X has " + std::to_string(x.dim()) + " columns, Y has " + std::to_string(y.dim()));
  }
  if (x.count() < 2 || y.count() < 2) fail("each sample needs at least 2 points");
  stacked_.resize(x.count() + y.count(), x.dim());
  stacked_.topRows(x.count()) = x.points;
  stacked_.bottomRows(y.count()) = y.points;
}

std::string to_string(Family family) {
  switch (family) {
    case Family::GaussianAnomaly: return "gaussian-anomaly";
    case Family::SphereShift: return "sphere-shift";
    case Family::Mixture3d: return "mixture3d";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::GaussianAnomaly, Family::SphereShift, Family::Mixture3d}) {
    if (to_string(f) == name) return f;
  }
  fail("unknown family '" + name + "'");
}

MixtureParams MixtureParams::defaults() {
  const Eigen::Matrix3d base = Eigen::Vector3d(1.0, 0.1, 0.01).asDiagonal();
  const std::array<Eigen::Matrix3d, 3> rotations = {
      Eigen::Matrix3d::Identity(), rot_z(std::numbers::pi / 3),
      rot_z(-std::numbers::pi / 4) * rot_x(std::numbers::pi / 3)};
  MixtureParams p;
  p.means = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(4, 0, 0), Eigen::Vector3d(0, 4, 0)};
  for (int j = 0; j < 3; ++j) {
    p.covariances[j] = rotations[j] * base * rotations[j].transpose();
    p.shift_directions[j] = rotations[j].col(2);
  }
  return p;
}

void GeneratorConfig::validate() const {
  if (!(shift >= 0.0) || !std::isfinite(shift)) fail("shift must be finite and >= 0");
  if (n < 2 || m < 2) fail("n and m must be >= 2");
  if (dim < 1) fail("dim must be >= 1");
  switch (family) {
    case Family::GaussianAnomaly:
      if (shift > 1.0) fail("gaussian-anomaly shift is a probability and must be <= 1");
      if (anomaly_mean.size() != 0 && anomaly_mean.size() != dim) fail("anomaly_mean length must equal dim");
      if (!(anomaly_scale > 0.0)) fail("anomaly_scale must be > 0");
      break;
    case Family::SphereShift:
      if (dim < 2) fail("sphere-shift needs dim >= 2");
      break;
    case Family::Mixture3d:
      if (dim != 3) fail("mixture3d requires dim == 3");
      for (const auto& c : mixture.covariances) {
        if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12) fail("mixture covariance must be symmetric");
        if (Eigen::LLT<Eigen::Matrix3d>(c).info() != Eigen::Success) fail("mixture covariance must be positive definite");
      }
      for (const auto& d : mixture.shift_directions) {
        if (std::abs(d.norm() - 1.0) > 1e-9) fail("mixture shift directions must be unit vectors");
      }
      break;
  }
}

Eigen::VectorXd GeneratorConfig::resolved_anomaly_mean() const {
  return anomaly_mean.size() == 0 ? Eigen::VectorXd::Constant(dim, 2.0) : anomaly_mean;
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "family", "shift", "n", "m", "dim", "seed", "anomaly_mean", "anomaly_scale",
      "mixture_means", "mixture_covariances", "mixture_shift_directions"};
  if (!j.is_object()) fail("generator config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail("unknown generator config key '" + key + "'");
  }
  GeneratorConfig cfg;
  try {
    if (j.contains("family")) cfg.family = family_from_string(j.at("family").get<std::string>());
    if (cfg.family == Family::Mixture3d) cfg.dim = 3;
    if (j.contains("shift")) cfg.shift = j.at("shift").get<double>();
    if (j.contains("n")) cfg.n = j.at("n").get<int>();
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("anomaly_mean")) {
      const auto v = j.at("anomaly_mean").get<std::vector<double>>();
      cfg.anomaly_mean = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (j.contains("anomaly_scale")) cfg.anomaly_scale = j.at("anomaly_scale").get<double>();
    auto triple = [&](const char* key) -> const nlohmann::json& {
      const auto& arr = j.at(key);
      if (!arr.is_array() || arr.size() != 3) fail(std::string(key) + ": expected 3 entries");
      return arr;
    };
    if (j.contains("mixture_means")) {
      const auto& arr = triple("mixture_means");
      for (int c = 0; c < 3; ++c) cfg.mixture.means[c] = vec3_from_json(arr[c], "mixture_means");
    }
    if (j.contains("mixture_shift_directions")) {
      const auto& arr = triple("mixture_shift_directions");
      for (int c = 0; c < 3; ++c) cfg.mixture.shift_directions[c] = vec3_from_json(arr[c], "mixture_shift_directions");
    }
    if (j.contains("mixture_covariances")) {
      const auto& arr = triple("mixture_covariances");
      for (int c = 0; c < 3; ++c) {
        if (!arr[c].is_array() || arr[c].size() != 3) fail("mixture_covariances: expected 3x3 matrices");
        for (int r = 0; r < 3; ++r) cfg.mixture.covariances[c].row(r) = vec3_from_json(arr[c][r], "mixture_covariances").transpose();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const GeneratorConfig& cfg) {
  nlohmann::json j;
  j["family"] = to_string(cfg.family);
  j["shift"] = cfg.shift;
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  j["dim"] = cfg.dim;
  j["seed"] = cfg.seed;
  if (cfg.family == Family::GaussianAnomaly) {
    const Eigen::VectorXd mean = cfg.resolved_anomaly_mean();
    j["anomaly_mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
    j["anomaly_scale"] = cfg.anomaly_scale;
  }
  if (cfg.family == Family::Mixture3d) {
    auto v3 = [](const Eigen::Vector3d& v) { return std::vector<double>{v[0], v[1], v[2]}; };
    for (int c = 0; c < 3; ++c) {
      j["mixture_means"].push_back(v3(cfg.mixture.means[c]));
      j["mixture_shift_directions"].push_back(v3(cfg.mixture.shift_directions[c]));
      nlohmann::json cov;
      for (int r = 0; r < 3; ++r) cov.push_back(v3(cfg.mixture.covariances[c].row(r).transpose()));
      j["mixture_covariances"].push_back(cov);
    }
  }
  return j;
}

LabeledPool generate_gaussian_anomaly(const GeneratorConfig& cfg) {
  if (cfg.family != Family::GaussianAnomaly) fail("config family is not gaussian-anomaly");
  cfg.validate();
  RandomStream rx(cfg.seed, 0, streams::kSampleX);
  RandomStream ry(cfg.seed, 0, streams::kSampleY);
  PointCloud x{standard_normal(rx, cfg.n, cfg.dim)};

  const Eigen::RowVectorXd mean = cfg.resolved_anomaly_mean().transpose();
  const double sd = std::sqrt(cfg.anomaly_scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  PointCloud y{Eigen::MatrixXd(cfg.m, cfg.dim)};
  for (int i = 0; i < cfg.m; ++i) {
    const bool anomalous = unit(ry) < cfg.shift;
    for (int c = 0; c < cfg.dim; ++c) {
      const double z = normal(ry);
      y.points(i, c) = anomalous ? mean[c] + sd * z : z;
    }
  }
  return {std::move(x), std::move(y)};
}

LabeledPool generate_sphere_shift(const GeneratorConfig& cfg) {
  if (cfg.family != Family::SphereShift) fail("config family is not sphere-shift");
  cfg.validate();
  auto sphere = [&](std::uint32_t stream, int count) {
    RandomStream rng(cfg.seed, 0, stream);
    Eigen::MatrixXd p = standard_normal(rng, count, cfg.dim);
    p.rowwise().normalize();
    return p;
  };
  PointCloud x{sphere(streams::kSampleX, cfg.n)};
  PointCloud y{sphere(streams::kSampleY, cfg.m)};
  y.points.col(0) *= 1.0 + cfg.shift;
  return {std::move(x), std::move(y)};
}

MixtureSample sample_mixture3d(const GeneratorConfig& cfg) {
  if (cfg.family != Family::Mixture3d) fail("config family is not mixture3d");
  cfg.validate();
  std::array<Eigen::Matrix3d, 3> factors;
  for (int c = 0; c < 3; ++c) factors[c] = Eigen::LLT<Eigen::Matrix3d>(cfg.mixture.covariances[c]).matrixL();

  auto draw = [&](std::uint32_t stream, int count, double shift, std::vector<int>& labels) {
    RandomStream rng(cfg.seed, 0, stream);
    std::uniform_int_distribution<int> pick(0, 2);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd p(count, 3);
    labels.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int c = pick(rng);
      labels[static_cast<std::size_t>(i)] = c;
      Eigen::Vector3d z;
      for (int k = 0; k < 3; ++k) z[k] = normal(rng);
      p.row(i) = (cfg.mixture.means[c] + shift * cfg.mixture.shift_directions[c] + factors[c] * z).transpose();
    }
    return p;
  };
  MixtureSample s;
  PointCloud x{draw(streams::kSampleX, cfg.n, 0.0, s.component_x)};
  PointCloud y{draw(streams::kSampleY, cfg.m, cfg.shift, s.component_y)};
  s.pool = LabeledPool(std::move(x), std::move(y));
  return s;
}

LabeledPool generate_mixture3d(const GeneratorConfig& cfg) { return sample_mixture3d(cfg).pool; }

LabeledPool generate(const GeneratorConfig& cfg) {
  switch (cfg.family) {
    case Family::GaussianAnomaly: return generate_gaussian_anomaly(cfg);
    case Family::SphereShift: return generate_sphere_shift(cfg);
    case Family::Mixture3d: return generate_mixture3d(cfg);
  }
  fail("unknown family");
}

LabeledPool load_pool(const std::filesystem::path& path_x, const std::filesystem::path& path_y, bool skip_header) {
  PointCloud x{csv::read_matrix(path_x, skip_header)};
  PointCloud y{csv::read_matrix(path_y, skip_header)};
  return {std::move(x), std::move(y)};
}

void save_pool(const LabeledPool& pool, const std::filesystem::path& path_x, const std::filesystem::path& path_y) {
  csv::write_matrix(path_x, pool.x.points);
  csv::write_matrix(path_y, pool.y.points);
}

}  // namespace refmmd

namespace refmmd {

LabeledPool generate_shifted_gaussians(int n, int m, int dim, double shift, std::uint64_t seed) {
  if (n < 2 || m < 2 || dim < 1) fail("shifted gaussians need n, m >= 2 and dim >= 1");
  RandomStream rx(seed, 0, streams::kSampleX);
  RandomStream ry(seed, 0, streams::kSampleY);
  PointCloud x{standard_normal(rx, n, dim)};
  PointCloud y{standard_normal(ry, m, dim)};
  y.points.col(0).array() += shift;
  return {std::move(x), std::move(y)};
}

}  // namespace refmmd
