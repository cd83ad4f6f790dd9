#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace refmmd {

/// One sample: rows are points, columns are coordinates.
struct PointCloud {
  Eigen::MatrixXd points;

  Eigen::Index count() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }
  void validate() const;
};

/// X and Y with the pooled index convention: 0..n-1 are X, n..n+m-1 are Y.
struct LabeledPool {
  PointCloud x;
  PointCloud y;

  LabeledPool() = default;
  LabeledPool(PointCloud x_, PointCloud y_);

  Eigen::Index n() const noexcept { return x.count(); }
  Eigen::Index m() const noexcept { return y.count(); }
  Eigen::Index size() const noexcept { return n() + m(); }
  Eigen::Index dim() const noexcept { return x.dim(); }

  /// (n+m) x dim, X rows first.
  const Eigen::MatrixXd& stacked() const noexcept { return stacked_; }

 private:
  Eigen::MatrixXd stacked_;
};

enum class Family { GaussianAnomaly, SphereShift, Mixture3d };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Three-component anisotropic mixture in R^3. The shift for Y moves each
/// component mean by shift * shift_directions[j].
struct MixtureParams {
  std::array<Eigen::Vector3d, 3> means;
  std::array<Eigen::Matrix3d, 3> covariances;
  std::array<Eigen::Vector3d, 3> shift_directions;

  /// Means (0,0,0), (4,0,0), (0,4,0); covariance diag(1, 0.1, 0.01) rotated by
  /// I, Rz(pi/3) and Rz(-pi/4)Rx(pi/3); shift along each rotated third axis.
  static MixtureParams defaults();
};

struct GeneratorConfig {
  Family family = Family::GaussianAnomaly;
  double shift = 0.0;
  int n = 200;
  int m = 200;
  int dim = 5;
  std::uint64_t seed = 0;
  /// Empty means (2, ..., 2).
  Eigen::VectorXd anomaly_mean;
  double anomaly_scale = 0.1;
  MixtureParams mixture = MixtureParams::defaults();

  void validate() const;
  Eigen::VectorXd resolved_anomaly_mean() const;
};

/// Strict JSON mapping: unknown keys are rejected. Missing keys keep defaults;
/// dim defaults to 3 for mixture3d when absent.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& cfg);

LabeledPool generate_gaussian_anomaly(const GeneratorConfig& cfg);
LabeledPool generate_sphere_shift(const GeneratorConfig& cfg);
LabeledPool generate_mixture3d(const GeneratorConfig& cfg);

/// Mixture sample with the component index of every point.
struct MixtureSample {
  LabeledPool pool;
  std::vector<int> component_x;
  std::vector<int> component_y;
};
MixtureSample sample_mixture3d(const GeneratorConfig& cfg);

/// Dispatches on cfg.family.
LabeledPool generate(const GeneratorConfig& cfg);

LabeledPool load_pool(const std::filesystem::path& path_x, const std::filesystem::path& path_y,
                      bool skip_header = false);
void save_pool(const LabeledPool& pool, const std::filesystem::path& path_x,
               const std::filesystem::path& path_y);

}  // namespace refmmd

namespace refmmd {

/// Two isotropic Gaussians N(0, I) and N(shift * e_1, I); the data behind the
/// witness energy curves.
LabeledPool generate_shifted_gaussians(int n, int m, int dim, double shift, std::uint64_t seed);

}  // namespace refmmd
