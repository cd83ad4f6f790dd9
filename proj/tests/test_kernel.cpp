#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "refmmd/csv.hpp"
#include "refmmd/error.hpp"
#include "refmmd/kernel.hpp"
#include "refmmd/refselect.hpp"

using namespace refmmd;

namespace {

LabeledPool random_pool(int n, int m, int dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, dim), y(m, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = nd(gen) + 0.3;
  return {PointCloud{x}, PointCloud{y}};
}

}  // namespace

TEST_CASE("gaussian kernel matches the closed form") {
  auto pool = random_pool(7, 6, 3, 1);
  KernelSpec spec{KernelKind::Gaussian, 0.8};
  auto k = build_base_kernel(pool, spec);
  const auto& p = pool.stacked();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    CHECK(k(i, i) == 1.0);
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      double d2 = (p.row(i) - p.row(j)).squaredNorm();
      CHECK(k(i, j) == doctest::Approx(std::exp(-d2 / 0.64)).epsilon(1e-14));
      CHECK(k(i, j) == k(j, i));
    }
  }
}

TEST_CASE("identity base kernel gives P = I") {
  auto s = build_stack(Eigen::MatrixXd::Identity(6, 6));
  CHECK(s.walk.isIdentity(0.0));
  CHECK(s.d_max == 1.0);
  CHECK(s.lazy.isIdentity(0.0));
}

TEST_CASE("all-ones base kernel gives P = J/N") {
  const int n = 5;
  auto s = build_stack(Eigen::MatrixXd::Ones(n, n));
  CHECK(s.d_max == doctest::Approx(25.0));
  CHECK((s.lazy - Eigen::MatrixXd::Constant(n, n, 1.0 / n)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("lazy walk rows sum to one and P is PSD-bounded") {
  auto pool = random_pool(10, 10, 2, 3);
  auto s = build_stack(build_base_kernel(pool, {KernelKind::Gaussian, 1.0}));
  Eigen::VectorXd rows = s.lazy.rowwise().sum();
  CHECK((rows.array() - 1.0).abs().maxCoeff() <= 1e-10);
  CHECK((s.lazy - s.lazy.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.lazy.minCoeff() >= 0.0);
  // K = k k is PSD
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.walk);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
  // degrees by direct summation of k k
  for (Eigen::Index z = 0; z < s.size(); ++z) {
    double d = 0.0;
    for (Eigen::Index a = 0; a < s.size(); ++a)
      for (Eigen::Index b = 0; b < s.size(); ++b) d += s.base(z, b) * s.base(b, a);
    CHECK(s.degrees[z] == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("build_stack rejects malformed kernels") {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 3);
  k(0, 1) = 0.5;
  CHECK_THROWS_AS(build_stack(k), Error);
  k(1, 0) = 0.5;
  CHECK_NOTHROW(build_stack(k));
  k(1, 0) = k(0, 1) = 1.5;
  CHECK_THROWS_AS(build_stack(k), Error);
  CHECK_THROWS_AS(build_stack(Eigen::MatrixXd::Ones(2, 3)), Error);
}

TEST_CASE("local covariance with identity precision is the gaussian kernel") {
  auto pool = random_pool(8, 8, 3, 4);
  std::vector<Eigen::MatrixXd> prec(16, Eigen::MatrixXd::Identity(3, 3));
  auto a = local_covariance_kernel(pool.stacked(), prec, 0.9);
  auto b = build_base_kernel(pool, {KernelKind::Gaussian, 0.9});
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("local precisions invert the neighbourhood covariance") {
  // points on a line in 2-D plus tiny noise: precision is large across the line
  Eigen::MatrixXd pts(12, 2);
  for (int i = 0; i < 12; ++i) pts.row(i) << i * 0.1, (i % 2 ? 1e-3 : -1e-3);
  auto prec = local_precisions(pts, 5, 1e-3);
  Eigen::Vector2d along(1, 0), across(0, 1);
  CHECK(across.dot(prec[6] * across) > 10.0 * along.dot(prec[6] * along));
}

TEST_CASE("reference columns are bit-identical to the full kernel") {
  auto pool = random_pool(15, 12, 3, 5);
  std::vector<Eigen::Index> refs = {0, 4, 26, 13, 7};
  for (auto spec : {KernelSpec{KernelKind::Gaussian, 0.7}, KernelSpec{KernelKind::LocalCovariance, 1.0, 6, 1e-3}}) {
    auto k = build_base_kernel(pool, spec);
    auto cols = reference_columns(pool, spec, refs);
    for (std::size_t j = 0; j < refs.size(); ++j) CHECK(cols.values.col(j) == k.col(refs[j]));
    append_reference_column(cols, pool, spec, 20);
    CHECK(cols.values.col(5) == k.col(20));
    CHECK_THROWS_AS(append_reference_column(cols, pool, spec, 20), Error);
  }
  std::vector<Eigen::Index> dup = {1, 1};
  CHECK_THROWS_AS(reference_columns(pool, {}, dup), Error);
  std::vector<Eigen::Index> oob = {27};
  CHECK_THROWS_AS(reference_columns(pool, {}, oob), Error);
}

TEST_CASE("knn must exceed the dimension") {
  auto pool = random_pool(5, 5, 3, 6);
  CHECK_THROWS_AS(build_base_kernel(pool, {KernelKind::LocalCovariance, 1.0, 3}), Error);
  CHECK_THROWS_AS(build_base_kernel(pool, {KernelKind::Gaussian, 0.0}), Error);
  CHECK_THROWS_AS(kernel_spec_from_json({{"kind", "gaussian"}, {"sigma", 1.0}}), Error);
}

TEST_CASE("degree estimate with R = all points is exact") {
  auto pool = random_pool(10, 10, 2, 7);
  KernelSpec spec{KernelKind::Gaussian, 1.0};
  auto k = build_base_kernel(pool, spec);
  std::vector<Eigen::Index> all(20);
  for (int i = 0; i < 20; ++i) all[i] = i;
  auto est = estimate_degrees(reference_columns(pool, spec, all), 20);
  Eigen::VectorXd exact = k.rowwise().sum();
  CHECK((est.base - exact).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(est.walk_proxy[3] == doctest::Approx(est.base[3] * exact.mean()));
}

TEST_CASE("degree estimate is unbiased over random reference draws") {
  auto pool = random_pool(50, 50, 2, 8);
  KernelSpec spec{KernelKind::Gaussian, 1.0};
  auto k = build_base_kernel(pool, spec);
  Eigen::VectorXd exact = k.rowwise().sum();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(100);
  const int draws = 200;
  for (int d = 0; d < draws; ++d) {
    auto refs = select_random(100, 50, 99, static_cast<std::uint32_t>(d));
    acc += estimate_degrees(reference_columns(pool, spec, refs), 100).base;
  }
  acc /= draws;
  CHECK(((acc - exact).cwiseQuotient(exact)).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("kernel export uses 17 significant digits") {
  std::filesystem::path dir = REFMMD_TEST_TMP "/kernel";
  std::filesystem::create_directories(dir);
  auto pool = random_pool(4, 4, 2, 9);
  auto k = build_base_kernel(pool, {});
  export_kernel_csv(dir / "k.csv", k);
  CHECK(csv::read_matrix(dir / "k.csv") == k);
}
