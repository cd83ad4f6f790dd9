#include <doctest.h>

#include <cmath>
#include <random>

#include "refmmd/error.hpp"
#include "refmmd/spectral.hpp"
#include "refmmd/statistic.hpp"

using namespace refmmd;

namespace {

LabeledPool random_pool(int n, int m, int dim, std::uint64_t seed, double shift = 0.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, dim), y(m, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = nd(gen) + shift;
  return {PointCloud{x}, PointCloud{y}};
}

// Ring of N points with circulant base kernel: every degree is equal.
Eigen::MatrixXd ring_kernel(int count) {
  Eigen::MatrixXd k(count, count);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) {
      int d = std::min(std::abs(i - j), count - std::abs(i - j));
      k(i, j) = std::exp(-0.5 * d * d);
    }
  return k;
}

}  // namespace

TEST_CASE("decomposition reconstructs P and is ordered by magnitude") {
  auto pool = random_pool(20, 20, 2, 1);
  auto stack = build_stack(build_base_kernel(pool, {KernelKind::Gaussian, 0.7}));
  auto basis = decompose(stack, SpectralSource::LazyWalk);
  Eigen::MatrixXd rec = basis.vectors * basis.values.asDiagonal() * basis.vectors.transpose();
  CHECK((rec - stack.lazy).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((basis.vectors.transpose() * basis.vectors - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Eigen::Index i = 1; i < basis.size(); ++i) CHECK(std::abs(basis.values[i - 1]) >= std::abs(basis.values[i]));
  CHECK(basis.values[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (Eigen::Index j = 0; j < basis.size(); ++j) {
    Eigen::Index arg;
    basis.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    CHECK(basis.vectors(arg, j) > 0.0);
  }
  // top eigenvector of a doubly stochastic P is constant
  CHECK((basis.vectors.col(0).array() - 1.0 / std::sqrt(40.0)).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("rank-one kernel") {
  auto stack = build_stack(Eigen::MatrixXd::Ones(5, 5));
  auto basis = decompose(stack, SpectralSource::LazyWalk);
  CHECK(basis.values[0] == doctest::Approx(1.0));
  for (Eigen::Index i = 1; i < 5; ++i) CHECK(std::abs(basis.values[i]) <= 1e-12);
  CHECK((basis.vectors.col(0).array() - 1.0 / std::sqrt(5.0)).abs().maxCoeff() <= 1e-12);
  Eigen::VectorXd f(5);
  f << 1, 2, 3, 4, 5;
  auto r = project_witness(basis, f, 0.5, 1.0);
  CHECK(r.kept_count == 1);
  CHECK(r.projected_norm == doctest::Approx(3.0 * std::sqrt(5.0)));
}

TEST_CASE("projection splits energy and eps decreases with kept count") {
  auto pool = random_pool(15, 15, 2, 2);
  auto stack = build_stack(build_base_kernel(pool, {KernelKind::Gaussian, 0.6}));
  auto basis = decompose(stack, SpectralSource::LazyWalk);
  Eigen::VectorXd f = witness(stack, pool);
  double tau = mmd_full(stack, pool).tau;
  double prev = 2.0;
  for (Eigen::Index kept = 0; kept <= 30; ++kept) {
    auto r = project_top(basis, f, kept, tau);
    CHECK(r.projected_norm * r.projected_norm + r.residual_norm * r.residual_norm ==
          doctest::Approx(f.squaredNorm()).epsilon(1e-10));
    CHECK(r.eps_relative <= prev + 1e-12);
    prev = r.eps_relative;
    CHECK(r.tau_eps == doctest::Approx(tau * r.eps_relative));
    if (kept == 0) {
      CHECK(r.empty_projection);
      CHECK(r.eps_paper == 1.0);
    }
  }
  CHECK(prev <= 1e-10);
  auto all = project_witness(basis, f, 0.0, tau);
  CHECK(all.residual_norm <= 1e-10 * f.norm());
  auto none = project_witness(basis, f, 2.0, tau);
  CHECK(none.kept_count == 0);
  CHECK_THROWS_AS(energy_curve(basis, f, tau, {0}), Error);
  auto curve = energy_curve(basis, f, tau, {1, 5, 30});
  CHECK(curve.size() == 3);
  CHECK(energy_curve_csv(curve).rfind("kept_count,lambda,eps_paper,eps_relative,tau_eps\n", 0) == 0);
}

TEST_CASE("eps_paper follows the raw definition") {
  auto stack = build_stack(Eigen::MatrixXd::Identity(4, 4));
  auto basis = decompose(stack, SpectralSource::LazyWalk);
  Eigen::VectorXd f = Eigen::VectorXd::Constant(4, 1.0);
  auto r = project_top(basis, f, 4, 4.0);
  CHECK(r.eps_paper == doctest::Approx(0.5));
  auto z = project_top(basis, f, 4, 0.0);
  CHECK(z.eps_paper == 0.0);
}

TEST_CASE("Parseval for the triple-product coefficients") {
  auto pool = random_pool(12, 10, 2, 3);
  auto stack = build_stack(build_base_kernel(pool, {KernelKind::Gaussian, 0.8}));
  auto walk = decompose(stack, SpectralSource::WalkKernel);
  auto lazy = decompose(stack, SpectralSource::LazyWalk);
  auto d = triple_product_diagnostic(walk, lazy, pool, 0.5, 30);
  Eigen::VectorXd f = witness(stack, pool);
  CHECK(d.c.squaredNorm() == doctest::Approx(f.sum()).epsilon(1e-9));
  CHECK(d.diff.squaredNorm() == doctest::Approx(label_weights(12, 10).squaredNorm()).epsilon(1e-10));
  REQUIRE(d.pairs.size() == 30);
  CHECK(d.pairs[0].k == 0);
  CHECK(d.pairs[0].k2 == 0);
  CHECK(d.pairs[1].k == 0);
  CHECK(d.pairs[1].k2 == 1);
  for (std::size_t i = 1; i < d.pairs.size(); ++i) {
    auto key = [&](std::size_t j) { return std::pair(d.pairs[j].k + d.pairs[j].k2, d.pairs[j].k); };
    CHECK(key(i - 1) < key(i));
  }
  for (const auto& p : d.pairs) {
    CHECK(p.k <= p.k2);
    CHECK(p.fraction >= 0.0);
    CHECK(p.fraction <= 1.0 + 1e-12);
  }
}

TEST_CASE("constant degrees make P and K share eigenvectors") {
  auto stack = build_stack(ring_kernel(16));
  CHECK((stack.degrees.array() - stack.d_max).abs().maxCoeff() <= 1e-12);
  auto walk = decompose(stack, SpectralSource::WalkKernel);
  for (Eigen::Index j = 0; j < walk.size(); ++j) {
    Eigen::VectorXd v = walk.vectors.col(j);
    CHECK((stack.lazy * v - walk.values[j] / stack.d_max * v).norm() <= 1e-10);
  }
  auto lazy = decompose(stack, SpectralSource::LazyWalk);
  CHECK((lazy.values - walk.values / stack.d_max).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("degenerate pairs report full energy") {
  // identity kernel: eigenvectors are unit vectors, distinct pairs multiply to zero
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1), y = Eigen::MatrixXd::Zero(2, 1);
  LabeledPool pool(PointCloud{x}, PointCloud{y});
  auto stack = build_stack(Eigen::MatrixXd::Identity(4, 4));
  auto b = decompose(stack, SpectralSource::LazyWalk);
  auto d = triple_product_diagnostic(b, b, pool, 0.5, 3);
  CHECK_FALSE(d.pairs[0].degenerate);
  CHECK(d.pairs[1].degenerate);
  CHECK(d.pairs[1].fraction == 1.0);
}

TEST_CASE("spectral source names") {
  CHECK(spectral_source_from_string(to_string(SpectralSource::WalkKernel)) == SpectralSource::WalkKernel);
  CHECK(to_string(SpectralSource::LazyWalk) == "lazy-walk");
  CHECK_THROWS_AS(spectral_source_from_string("laplacian"), Error);
}
