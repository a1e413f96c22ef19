#include <gtest/gtest.h>

#include <cmath>

#include "spatialqq/distributions.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/spatial.hpp"

using namespace sqq;

namespace {

DataMatrix cross() { return DataMatrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}); }

DataMatrix normal_sample(Index n, Index d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return sample(DistributionSpec::standard_normal(d), n, rng);
}

Matrix random_rotation(Index d, RngStream& rng) {
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ();
}

DataMatrix affine(const DataMatrix& x, const Matrix& a, const Vector& b) {
  RowMatrix v = (x.values() * a.transpose()).rowwise() + b.transpose();
  return DataMatrix(std::move(v));
}

// Grid search on a 400 x 400 box followed by coordinate descent.
Vector brute_force_quantile(const DataMatrix& x, const QuantileIndex& u) {
  Vector lo = x.values().colwise().minCoeff().transpose();
  Vector hi = x.values().colwise().maxCoeff().transpose();
  const Vector pad = 0.5 * (hi - lo);
  lo -= pad;
  hi += pad;
  Vector best(2);
  double best_value = INFINITY;
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 400; ++j) {
      const Vector q = Eigen::Vector2d(lo(0) + (hi(0) - lo(0)) * (i + 0.5) / 400,
                                       lo(1) + (hi(1) - lo(1)) * (j + 0.5) / 400);
      const double v = empirical_objective(x, u, q);
      if (v < best_value) {
        best_value = v;
        best = q;
      }
    }
  }
  double step = (hi - lo).maxCoeff() / 400;
  while (step > 1e-5) {
    bool moved = false;
    for (Index k = 0; k < 2; ++k) {
      for (double sign : {-1.0, 1.0}) {
        Vector q = best;
        q(k) += sign * step;
        const double v = empirical_objective(x, u, q);
        if (v < best_value) {
          best_value = v;
          best = q;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

}  // namespace

TEST(QuantileIndex, RejectsOutsideBall) {
  EXPECT_THROW(QuantileIndex(Eigen::Vector2d(1.0, 0.0)), Error);
  const auto c = QuantileIndex::clamped(Eigen::Vector2d(3.0, 4.0), 0.99);
  EXPECT_TRUE(c.was_clamped());
  EXPECT_NEAR(c.norm(), 0.99, 1e-15);
  EXPECT_FALSE(QuantileIndex::clamped(Eigen::Vector2d(0.3, 0.4), 0.99).was_clamped());
}

TEST(SpatialRank, SymmetricCross) {
  EXPECT_NEAR(spatial_rank(Vector::Zero(2), cross()).norm(), 0.0, 1e-15);
}

TEST(SpatialRank, MiddleOrderStatistic) {
  EXPECT_NEAR(spatial_rank(Vector::Constant(1, 2.0), DataMatrix::from_rows({{1}, {2}, {3}})).norm(), 0.0, 1e-15);
}

TEST(SpatialRank, CrossVertex) {
  const auto u = spatial_rank(Eigen::Vector2d(1, 0), cross());
  EXPECT_NEAR(u.vector()(0), (1 + std::sqrt(2.0)) / 4, 1e-14);
  EXPECT_NEAR(u.vector()(1), 0.0, 1e-15);
}

TEST(Objective, ZeroAtOrigin) {
  const auto x = normal_sample(7, 3, 1);
  EXPECT_EQ(empirical_objective(x, QuantileIndex(Eigen::Vector3d(0.2, -0.1, 0.3)), Vector::Zero(3)), 0.0);
}

TEST(Objective, SinglePoint) {
  const auto x = DataMatrix::from_rows({{3, 4}});
  const QuantileIndex u(Vector::Zero(2));
  EXPECT_NEAR(empirical_objective(x, u, Eigen::Vector2d(3, 4)), -5.0, 1e-14);
  EXPECT_GT(empirical_objective(x, u, Eigen::Vector2d(3.1, 4)), -5.0);
  EXPECT_THROW(spatial_quantile(x, u), Error);
}

TEST(Solver, OneDimensionalRule) {
  const auto x = DataMatrix::from_rows({{1}, {2}, {3}, {4}, {5}});
  EXPECT_DOUBLE_EQ(spatial_quantile(x, QuantileIndex(Vector::Constant(1, 0.5))).point(0), 4.0);
  EXPECT_DOUBLE_EQ(spatial_quantile(x, QuantileIndex(Vector::Constant(1, 0.0))).point(0), 3.0);
  EXPECT_DOUBLE_EQ(spatial_quantile(x, QuantileIndex(Vector::Constant(1, -0.9))).point(0), 1.0);
}

TEST(Solver, SpatialMedianOfCross) {
  const auto r = spatial_quantile(cross(), QuantileIndex(Vector::Zero(2)));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.point.norm(), 0.0, 1e-10);
}

TEST(Solver, RoundTripAtDataPoints) {
  for (Index d : {2, 3, 6}) {
    const auto x = normal_sample(30, d, 10 + static_cast<std::uint64_t>(d));
    const QuantileSolver solver(x);
    for (Index k = 0; k < x.rows(); ++k) {
      const auto r = solver.solve(spatial_rank(x.row(k), x));
      EXPECT_LT((r.point - x.row(k)).norm(), 1e-6) << "d=" << d << " k=" << k;
    }
  }
}

TEST(Solver, MatchesBruteForceMinimizer) {
  const QuantileIndex u(Eigen::Vector2d(0.3, 0.2));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = normal_sample(10, 2, 100 + seed);
    const Vector q = spatial_quantile(x, u).point;
    EXPECT_LT((q - brute_force_quantile(x, u)).norm(), 1e-3) << seed;
  }
}

TEST(Solver, ConvexityCertificate) {
  const auto x = normal_sample(50, 3, 5);
  const QuantileIndex u(Eigen::Vector3d(0.4, -0.3, 0.5));
  const auto r = spatial_quantile(x, u);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.grad_norm, 1e-8);
  const double f = empirical_objective(x, u, r.point);
  for (Index k = 0; k < 3; ++k) {
    for (double s : {-0.01, 0.01}) {
      Vector q = r.point;
      q(k) += s;
      EXPECT_LE(f, empirical_objective(x, u, q));
    }
  }
}

TEST(Solver, NewtonObjectiveDecreases) {
  const auto x = normal_sample(200, 4, 6);
  const QuantileSolver solver(x);
  std::vector<double> trace;
  solver.solve(QuantileIndex(Eigen::Vector4d(0.5, 0.1, -0.2, 0.3)), &trace);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
}

TEST(Solver, CollinearSampleStillConverges) {
  RowMatrix v(20, 2);
  for (Index i = 0; i < 20; ++i) v.row(i) << static_cast<double>(i), 2.0 * static_cast<double>(i);
  const auto r = spatial_quantile(DataMatrix(v), QuantileIndex(Eigen::Vector2d(0.1, 0.2)));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.point(1), 2.0 * r.point(0), 1e-6);
}

TEST(Solver, IdenticalObservationsAreDegenerate) {
  try {
    QuantileSolver s(DataMatrix::from_rows({{1, 1}, {1, 1}, {1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateSample);
  }
}

TEST(Solver, Equivariance) {
  RngStream rng(21, 0);
  for (int rep = 0; rep < 5; ++rep) {
    const Index d = 2 + rep % 3;
    const auto x = normal_sample(40, d, 200 + static_cast<std::uint64_t>(rep));
    const Matrix a = random_rotation(d, rng);
    const Vector b = rng.normal_vector(d);
    const Vector u = 0.7 * rng.normal_vector(d).normalized();
    const Vector q = spatial_quantile(x, QuantileIndex(u)).point;
    const Vector qr = spatial_quantile(affine(x, a, b), QuantileIndex(a * u)).point;
    EXPECT_LT((qr - (a * q + b)).norm(), 1e-5);
    const Vector qs = spatial_quantile(affine(x, 2.5 * Matrix::Identity(d, d), Vector::Zero(d)), QuantileIndex(u)).point;
    EXPECT_LT((qs - 2.5 * q).norm(), 1e-5);
  }
}

TEST(QuantileField, ZeroGridIsSpatialMedian) {
  const auto x = normal_sample(25, 2, 8);
  const auto f = quantile_field(x, {QuantileIndex(Vector::Zero(2))});
  ASSERT_EQ(f.values.size(), 1u);
  EXPECT_LT((f.values[0].point - spatial_quantile(x, QuantileIndex(Vector::Zero(2))).point).norm(), 1e-12);
}

TEST(QuantileField, BallGridConverges) {
  const auto x = normal_sample(100, 3, 9);
  RngStream rng(9, 1);
  const auto grid = uniform_ball_grid(1000, 3, 0.99, rng);
  ASSERT_EQ(grid.size(), 1000u);
  for (const auto& u : grid) EXPECT_LE(u.norm(), 0.99 + 1e-12);
  EXPECT_GE(quantile_field(x, grid).converged_fraction(), 0.99);
}

TEST(QuantileField, AntipodalForSphericalSample) {
  const auto x = normal_sample(10000, 2, 12);
  const auto xs = apply_standardization(x, fit_standardization(x));
  const Vector u = Eigen::Vector2d(0.3, 0.4);
  const auto f = quantile_field(xs, {QuantileIndex(u), QuantileIndex(Vector(-u))});
  EXPECT_LT((f.values[0].point + f.values[1].point).norm(), 0.1);
}

TEST(BallGrid, UniformRadialLaw) {
  // P(|u| <= r) = (r / R)^d.
  RngStream rng(4, 4);
  const auto grid = uniform_ball_grid(20000, 3, 0.99, rng);
  double inside = 0.0;
  for (const auto& u : grid) inside += u.norm() <= 0.5;
  EXPECT_NEAR(inside / 20000, std::pow(0.5 / 0.99, 3), 0.01);
}
