#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "spatialqq/error.hpp"
#include "spatialqq/numerics.hpp"
#include "spatialqq/parallel.hpp"

using namespace sqq;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(DataMatrix, RejectsNonFinite) {
  RowMatrix v(1, 2);
  v << 1.0, std::nan("");
  EXPECT_EQ(kind_of([&] { DataMatrix m(v); }), ErrorKind::InvalidArgument);
}

TEST(DataMatrix, DefaultNames) {
  const auto x = DataMatrix::from_rows({{1, 2, 3}});
  ASSERT_EQ(x.names().size(), 3u);
  EXPECT_EQ(x.names()[0], "x1");
  EXPECT_EQ(x.names()[2], "x3");
}

TEST(Standardization, TwoPointCloudIsSingular) {
  const auto x = DataMatrix::from_rows({{0, 0}, {2, 0}});
  EXPECT_EQ(kind_of([&] { fit_standardization(x); }), ErrorKind::SingularDispersion);
}

TEST(Standardization, CrossHasHalfIdentityDispersion) {
  const auto x = DataMatrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  const auto t = fit_standardization(x);
  EXPECT_NEAR(t.mean.norm(), 0.0, 1e-15);
  EXPECT_NEAR((t.dispersion - 0.5 * Matrix::Identity(2, 2)).norm(), 0.0, 1e-15);
}

TEST(Standardization, LargeStandardSample) {
  RngStream rng(11, 0);
  RowMatrix v(100000, 3);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < 3; ++j) v(i, j) = rng.normal();
  const auto t = fit_standardization(DataMatrix(v));
  EXPECT_LT(t.mean.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((t.dispersion - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Standardization, IdentityLeavesDataUnchanged) {
  const auto x = DataMatrix::from_rows({{1.5, -2}, {0.25, 7}});
  const auto y = apply_standardization(x, StandardizationTransform::identity(2));
  EXPECT_EQ(x.values(), y.values());
}

TEST(Standardization, RoundTripGivesZeroMeanIdentityDispersion) {
  RngStream rng(3, 0);
  RowMatrix v(50, 3);
  for (Index i = 0; i < v.rows(); ++i) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    v.row(i) << 2 + a, a + 0.5 * b, -1 + 3 * c + b;
  }
  const auto z = apply_standardization(DataMatrix(v), fit_standardization(DataMatrix(v)));
  const auto t = fit_standardization(z);
  EXPECT_LT(t.mean.norm(), 1e-10);
  EXPECT_LT((t.dispersion - Matrix::Identity(3, 3)).norm(), 1e-10);
}

TEST(Standardization, OneDimensionalHandCase) {
  const auto x = DataMatrix::from_rows({{1}, {3}});
  const auto t = fit_standardization(x);
  EXPECT_DOUBLE_EQ(t.mean(0), 2.0);
  EXPECT_DOUBLE_EQ(t.dispersion(0, 0), 1.0);
  const auto z = apply_standardization(x, t);
  EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(SymEigen, Identity) {
  const auto e = sym_eigen(Matrix::Identity(3, 3));
  EXPECT_NEAR((e.values - Vector::Ones(3)).norm(), 0.0, 1e-14);
}

TEST(SymEigen, RotatedDiagonalIsDescending) {
  const double c = std::sqrt(0.5);
  Matrix r(2, 2);
  r << c, -c, c, c;
  const Matrix m = r * Eigen::Vector2d(1, 3).asDiagonal() * r.transpose();
  const auto e = sym_eigen(m);
  EXPECT_NEAR(e.values(0), 3.0, 1e-12);
  EXPECT_NEAR(e.values(1), 1.0, 1e-12);
  EXPECT_NEAR((e.vectors.transpose() * e.vectors - Matrix::Identity(2, 2)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m * e.vectors.col(0) - 3.0 * e.vectors.col(0)).norm(), 0.0, 1e-12);
}

TEST(SymEigen, SmallNegativeEigenvalueIsPassedThrough) {
  const Matrix m = Eigen::Vector2d(1.0, -1e-6).asDiagonal();
  EXPECT_NEAR(sym_eigen(m).values(1), -1e-6, 1e-15);
}

TEST(SymEigen, RejectsAsymmetric) {
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_EQ(kind_of([&] { sym_eigen(m); }), ErrorKind::NotSymmetric);
}

TEST(Cholesky, Diagonal) {
  const auto c = cholesky(Eigen::Vector2d(4, 9).asDiagonal());
  EXPECT_NEAR((c.factor - Matrix(Eigen::Vector2d(2, 3).asDiagonal())).norm(), 0.0, 1e-14);
  EXPECT_EQ(c.jitter, 0.0);
}

TEST(Cholesky, HandFactor) {
  Matrix m(2, 2);
  m << 2, 1, 1, 2;
  Matrix expected(2, 2);
  expected << std::sqrt(2.0), 0, 1 / std::sqrt(2.0), std::sqrt(1.5);
  EXPECT_NEAR((cholesky(m).factor - expected).norm(), 0.0, 1e-14);
}

TEST(Cholesky, ZeroMatrix) {
  const auto c = cholesky(Matrix::Zero(3, 3));
  EXPECT_EQ(c.factor.norm(), 0.0);
  EXPECT_EQ(c.jitter, 0.0);
}

TEST(Cholesky, SemidefiniteRankOne) {
  const Vector v = Eigen::Vector3d(1, 2, 3);
  const Matrix m = v * v.transpose();
  const auto c = cholesky(m);
  EXPECT_NEAR((c.factor * c.factor.transpose() - m).norm(), 0.0, 1e-5);
}

TEST(Cholesky, IndefiniteIsRejected) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  EXPECT_EQ(kind_of([&] { cholesky(m); }), ErrorKind::NotFactorizable);
}

TEST(RngStream, ReplaysAndSeparatesStreams) {
  RngStream a(5, 1), b(5, 1), c(5, 2);
  const double x = a.uniform();
  EXPECT_EQ(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  RngStream parent(5, 1);
  EXPECT_EQ(parent.derive(9).normal(), RngStream(5, 1).derive(9).normal());
  EXPECT_NE(parent.derive(9).normal(), parent.derive(10).normal());
}

TEST(RngStream, BelowStaysInRange) {
  RngStream r(1, 1);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Numerics, NormalCdf) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(Parallel, ResultsDoNotDependOnThreadCount) {
  auto fill = [](unsigned threads) {
    set_thread_count(threads);
    std::vector<double> out(257);
    parallel_for(out.size(), [&](std::size_t i) {
      RngStream s(42, 0);
      out[i] = s.derive(i).normal();
    });
    return out;
  };
  const auto one = fill(1), four = fill(4);
  set_thread_count(0);
  EXPECT_EQ(one, four);
}

TEST(Parallel, PropagatesExceptions) {
  set_thread_count(3);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 7) throw Error(ErrorKind::InvalidArgument, "boom");
               }),
               Error);
  set_thread_count(0);
}
