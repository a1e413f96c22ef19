#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spatialqq/distributions.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/gof.hpp"

using namespace sqq;

namespace {

DataMatrix draw(const char* spec, Index n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return sample(DistributionSpec::parse(spec), n, rng);
}

std::vector<QuantileIndex> ball(Index m, Index d, std::uint64_t seed) {
  RngStream rng(seed, 1);
  return uniform_ball_grid(m, d, 0.99, rng);
}

std::vector<Vector> model_at(const char* spec, const std::vector<QuantileIndex>& grid) {
  const auto mq = ModelQuantileFunction::automatic(DistributionSpec::parse(spec));
  std::vector<Vector> q;
  for (const auto& u : grid) q.push_back(mq(u));
  return q;
}

double kolmogorov_distance(const NullDistribution& a, const NullDistribution& b) {
  const auto& x = a.sorted();
  const auto& y = b.sorted();
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return best;
}

GofConfig small_config(std::uint64_t seed) {
  GofConfig cfg;
  cfg.grid_size = 200;
  cfg.null_replicates = 300;
  cfg.expectation_draws = 4000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(NullDistribution, DecisionsAgree) {
  RngStream rng(1, 0);
  std::vector<double> reps;
  for (int i = 0; i < 999; ++i) reps.push_back(rng.chi_square(3));
  for (auto scheme : {NullScheme::EigenWeightedChiSquare, NullScheme::Enumeration}) {
    const NullDistribution null(reps, scheme);
    for (double alpha : {0.01, 0.05, 0.1, 0.5}) {
      const double c = null.critical_value(alpha);
      for (int k = 0; k < 200; ++k) {
        const double s = rng.chi_square(3) * 1.5;
        EXPECT_EQ(s > c, null.p_value(s) < alpha);
        const double lc = null.lower_critical_value(alpha);
        EXPECT_EQ(s < lc, null.lower_p_value(s) < alpha);
      }
    }
    EXPECT_GE(null.critical_value(0.01), null.critical_value(0.05));
    EXPECT_GE(null.critical_value(0.05), null.critical_value(0.10));
  }
}

TEST(NullDistribution, MonteCarloPValueCountsTheObservation) {
  const NullDistribution null({1, 2, 3, 4}, NullScheme::CholeskyProcess);
  EXPECT_DOUBLE_EQ(null.p_value(10), 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(null.p_value(2.5), 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(null.p_value(0), 1.0);
  const NullDistribution exact({1, 2, 3, 4}, NullScheme::Enumeration);
  EXPECT_DOUBLE_EQ(exact.p_value(4), 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(exact.lower_p_value(1), 1.0 / 4.0);
}

TEST(Report, JsonIsStable) {
  const auto r = make_report("t", 1.5, NullDistribution({1, 2, 3}, NullScheme::Permutation), 0.05);
  EXPECT_EQ(r.to_json(), r.to_json());
  EXPECT_NE(r.to_json().find("\"test\": \"t\""), std::string::npos);
  EXPECT_THROW(make_report("t", 1, NullDistribution({1}, NullScheme::Permutation), 1.5), Error);
}

TEST(Kernel, SphericalDiagonalAtZero) {
  const auto f0 = DistributionSpec::standard_normal(3);
  const std::vector<QuantileIndex> grid = {QuantileIndex(Vector::Zero(3))};
  RngStream rng(2, 2);
  const auto k = estimate_kernel(f0, grid, model_at("normal d=3", grid), 100000, rng);
  EXPECT_LT((k.d2(0, 0) - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Kernel, ScoreHasMeanZeroAtModelQuantiles) {
  const auto spec = DistributionSpec::standard_normal(2);
  const auto grid = ball(30, 2, 3);
  const auto q = model_at("normal d=2", grid);
  RngStream rng(4, 0);
  const auto x = sample(spec, 200000, rng);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vector mean = Vector::Zero(2), sq = Vector::Zero(2);
    for (Index j = 0; j < x.rows(); ++j) {
      const Vector diff = x.row(j) - q[i];
      const Vector s = diff / diff.norm() + grid[i].vector();
      mean += s;
      sq += s.cwiseProduct(s);
    }
    mean /= static_cast<double>(x.rows());
    const Vector se = ((sq / static_cast<double>(x.rows()) - mean.cwiseProduct(mean)) / x.rows()).cwiseSqrt();
    // The model quantile itself carries Monte Carlo error of similar size.
    EXPECT_LT((mean.cwiseAbs().array() / se.array()).maxCoeff(), 4.0) << "u=" << grid[i].vector().transpose();
  }
}

TEST(Kernel, DuplicatedPooledSampleMatchesSingleSample) {
  const auto x = draw("normal d=2", 40, 5);
  const auto grid = ball(10, 2, 6);
  const QuantileSolver sx(x);
  std::vector<Vector> q;
  for (const auto& u : grid) q.push_back(sx.solve(u).point);
  const auto once = estimate_kernel(x, grid, q, 1.0);
  const auto twice = estimate_kernel(pool(x, x), grid, q, 1.0);
  EXPECT_LT((once.covariance() - twice.covariance()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kernel, GramMatchesExplicitFactor) {
  const auto f0 = DistributionSpec::standard_normal(2);
  const auto grid = ball(5, 2, 7);
  const auto q = model_at("normal d=2", grid);
  RngStream a(8, 0), b(8, 0);
  const auto k = estimate_kernel(f0, grid, q, 1500, a);
  ASSERT_FALSE(k.has_factor());
  const auto draws = sample(f0, 1500, b);
  Matrix w(1500, 10);
  for (Index j = 0; j < 1500; ++j) {
    for (Index i = 0; i < 5; ++i) {
      const Vector diff = draws.row(j) - q[static_cast<std::size_t>(i)];
      const Vector s = diff / diff.norm() + grid[static_cast<std::size_t>(i)].vector();
      w.block(j, 2 * i, 1, 2) = s.transpose() * k.d1_inverse[static_cast<std::size_t>(i)];
    }
  }
  const Matrix expected = w.transpose() * w / 1500.0;
  EXPECT_LT((k.covariance() - expected).cwiseAbs().maxCoeff(), 1e-10);
  const Vector ev = k.eigenvalues();
  EXPECT_NEAR(ev.sum(), expected.trace(), 1e-8 * ev.sum());
  EXPECT_GE(ev.minCoeff(), 0.0);

  RngStream c(8, 0);
  const auto narrow = estimate_kernel(f0, grid, q, 8, c);
  EXPECT_TRUE(narrow.has_factor());
}

TEST(NullOneSample, IdentityKernelHasMeanDim) {
  RngStream rng(10, 0);
  const Index m = 50, d = 3;
  const auto null = weighted_chi_square_null(Vector::Ones(m * d), m, 20000, rng);
  double mean = 0.0;
  for (double v : null.sorted()) mean += v;
  EXPECT_NEAR(mean / 20000, 3.0, 0.02);
}

TEST(NullOneSample, SchemesAgree) {
  const auto f0 = DistributionSpec::standard_normal(2);
  const auto grid = ball(60, 2, 11);
  RngStream k_rng(12, 0);
  const auto kernel = estimate_kernel(f0, grid, model_at("normal d=2", grid), 3000, k_rng);
  RngStream a(13, 0), b(14, 0);
  const auto eig = null_one_sample(kernel, 5000, a, NullScheme::EigenWeightedChiSquare, nullptr);
  double jitter = -1;
  const auto chol = null_one_sample(kernel, 5000, b, NullScheme::CholeskyProcess, &jitter);
  EXPECT_GE(jitter, 0.0);
  EXPECT_LT(kolmogorov_distance(eig, chol), 0.04);
}

TEST(StatisticOneSample, SelfComparisonIsZero) {
  const auto x = draw("normal d=2", 30, 15);
  const auto grid = ball(100, 2, 16);
  const QuantileSolver sx(x);
  std::vector<Vector> q;
  for (const auto& u : grid) q.push_back(sx.solve(u).point);
  EXPECT_NEAR(statistic_one_sample(x, q, grid), 0.0, 1e-12);
}

TEST(StatisticOneSample, DuplicationDoublesTheStatistic) {
  const auto x = draw("normal d=2", 30, 17);
  const auto grid = ball(100, 2, 18);
  const auto q = model_at("normal d=2", grid);
  const double once = statistic_one_sample(x, q, grid);
  EXPECT_NEAR(statistic_one_sample(pool(x, x), q, grid), 2.0 * once, 1e-6 * once);
}

TEST(StatisticOneSample, RotationInvariant) {
  RngStream rng(19, 0);
  Matrix a(3, 3);
  for (Index i = 0; i < 9; ++i) a(i) = rng.normal();
  const Matrix r = Eigen::HouseholderQR<Matrix>(a).householderQ();
  const auto x = draw("normal d=3", 50, 20);
  const DataMatrix rx(RowMatrix(x.values() * r.transpose()));
  const auto grid = ball(200, 3, 21);
  std::vector<QuantileIndex> rgrid;
  for (const auto& u : grid) rgrid.emplace_back(r * u.vector());
  const double s = statistic_one_sample(x, model_at("normal d=3", grid), grid);
  const double rs = statistic_one_sample(rx, model_at("normal d=3", rgrid), rgrid);
  EXPECT_NEAR(s, rs, 1e-5 * s);
}

TEST(OneSampleTest, DeterministicReport) {
  const auto x = draw("normal d=2", 60, 22);
  const auto f0 = DistributionSpec::standard_normal(2);
  EXPECT_EQ(test_one_sample(x, f0, 0.05, small_config(5)).to_json(),
            test_one_sample(x, f0, 0.05, small_config(5)).to_json());
}

TEST(OneSampleTest, ShiftHasPower) {
  const OneSampleTest test(DistributionSpec::standard_normal(3), small_config(23));
  const auto shifted = DistributionSpec::normal(Vector::Constant(3, 0.3), Matrix::Identity(3, 3));
  int rejections = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(3000 + r, 0);
    rejections += test.run(sample(shifted, 100, rng), 0.05).reject;
  }
  EXPECT_GT(rejections, reps / 2);
}

// Estimated location and scatter soak up most of the null variance, so the
// known-parameter null is conservative; the statistic still orders the laws.
TEST(OneSampleTest, StandardizedNullIsConservative) {
  GofConfig cfg = small_config(23);
  cfg.standardize = true;
  const OneSampleTest test(DistributionSpec::standard_normal(3), cfg);
  int rejections = 0;
  double normal_mean = 0.0, laplace_mean = 0.0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto rep = test.run(draw("normal d=3", 100, 3000 + r), 0.05);
    EXPECT_FALSE(rep.notes.empty());
    rejections += rep.reject;
    normal_mean += rep.statistic / reps;
    laplace_mean += test.run(draw("laplace d=3", 100, 5000 + r), 0.05).statistic / reps;
  }
  EXPECT_LE(rejections, 2);
  EXPECT_GT(laplace_mean, 2.0 * normal_mean);
}

TEST(OneSampleTest, ReportsCarryDiagnostics) {
  GofConfig cfg = small_config(24);
  cfg.scheme = NullScheme::CholeskyProcess;
  const auto r = test_one_sample(draw("normal d=2", 40, 25), DistributionSpec::standard_normal(2), 0.05, cfg);
  EXPECT_EQ(r.null_scheme, to_string(NullScheme::CholeskyProcess));
  EXPECT_EQ(r.null_replicates, 300);
  EXPECT_EQ(r.grid_size, 200);
  EXPECT_EQ(r.diagnostic("n"), 40.0);
  EXPECT_GT(r.diagnostic("converged_fraction"), 0.99);
  EXPECT_EQ(r.reject, r.p_value < 0.05);
}

TEST(OneSampleTest, ShapeMismatch) {
  try {
    test_one_sample(draw("normal d=2", 40, 26), DistributionSpec::standard_normal(3), 0.05, small_config(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(StatisticTwoSample, IdenticalAndSwapped) {
  const auto x = draw("normal d=2", 40, 27), y = draw("normal d=2", 30, 28);
  const auto grid = ball(150, 2, 29);
  EXPECT_NEAR(statistic_two_sample(x, x, grid), 0.0, 1e-12);
  const double a = statistic_two_sample(x, y, grid), b = statistic_two_sample(y, x, grid);
  EXPECT_NEAR(a, b, 1e-9 * a);
}

TEST(TwoSampleTest, SwappedUnequalSizesAgree) {
  const auto x = draw("normal d=2", 150, 30), y = draw("normal d=2", 50, 31);
  const auto cfg = small_config(32);
  const auto a = test_two_sample(x, y, 0.05, cfg), b = test_two_sample(y, x, 0.05, cfg);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-9 * a.statistic);
  EXPECT_NEAR(a.critical_value, b.critical_value, 1e-9 * a.critical_value);
  EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
}

TEST(TwoSampleTest, NormalAgainstLaplaceHasPower) {
  GofConfig cfg = small_config(33);
  int rejections = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    cfg.seed = 100 + r;
    rejections += test_two_sample(draw("normal d=3", 100, 4000 + r), draw("laplace d=3", 100, 5000 + r), 0.05, cfg).reject;
  }
  EXPECT_GT(rejections, reps / 2);
}
