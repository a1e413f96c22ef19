#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spatialqq/baselines.hpp"
#include "spatialqq/error.hpp"

using namespace sqq;

namespace {

DataMatrix draw(const char* spec, Index n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return sample(DistributionSpec::parse(spec), n, rng);
}

double fraction_below(const DataMatrix& x, const Vector& t, double eps) {
  double c = 0;
  for (Index i = 0; i < x.rows(); ++i) c += ((x.row(i).array() <= (t.array() - eps)).all()) ? 1 : 0;
  return c / static_cast<double>(x.rows());
}

// Every combination of sample coordinates and +inf, probed at the point and
// just below it.
double brute_force_ks(const DataMatrix& x, const std::function<double(const Vector&)>& g, bool one_sample) {
  const Index d = x.cols();
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < x.rows(); ++i) axes[static_cast<std::size_t>(j)].push_back(x(i, j));
    axes[static_cast<std::size_t>(j)].push_back(1e300);
  }
  double sup = 0.0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Vector t(d);
    for (Index j = 0; j < d; ++j) t(j) = axes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    for (double eps : {0.0, 1e-9}) {
      const Vector s = (t.array() - eps).matrix();
      const double fn = fraction_below(x, t, eps);
      sup = std::max(sup, one_sample ? std::abs(fn - g(s)) : std::abs(fn - g(s)));
    }
    std::size_t j = 0;
    while (j < idx.size() && ++idx[j] == axes[j].size()) idx[j++] = 0;
    if (j == idx.size()) break;
  }
  return sup;
}

}  // namespace

TEST(Ecdf, WeakAndStrict) {
  const EcdfEvaluator f(DataMatrix::from_rows({{0, 0}, {1, 1}}));
  EXPECT_EQ(f(Eigen::Vector2d(0, 0)), 0.5);
  EXPECT_EQ(f.strict(Eigen::Vector2d(0, 0)), 0.0);
  EXPECT_EQ(f(Eigen::Vector2d(5, 0.5)), 0.5);
}

TEST(KsStatistic, SinglePointOneDimension) {
  const CdfEvaluator phi(DistributionSpec::standard_normal(1), ClosedCdf{});
  EXPECT_NEAR(ks_statistic(DataMatrix::from_rows({{0}}), phi), 0.5, 1e-15);
}

TEST(KsStatistic, SinglePointTwoDimensions) {
  const CdfEvaluator phi(DistributionSpec::standard_normal(2), ClosedCdf{});
  EXPECT_NEAR(ks_statistic(DataMatrix::from_rows({{0, 0}}), phi), 0.75, 1e-15);
}

TEST(KsStatistic, MatchesBruteForceLattice) {
  const auto spec = DistributionSpec::standard_normal(2);
  const CdfEvaluator phi(spec, ClosedCdf{});
  KsOptions exact;
  exact.exact_budget = 5e7;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = draw("normal d=2", 12, 50 + s);
    const double oracle = brute_force_ks(x, [&](const Vector& t) { return phi(t); }, true);
    // The oracle takes left limits at t - 1e-9, so it is off by about density * 1e-9.
    EXPECT_NEAR(ks_statistic(x, phi, exact), std::sqrt(12.0) * oracle, 1e-8);
  }
}

TEST(KsStatistic, TwoSampleMatchesBruteForce) {
  KsOptions exact;
  exact.exact_budget = 5e7;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = draw("normal d=2", 8, 60 + s), y = draw("normal d=2 var=2", 6, 70 + s);
    const EcdfEvaluator g(y);
    // Only points on the pooled lattice matter; probe the pooled sample's lattice.
    const auto z = pool(x, y);
    double sup = 0.0;
    for (Index a = 0; a <= z.rows(); ++a) {
      for (Index b = 0; b <= z.rows(); ++b) {
        const Vector t = Eigen::Vector2d(a < z.rows() ? z(a, 0) : 1e300, b < z.rows() ? z(b, 1) : 1e300);
        sup = std::max(sup, std::abs(EcdfEvaluator(x)(t) - g(t)));
      }
    }
    EXPECT_NEAR(ks_statistic(x, y, exact), std::sqrt(14.0) * sup, 1e-12);
  }
}

TEST(KsStatistic, DefaultUsesSamplePointsAndLeftLimits) {
  const CdfEvaluator phi(DistributionSpec::standard_normal(2), ClosedCdf{});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = draw("normal d=2", 15, 80 + s), y = draw("normal d=2", 9, 90 + s);
    const EcdfEvaluator fx(x), fy(y);
    double one = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
      const Vector t = x.row(i);
      one = std::max({one, fx(t) - phi(t), phi(t) - fx.strict(t)});
    }
    EXPECT_NEAR(ks_statistic(x, phi), std::sqrt(15.0) * one, 1e-12);
    const auto z = pool(x, y);
    double two = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
      const Vector t = z.row(i);
      two = std::max({two, std::abs(fx(t) - fy(t)), std::abs(fx.strict(t) - fy.strict(t))});
    }
    EXPECT_NEAR(ks_statistic(x, y), std::sqrt(24.0) * two, 1e-12);
  }
}

TEST(KsStatistic, IdenticalSamplesGiveZero) {
  const auto x = draw("normal d=3", 20, 3);
  EXPECT_EQ(ks_statistic(x, x), 0.0);
  EXPECT_EQ(cvm_statistic(x, x), 0.0);
}

TEST(KsStatistic, ApproximateModeIsALowerBound) {
  const auto x = draw("normal d=3", 40, 4);
  const CdfEvaluator phi(DistributionSpec::standard_normal(3), ClosedCdf{});
  KsOptions cheap, probed, exact;
  probed.probes = 500;
  exact.exact_budget = 5e7;
  EXPECT_LE(ks_statistic(x, phi, cheap), ks_statistic(x, phi, probed));
  EXPECT_LE(ks_statistic(x, phi, probed), ks_statistic(x, phi, exact) + 1e-15);
}

TEST(CvmStatistic, SinglePointIsOneTwelfth) {
  EXPECT_NEAR(cvm_statistic(DataMatrix::from_rows({{0}}), DistributionSpec::standard_normal(1)), 1.0 / 12.0, 1e-15);
}

TEST(CvmStatistic, MonteCarloAgreesWithClosedFormInOneDimension) {
  // Zero skew is the standard normal, but has no closed CDF here, so it
  // exercises the Monte Carlo integral and Monte Carlo CDF together.
  const auto x = draw("normal d=1", 25, 5);
  const double exact = cvm_statistic(x, DistributionSpec::standard_normal(1));
  const double mc = cvm_statistic(x, DistributionSpec::parse("skewnormal d=1 delta=0"), {400000, 7});
  EXPECT_NEAR(mc, exact, 0.06);
}

TEST(CvmStatistic, DuplicationScalesThroughSampleSize) {
  const auto x = draw("normal d=2", 15, 8), y = draw("laplace d=2", 10, 9);
  const double once = cvm_statistic(x, y);
  EXPECT_NEAR(cvm_statistic(pool(x, x), pool(y, y)), 2.0 * once, 1e-12);
  EXPECT_NEAR(ks_statistic(pool(x, x), pool(y, y)), std::sqrt(2.0) * ks_statistic(x, y), 1e-12);
}

TEST(IndicatorProcess, VarianceIsBernoulli) {
  RngStream rng(10, 0);
  const auto p = IndicatorProcess::from_model(DistributionSpec::standard_normal(2), 200, rng);
  const Matrix cov = p.factor() * p.factor().transpose();
  for (Index i = 0; i < p.size(); ++i) {
    const double f = p.cdf()(i);
    EXPECT_NEAR(cov(i, i), f * (1 - f), 1e-6);
  }
  RngStream one(11, 0);
  const auto q = IndicatorProcess::from_model(DistributionSpec::standard_normal(1), 400, one);
  const Matrix c1 = q.factor() * q.factor().transpose();
  Index mid = 0;
  for (Index i = 0; i < q.size(); ++i)
    if (std::abs(q.cdf()(i) - 0.5) < std::abs(q.cdf()(mid) - 0.5)) mid = i;
  EXPECT_NEAR(c1(mid, mid), 0.25, 0.005);
}

TEST(IndicatorProcess, SampleFactorReproducesEmpiricalCovariance) {
  const auto ref = draw("normal d=2", 60, 12);
  RngStream rng(13, 0);
  const auto p = IndicatorProcess::from_sample(ref, 500, rng);
  EXPECT_EQ(p.size(), 60);
  const Matrix cov = p.factor() * p.factor().transpose();
  const EcdfEvaluator f(ref);
  for (Index i = 0; i < 10; ++i) {
    for (Index j = 0; j < 10; ++j) {
      const Vector m = p.points().row(i).transpose().cwiseMin(p.points().row(j).transpose());
      EXPECT_NEAR(cov(i, j), f(m) - p.cdf()(i) * p.cdf()(j), 1e-12);
    }
  }
}

TEST(KsCvmNull, ClassicalKolmogorovLimit) {
  RngStream rng(14, 0);
  const auto null = ks_cvm_null(BaselineKind::KS, DistributionSpec::standard_normal(1), 1000, 5000, rng);
  EXPECT_NEAR(null.critical_value(0.05), 1.358, 0.05);
}

TEST(KsCvmNull, CramerVonMisesLimit) {
  // Asymptotic 95% point of the one-sample CVM statistic is 0.4614.
  RngStream rng(15, 0);
  const auto null = ks_cvm_null(BaselineKind::CVM, DistributionSpec::standard_normal(1), 1000, 5000, rng);
  EXPECT_NEAR(null.critical_value(0.05), 0.4614, 0.03);
}

TEST(KsCvmNull, ScaleActsAsVarianceFactor) {
  RngStream g(16, 0);
  const auto p = IndicatorProcess::from_model(DistributionSpec::standard_normal(2), 100, g);
  RngStream a(17, 0), b(17, 0), c(17, 0), e(17, 0);
  const auto ks1 = ks_cvm_null(BaselineKind::KS, p, 300, a, 1.0), ks4 = ks_cvm_null(BaselineKind::KS, p, 300, b, 4.0);
  const auto cv1 = ks_cvm_null(BaselineKind::CVM, p, 300, c, 1.0), cv4 = ks_cvm_null(BaselineKind::CVM, p, 300, e, 4.0);
  for (Index i = 0; i < 300; ++i) {
    EXPECT_NEAR(ks4.sorted()[i], 2.0 * ks1.sorted()[i], 1e-12);
    EXPECT_NEAR(cv4.sorted()[i], 4.0 * cv1.sorted()[i], 1e-12);
  }
}

TEST(BaselineOneSample, CalibratedInOneDimension) {
  BaselineConfig cfg;
  cfg.seed = 18;
  const BaselineOneSample tests(DistributionSpec::standard_normal(1), cfg);
  int ks = 0, cvm = 0;
  for (int r = 0; r < 300; ++r) {
    const auto x = draw("normal d=1", 100, 6000 + r);
    ks += tests.ks(x, 0.05).reject;
    cvm += tests.cvm(x, 0.05).reject;
  }
  EXPECT_LE(ks, 30);
  EXPECT_LE(cvm, 30);
  EXPECT_GE(ks, 3);
  EXPECT_GE(cvm, 3);
}

TEST(BaselineOneSample, DetectsShift) {
  BaselineConfig cfg;
  cfg.seed = 19;
  const BaselineOneSample tests(DistributionSpec::standard_normal(2), cfg);
  const auto x = draw("normal d=2 mean=0.8,0.8", 80, 20);
  EXPECT_TRUE(tests.ks(x, 0.05).reject);
  EXPECT_TRUE(tests.cvm(x, 0.05).reject);
}

TEST(BaselineTwoSample, DetectsScaleAndIsSymmetric) {
  const auto x = draw("normal d=2", 80, 21), y = draw("normal d=2 var=6", 80, 22);
  BaselineConfig cfg;
  cfg.seed = 23;
  const auto a = baseline_two_sample(BaselineKind::CVM, x, y, 0.05, cfg);
  EXPECT_TRUE(a.reject);
  const auto b = baseline_two_sample(BaselineKind::KS, x, y, 0.05, cfg);
  EXPECT_NEAR(b.statistic, baseline_two_sample(BaselineKind::KS, y, x, 0.05, cfg).statistic, 1e-12);
  EXPECT_EQ(a.diagnostic("lambda"), 0.5);
}
