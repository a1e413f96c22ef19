#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spatialqq/baselines.hpp"
#include "spatialqq/distributions.hpp"
#include "spatialqq/gof.hpp"

namespace sqq {

enum class TestKind { SpatialQQ, KS, CVM, MSTRun };

std::string to_string(TestKind kind);
/// Accepts "spatial", "ks", "cvm", "mst" (case-insensitive); throws BadSpec.
TestKind parse_test_kind(std::string_view text);

/// A finite-sample level/power experiment. One-sample: X ~ second, tested
/// against the model first. Two-sample: X ~ first, Y ~ second.
struct ScenarioSpec {
  enum class Problem { OneSample, TwoSample };

  std::string name;
  Problem problem = Problem::TwoSample;
  DistributionSpec first = DistributionSpec::standard_normal(2);
  DistributionSpec second = DistributionSpec::standard_normal(2);
  Index n = 100;
  Index m = 100;
  double alpha = 0.05;
  Index reps = 200;
  std::vector<TestKind> tests = {TestKind::SpatialQQ};
  std::uint64_t seed = 0;
  double parameter = 0.0;  // abscissa recorded in the curve (beta, Delta, sigma, ...)
  GofConfig gof;
  BaselineConfig baseline;
  Index permutations = 999;

  void validate() const;
};

struct PowerEstimate {
  TestKind test = TestKind::SpatialQQ;
  double power = 0.0;
  double standard_error = 0.0;
  Index reps = 0;      // replications that produced a decision
  Index failures = 0;  // replications excluded after an error
};

struct PowerPoint {
  double parameter = 0.0;
  std::uint64_t seed = 0;
  std::vector<PowerEstimate> estimates;
  /// Hash of the data each replication fed to its tests; `paired` confirms
  /// every test saw the same bytes.
  std::vector<std::uint64_t> data_hashes;
  bool paired = true;

  const PowerEstimate& at(TestKind kind) const;
};

PowerPoint empirical_level_power(const ScenarioSpec& spec);

struct PowerCurve {
  std::string parameter_name = "parameter";
  std::vector<PowerPoint> points;

  /// Columns parameter,test,power,stderr,reps,seed.
  void write_csv(std::ostream& out, const std::vector<std::string>& comments = {}) const;
  /// Power against parameter, one line per test.
  std::string render_svg(const std::vector<std::string>& comments = {}) const;
};

std::uint64_t hash_data(const DataMatrix& x);

/// Mixture contamination approaching the null at root-n rate:
/// (1 - gamma / sqrt(n)) base + (gamma / sqrt(n)) contaminant.
struct ContiguousSpec {
  bool two_sample = false;
  DistributionSpec base = DistributionSpec::standard_normal(2);
  DistributionSpec contaminant = DistributionSpec::cauchy(2);
  double lambda = 0.5;
  std::vector<double> gammas = default_gammas();
  Index grid_size = 300;
  Index expectation_draws = 10000;
  Index contaminant_draws = 10000;
  Index t_grid = 500;
  Index replicates = 4000;
  std::uint64_t seed = 0;

  /// {0, 0.5, ..., 6}.
  static std::vector<double> default_gammas();
  static std::vector<double> sweep(double max, double step);
  void validate() const;
};

/// Limiting power against gamma. The threshold comes from the gamma = 0 law
/// and every gamma reuses the same standard normal draws.
struct ContiguousCurve {
  std::string test;
  std::vector<double> gammas;
  std::vector<double> power;
  Index replicates = 0;
  double critical_value = 0.0;
  /// Largest Monte Carlo standard error among the mean-function entries.
  double mean_stderr = 0.0;

  double stderr_at(std::size_t i) const;
};

ContiguousCurve contiguous_power_spatial(const ContiguousSpec& spec, double alpha);
ContiguousCurve contiguous_power_baseline(const ContiguousSpec& spec, BaselineKind kind, double alpha);

struct EfficacyPoint {
  double target = 0.0;
  double gamma = 0.0;        // first curve
  double gamma_other = 0.0;  // second curve
  double efficacy = 0.0;     // (gamma_other / gamma)^2
  bool at_limit = false;     // target at or below the gamma = 0 power
};

/// Throws NotMonotone when a curve does not increase strictly up to its first
/// maximum, TargetUnreachable when a target exceeds that maximum.
std::vector<EfficacyPoint> pitman_efficacy(const ContiguousCurve& first, const ContiguousCurve& other,
                                           const std::vector<double>& targets);

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson).
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace sqq
