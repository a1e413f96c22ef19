#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spatialqq/distributions.hpp"
#include "spatialqq/report.hpp"

namespace sqq {

/// F_n(t) = n^{-1} #{i : x_i <= t coordinatewise}.
class EcdfEvaluator {
 public:
  explicit EcdfEvaluator(DataMatrix x) : x_(std::move(x)) {}

  double operator()(const Vector& t) const;
  /// Left limit: strict inequality in every coordinate.
  double strict(const Vector& t) const;
  const DataMatrix& sample() const noexcept { return x_; }

 private:
  DataMatrix x_;
};

struct KsOptions {
  /// By default the sup is taken over the sample points and their left
  /// limits, the point set the grid-based nulls are calibrated for. A positive
  /// budget scans the full coordinate lattice while (lattice size) * n * d
  /// stays under it; that sup is exact but the nulls then run anti-conservative.
  double exact_budget = 0.0;
  /// Extra random lattice points checked when the lattice is truncated.
  Index probes = 0;
  std::uint64_t seed = 0;
};

/// sqrt(n) sup |F_n - F0|.
double ks_statistic(const DataMatrix& x, const CdfEvaluator& f0, const KsOptions& opts = {});
/// sqrt(n + m) sup |F_n - G_m|.
double ks_statistic(const DataMatrix& x, const DataMatrix& y, const KsOptions& opts = {});

struct CvmOptions {
  Index draws = 10000;
  std::uint64_t seed = 0;
};

/// n \int (F_n - F0)^2 dF0. Exact for d = 1 models with a closed CDF, else an
/// average over draws from F0.
double cvm_statistic(const DataMatrix& x, const DistributionSpec& f0, const CvmOptions& opts = {});
/// (n + m) \int (F_n - G_m)^2 dM over the pooled empirical law M.
double cvm_statistic(const DataMatrix& x, const DataMatrix& y);

enum class BaselineKind { KS, CVM };

/// Zero-mean Gaussian process on a t-grid with covariance
/// scale * (F(min(s, t)) - F(s) F(t)). Paths are factor * xi with xi standard
/// normal.
class IndicatorProcess {
 public:
  /// Grid of grid_t draws from the model. The covariance is closed-form when the
  /// model CDF is, otherwise it comes from `reference_draws` model draws.
  static IndicatorProcess from_model(const DistributionSpec& f, Index grid_t, RngStream& rng,
                                     Index reference_draws = 20000);
  /// Grid is the reference sample itself (subsampled to grid_t when larger);
  /// covariance under its empirical law.
  static IndicatorProcess from_sample(const DataMatrix& reference, Index grid_t, RngStream& rng);

  const RowMatrix& points() const noexcept { return points_; }
  Index size() const noexcept { return points_.rows(); }
  const Vector& cdf() const noexcept { return cdf_; }
  const Matrix& factor() const noexcept { return factor_; }
  double jitter() const noexcept { return jitter_; }

  /// count paths as columns, covariance multiplied by scale. Column c uses
  /// stream rng.derive(first + c).
  Matrix paths(Index count, RngStream& rng, double scale = 1.0, std::uint64_t first = 0) const;

 private:
  RowMatrix points_;
  Vector cdf_;
  Matrix factor_;
  double jitter_ = 0.0;
};

double ks_functional(const Eigen::Ref<const Vector>& path);
double cvm_functional(const Eigen::Ref<const Vector>& path);

NullDistribution ks_cvm_null(BaselineKind kind, const IndicatorProcess& process, Index replicates,
                             RngStream& rng, double scale = 1.0);
NullDistribution ks_cvm_null(BaselineKind kind, const DistributionSpec& f_ref, Index grid_t,
                             Index replicates, RngStream& rng, double scale = 1.0);

struct BaselineConfig {
  Index t_grid = 500;
  Index null_replicates = 1000;
  Index cvm_draws = 10000;
  Index lattice_probes = 0;
  std::uint64_t seed = 0;
};

/// One-sample KS and CVM against a fixed model, nulls prepared once.
class BaselineOneSample {
 public:
  BaselineOneSample(DistributionSpec f0, BaselineConfig cfg);

  TestReport ks(const DataMatrix& x, double alpha) const;
  TestReport cvm(const DataMatrix& x, double alpha) const;

 private:
  DistributionSpec f0_;
  BaselineConfig cfg_;
  CdfEvaluator cdf_;
  Index grid_points_ = 0;
  double jitter_ = 0.0;
  NullDistribution ks_null_, cvm_null_;
};

TestReport baseline_two_sample(BaselineKind kind, const DataMatrix& x, const DataMatrix& y, double alpha,
                               const BaselineConfig& cfg = {});

struct MstEdge {
  Index a = 0;
  Index b = 0;
  double length = 0.0;
};

struct MstGraph {
  std::vector<MstEdge> edges;

  double total_length() const;
  /// Edges whose endpoints carry different labels.
  Index cross_edges(const std::vector<int>& labels) const;
};

/// Prim's algorithm on the complete Euclidean graph, O(N^2) distances.
MstGraph euclidean_mst(const DataMatrix& points);

/// Friedman-Rafsky run test: few cross-sample MST edges reject. The null is
/// exact enumeration of all relabellings when there are at most `permutations`
/// of them, random relabelling otherwise.
TestReport mst_run_test(const DataMatrix& x, const DataMatrix& y, double alpha, Index permutations,
                        RngStream& rng);

}  // namespace sqq
