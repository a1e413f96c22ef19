#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "spatialqq/distributions.hpp"
#include "spatialqq/model_quantile.hpp"
#include "spatialqq/report.hpp"
#include "spatialqq/spatial.hpp"

namespace sqq {

/// Covariance kernel of the limiting quantile process on a grid.
///
/// With s_u(x) = (x - Q(u)) / |x - Q(u)| + u, D1(u) is the mean of
/// (I - d d^T / |d|^2) / |d| and D2(u, v) the mean of s_u s_v^T, both over the
/// expectation points x_1..x_N (draws from F0, or the pooled sample). The
/// process covariance K has blocks D1(u)^{-1} D2(u, v) D1(v)^{-1}, so K = W^T W
/// with W = [s_{u_i}(x_j)^T D1(u_i)^{-1}] / sqrt(N). Whichever of W (N < M d)
/// or W^T W is smaller is kept, unscaled.
struct KernelEstimate {
  enum class Source { ModelF0, PooledSample };

  std::vector<QuantileIndex> grid;
  std::vector<Vector> quantiles;
  std::vector<Matrix> d1;
  std::vector<Matrix> d1_inverse;
  Matrix factor;        // W, when stored
  Matrix gram;          // W^T W, when stored
  double scale = 1.0;   // 1 / (lambda (1 - lambda)) for the two-sample kernel
  Index expectation_draws = 0;
  Source source = Source::ModelF0;

  bool has_factor() const noexcept { return factor.size() > 0; }

  Index grid_size() const noexcept { return static_cast<Index>(grid.size()); }
  Index dim() const noexcept { return grid.empty() ? 0 : grid.front().dim(); }

  Matrix d2(Index i, Index j) const;
  /// Block (i, j) of the scaled covariance K.
  Matrix block(Index i, Index j) const;
  /// Full (M d) x (M d) scaled covariance.
  Matrix covariance() const;
  /// Nonzero spectrum of K, descending, negatives clamped to zero. Uses the
  /// smaller of W^T W and W W^T.
  Vector eigenvalues() const;
};

/// Kernel under a fully specified model, expectations over n_exp draws.
KernelEstimate estimate_kernel(const DistributionSpec& f0, const std::vector<QuantileIndex>& grid,
                               const std::vector<Vector>& quantiles, Index n_exp, RngStream& rng);

/// Kernel under the empirical law of the pooled sample, quantiles being the
/// pooled spatial quantiles. scale multiplies K.
KernelEstimate estimate_kernel(const DataMatrix& pooled, const std::vector<QuantileIndex>& grid,
                               const std::vector<Vector>& quantiles, double scale = 1.0);

/// Replicates of (1/M) |Z|^2 for Z ~ N(0, K) on the kernel's grid.
/// jitter, when given, receives the diagonal shift the Cholesky scheme needed.
NullDistribution null_one_sample(const KernelEstimate& kernel, Index replicates, RngStream& rng,
                                 NullScheme scheme = NullScheme::EigenWeightedChiSquare,
                                 double* jitter = nullptr);

/// Same law from a precomputed spectrum: (1/M) sum lambda_l chi^2_1.
NullDistribution weighted_chi_square_null(const Vector& eigenvalues, Index grid_size, Index replicates,
                                          RngStream& rng);

/// n (1/M) sum_u |Q_X(u) - Q_F0(u)|^2.
double statistic_one_sample(const DataMatrix& x, const std::vector<Vector>& model_quantiles,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg = {});
double statistic_one_sample(const DataMatrix& x, const ModelQuantileFunction& model,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg = {});

/// (n + m) (1/M) sum_u |Q_X(u) - Q_Y(u)|^2.
double statistic_two_sample(const DataMatrix& x, const DataMatrix& y,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg = {});

struct GofConfig {
  Index grid_size = 1000;
  double grid_radius = 0.99;
  Index null_replicates = 1000;
  Index expectation_draws = 10000;
  NullScheme scheme = NullScheme::EigenWeightedChiSquare;
  /// The eigen scheme moves to a random subgrid of this size when both M d
  /// and the expectation count exceed kSubgridThreshold.
  Index null_subgrid = 200;
  /// Draw the null's grid independently of the statistic's.
  bool fresh_null_grid = false;
  /// Standardize X by its MLE mean and dispersion before testing against the
  /// standard member of the model family.
  bool standardize = false;
  std::uint64_t seed = 0;
  SolverConfig solver;

  static constexpr Index kSubgridThreshold = 1500;
};

/// One-sample test with everything that does not depend on the data prepared
/// once: grid, model quantiles, kernel and null replicates.
class OneSampleTest {
 public:
  OneSampleTest(DistributionSpec f0, GofConfig cfg);

  TestReport run(const DataMatrix& x, double alpha) const;

  const std::vector<QuantileIndex>& grid() const noexcept { return grid_; }
  const std::vector<Vector>& model_quantiles() const noexcept { return model_q_; }
  const NullDistribution& null() const noexcept { return null_; }
  const GofConfig& config() const noexcept { return cfg_; }

 private:
  DistributionSpec f0_;
  GofConfig cfg_;
  std::vector<QuantileIndex> grid_;
  std::vector<Vector> model_q_;
  NullDistribution null_;
  Index null_grid_size_ = 0;
  Index spectrum_size_ = 0;
  double jitter_ = 0.0;
};

TestReport test_one_sample(const DataMatrix& x, const DistributionSpec& f0, double alpha,
                           const GofConfig& cfg = {});

/// Two-sample test; the kernel comes from the pooled sample and is scaled by
/// 1 / (lambda (1 - lambda)) with lambda = n / (n + m).
TestReport test_two_sample(const DataMatrix& x, const DataMatrix& y, double alpha,
                           const GofConfig& cfg = {});

}  // namespace sqq
