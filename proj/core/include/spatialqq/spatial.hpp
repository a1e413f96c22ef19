#pragma once

#include <vector>

#include "spatialqq/numerics.hpp"

namespace sqq {

/// A point u of the open unit ball indexing a spatial quantile.
class QuantileIndex {
 public:
  /// Throws InvalidArgument when |u| >= 1.
  explicit QuantileIndex(Vector u);

  /// Pulls u back to radius max_norm when it lies outside; the result records
  /// whether that happened.
  static QuantileIndex clamped(Vector u, double max_norm = 1.0 - 1e-9);

  const Vector& vector() const noexcept { return u_; }
  Index dim() const noexcept { return u_.size(); }
  double norm() const { return u_.norm(); }
  bool was_clamped() const noexcept { return clamped_; }

 private:
  QuantileIndex(Vector u, bool clamped) : u_(std::move(u)), clamped_(clamped) {}

  Vector u_;
  bool clamped_ = false;
};

struct SolverConfig {
  double grad_tol = 1e-8;
  int max_iter = 200;
  double damping = 0.5;
  double singular_guard = 1e-12;
};

struct SpatialQuantileResult {
  Vector point;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// n^{-1} sum_{x_i != z} (z - x_i) / |z - x_i|, clamped into the open ball.
QuantileIndex spatial_rank(const Vector& z, const DataMatrix& x);

/// n^{-1} sum_i [Phi(u, x_i - q) - Phi(u, x_i)] with Phi(u, s) = |s| + <u, s>.
double empirical_objective(const DataMatrix& x, const QuantileIndex& u, const Vector& q);

/// Empirical spatial quantile solver bound to one sample.
///
/// For d >= 2 the minimizer is found in two stages. Each data point x_k is a
/// candidate: it is the minimizer exactly when |rank(x_k) - u| <= c_k / n, c_k
/// being its multiplicity. Otherwise a damped Newton iteration runs on the
/// smooth part, falling back to gradient steps when the Hessian is singular
/// (collinear data). For d = 1 the answer is the order statistic at which the
/// ECDF first reaches (u + 1) / 2.
class QuantileSolver {
 public:
  /// Throws DegenerateSample when every observation is identical (d >= 2).
  explicit QuantileSolver(DataMatrix x, SolverConfig cfg = {});

  /// objective_trace, when given, receives the reduced objective at every
  /// Newton iterate.
  SpatialQuantileResult solve(const QuantileIndex& u,
                              std::vector<double>* objective_trace = nullptr) const;

  const DataMatrix& sample() const noexcept { return x_; }
  const SolverConfig& config() const noexcept { return cfg_; }

  /// Objective up to the constant n^{-1} sum Phi(u, x_i).
  double reduced_objective(const Vector& u, const Vector& q) const;

 private:
  struct Candidate {
    bool found = false;
    Index index = -1;
  };

  SpatialQuantileResult solve_1d(double u) const;
  Candidate check_points(const Vector& u) const;
  bool point_is_minimizer(Index k, const Vector& u) const;

  DataMatrix x_;
  SolverConfig cfg_;
  std::vector<double> sorted_;    // d == 1
  RowMatrix ranks_;               // precomputed ranks for moderate n
  std::vector<Index> multiplicity_;
  Vector start_center_;
  Vector start_spread_;
  double scale_ = 1.0;
};

SpatialQuantileResult spatial_quantile(const DataMatrix& x, const QuantileIndex& u,
                                       const SolverConfig& cfg = {});

struct QuantileField {
  std::vector<QuantileIndex> grid;
  std::vector<SpatialQuantileResult> values;

  double converged_fraction() const;
};

/// Evaluates the spatial quantile at every grid point (parallel map).
QuantileField quantile_field(const QuantileSolver& solver, const std::vector<QuantileIndex>& grid);
QuantileField quantile_field(const DataMatrix& x, const std::vector<QuantileIndex>& grid,
                             const SolverConfig& cfg = {});

/// m i.i.d. points uniform on the closed ball of the given radius.
std::vector<QuantileIndex> uniform_ball_grid(Index m, Index d, double radius, RngStream& rng);

}  // namespace sqq
