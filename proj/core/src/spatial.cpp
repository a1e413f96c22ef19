#include "spatialqq/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"

namespace sqq {

namespace {

// Above this size the O(n^2) rank table is skipped and data points are only
// checked lazily when an iterate approaches one.
constexpr Index kRankTableLimit = 4000;

struct Evaluation {
  double objective = 0.0;
  Vector gradient;
  Matrix hessian;
  double min_dist = std::numeric_limits<double>::infinity();
  Index nearest = -1;
};

Evaluation evaluate(const DataMatrix& x, const Vector& u, const Vector& q, double guard,
                    bool with_hessian) {
  const Index n = x.rows(), d = x.cols();
  Evaluation ev;
  ev.gradient = Vector::Zero(d);
  if (with_hessian) ev.hessian = Matrix::Zero(d, d);
  Vector diff(d);
  double dist_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double* row = x.row_data(i);
    double dist2 = 0.0;
    for (Index j = 0; j < d; ++j) {
      diff(j) = row[j] - q(j);
      dist2 += diff(j) * diff(j);
    }
    const double dist = std::sqrt(dist2);
    dist_sum += dist;
    if (dist < ev.min_dist) {
      ev.min_dist = dist;
      ev.nearest = i;
    }
    if (dist < guard) continue;
    const double inv = 1.0 / dist;
    ev.gradient.noalias() -= diff * inv;
    if (with_hessian) {
      const double inv3 = inv * inv * inv;
      ev.hessian.diagonal().array() += inv;
      ev.hessian.selfadjointView<Eigen::Lower>().rankUpdate(diff, -inv3);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ev.objective = dist_sum * inv_n - u.dot(q);
  ev.gradient = ev.gradient * inv_n - u;
  if (with_hessian) {
    ev.hessian = ev.hessian.selfadjointView<Eigen::Lower>();
    ev.hessian *= inv_n;
  }
  return ev;
}

}  // namespace

QuantileIndex::QuantileIndex(Vector u) : u_(std::move(u)) {
  if (u_.size() < 1 || !u_.allFinite() || !(u_.norm() < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile index must lie in the open unit ball");
  }
}

QuantileIndex QuantileIndex::clamped(Vector u, double max_norm) {
  if (!(max_norm > 0.0 && max_norm < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "clamp radius must lie in (0, 1)");
  }
  const double norm = u.norm();
  if (norm > max_norm) {
    u *= max_norm / norm;
    return QuantileIndex(std::move(u), true);
  }
  return QuantileIndex(std::move(u));
}

QuantileIndex spatial_rank(const Vector& z, const DataMatrix& x) {
  if (z.size() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "rank point dimension mismatch");
  const Index n = x.rows(), d = x.cols();
  Vector sum = Vector::Zero(d);
  Vector diff(d);
  for (Index i = 0; i < n; ++i) {
    diff = z - x.row(i);
    const double dist = diff.norm();
    if (dist > 0.0) sum += diff / dist;
  }
  return QuantileIndex::clamped(sum / static_cast<double>(n));
}

double empirical_objective(const DataMatrix& x, const QuantileIndex& u, const Vector& q) {
  if (q.size() != x.cols() || u.dim() != x.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "objective dimension mismatch");
  }
  double sum = 0.0;
  for (Index i = 0; i < x.rows(); ++i) sum += (x.row(i) - q).norm() - x.row(i).norm();
  return sum / static_cast<double>(x.rows()) - u.vector().dot(q);
}

QuantileSolver::QuantileSolver(DataMatrix x, SolverConfig cfg) : x_(std::move(x)), cfg_(cfg) {
  if (!(cfg_.grad_tol > 0.0) || !(cfg_.damping > 0.0 && cfg_.damping < 1.0) || cfg_.max_iter < 1) {
    throw Error(ErrorKind::InvalidArgument, "invalid solver configuration");
  }
  const Index n = x_.rows(), d = x_.cols();
  if (d == 1) {
    sorted_.assign(x_.values().data(), x_.values().data() + n);
    std::sort(sorted_.begin(), sorted_.end());
    return;
  }
  const auto& v = x_.values();
  const Vector lo = v.colwise().minCoeff().transpose();
  const Vector hi = v.colwise().maxCoeff().transpose();
  if ((hi - lo).maxCoeff() == 0.0) {
    throw Error(ErrorKind::DegenerateSample, "all observations are identical");
  }
  scale_ = (hi - lo).norm();
  start_spread_ = 0.5 * (hi - lo);
  start_center_.resize(d);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = v(i, j);
    auto mid = column.begin() + n / 2;
    std::nth_element(column.begin(), mid, column.end());
    start_center_(j) = *mid;
  }
  if (n <= kRankTableLimit) {
    ranks_.setZero(n, d);
    multiplicity_.assign(static_cast<std::size_t>(n), 0);
    Vector diff(d);
    for (Index k = 0; k < n; ++k) {
      for (Index i = 0; i < n; ++i) {
        diff = x_.row(k) - x_.row(i);
        const double dist = diff.norm();
        if (dist > 0.0) {
          ranks_.row(k) += diff.transpose() / dist;
        } else {
          ++multiplicity_[static_cast<std::size_t>(k)];
        }
      }
    }
    ranks_ /= static_cast<double>(n);
  }
}

double QuantileSolver::reduced_objective(const Vector& u, const Vector& q) const {
  const Index n = x_.rows(), d = x_.cols();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double* row = x_.row_data(i);
    double dist2 = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double t = row[j] - q(j);
      dist2 += t * t;
    }
    sum += std::sqrt(dist2);
  }
  return sum / static_cast<double>(n) - u.dot(q);
}

SpatialQuantileResult QuantileSolver::solve_1d(double u) const {
  const auto n = sorted_.size();
  const double target = 0.5 * (u + 1.0);
  std::size_t k = 1;
  while (k < n && static_cast<double>(k) / static_cast<double>(n) < target - 1e-12) ++k;
  SpatialQuantileResult out;
  out.point = Vector::Constant(1, sorted_[k - 1]);
  out.converged = true;
  return out;
}

bool QuantileSolver::point_is_minimizer(Index k, const Vector& u) const {
  const Index n = x_.rows();
  Vector rank;
  Index count = 0;
  if (ranks_.rows() == n) {
    rank = ranks_.row(k).transpose();
    count = multiplicity_[static_cast<std::size_t>(k)];
  } else {
    rank = Vector::Zero(x_.cols());
    Vector diff(x_.cols());
    for (Index i = 0; i < n; ++i) {
      diff = x_.row(k) - x_.row(i);
      const double dist = diff.norm();
      if (dist > 0.0) {
        rank += diff / dist;
      } else {
        ++count;
      }
    }
    rank /= static_cast<double>(n);
  }
  const double radius = static_cast<double>(count) / static_cast<double>(n);
  return (rank - u).norm() <= radius * (1.0 + 1e-12);
}

QuantileSolver::Candidate QuantileSolver::check_points(const Vector& u) const {
  Candidate c;
  if (ranks_.rows() != x_.rows()) return c;
  const Index n = x_.rows(), d = x_.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    double dist2 = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double t = ranks_(k, j) - u(j);
      dist2 += t * t;
    }
    const double radius = static_cast<double>(multiplicity_[static_cast<std::size_t>(k)]) * inv_n;
    if (std::sqrt(dist2) <= radius * (1.0 + 1e-12)) {
      c.found = true;
      c.index = k;
      return c;
    }
  }
  return c;
}

SpatialQuantileResult QuantileSolver::solve(const QuantileIndex& index,
                                            std::vector<double>* objective_trace) const {
  const Vector& u = index.vector();
  if (u.size() != x_.cols()) throw Error(ErrorKind::ShapeMismatch, "quantile index dimension mismatch");
  if (x_.cols() == 1) return solve_1d(u(0));

  SpatialQuantileResult out;
  auto at_point = [&](Index k, int iterations) {
    out.point = x_.row(k);
    out.iterations = iterations;
    out.grad_norm = 0.0;  // zero lies in the subdifferential
    out.converged = true;
    return out;
  };

  if (const auto c = check_points(u); c.found) return at_point(c.index, 0);

  const bool lazy_points = ranks_.rows() != x_.rows();
  Vector q = start_center_ + u.cwiseProduct(start_spread_);
  Index last_nearest = -1;
  for (int it = 0; it < cfg_.max_iter; ++it) {
    const Evaluation ev = evaluate(x_, u, q, cfg_.singular_guard, true);
    const double gnorm = ev.gradient.norm();
    if (objective_trace) objective_trace->push_back(ev.objective);
    out.point = q;
    out.iterations = it;
    out.grad_norm = gnorm;
    last_nearest = ev.nearest;
    if (gnorm <= cfg_.grad_tol) {
      out.converged = true;
      return out;
    }
    if (lazy_points && ev.min_dist < 1e-6 * scale_ && point_is_minimizer(ev.nearest, u)) {
      return at_point(ev.nearest, it);
    }

    Vector step;
    Eigen::LDLT<Matrix> ldlt(ev.hessian);
    const double floor = 1e-14 * std::max(ev.hessian.trace(), std::numeric_limits<double>::min());
    const bool newton_ok = ldlt.info() == Eigen::Success && ldlt.isPositive() &&
                           ldlt.vectorD().minCoeff() > floor;
    step = newton_ok ? Vector(ldlt.solve(-ev.gradient)) : Vector(-ev.gradient * scale_);

    auto search = [&](const Vector& direction, Vector& accepted) {
      double t = 1.0;
      for (int shrink = 0; shrink < 80; ++shrink) {
        Vector trial = q + t * direction;
        if (reduced_objective(u, trial) < ev.objective) {
          accepted = std::move(trial);
          return true;
        }
        t *= cfg_.damping;
      }
      return false;
    };

    Vector next;
    bool moved = search(step, next);
    if (!moved && newton_ok) moved = search(-ev.gradient * scale_, next);
    if (!moved) break;
    if ((next - q).norm() <= 1e-15 * (1.0 + q.norm())) {
      q = std::move(next);
      break;
    }
    q = std::move(next);
  }

  // Stalled or out of iterations: the iterate may be creeping onto a data point.
  if (last_nearest >= 0 && point_is_minimizer(last_nearest, u)) {
    return at_point(last_nearest, out.iterations);
  }
  const Evaluation final_ev = evaluate(x_, u, q, cfg_.singular_guard, false);
  if (point_is_minimizer(final_ev.nearest, u)) return at_point(final_ev.nearest, out.iterations);
  out.point = q;
  out.grad_norm = final_ev.gradient.norm();
  out.converged = out.grad_norm <= cfg_.grad_tol;
  return out;
}

SpatialQuantileResult spatial_quantile(const DataMatrix& x, const QuantileIndex& u,
                                       const SolverConfig& cfg) {
  return QuantileSolver(x, cfg).solve(u);
}

double QuantileField::converged_fraction() const {
  if (values.empty()) return 1.0;
  const auto ok = std::count_if(values.begin(), values.end(),
                                [](const SpatialQuantileResult& r) { return r.converged; });
  return static_cast<double>(ok) / static_cast<double>(values.size());
}

QuantileField quantile_field(const QuantileSolver& solver, const std::vector<QuantileIndex>& grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "quantile grid must be nonempty");
  QuantileField field{grid, std::vector<SpatialQuantileResult>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t i) { field.values[i] = solver.solve(grid[i]); });
  return field;
}

QuantileField quantile_field(const DataMatrix& x, const std::vector<QuantileIndex>& grid,
                             const SolverConfig& cfg) {
  return quantile_field(QuantileSolver(x, cfg), grid);
}

std::vector<QuantileIndex> uniform_ball_grid(Index m, Index d, double radius, RngStream& rng) {
  if (m < 1 || d < 1 || !(radius > 0.0 && radius < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "grid needs m >= 1, d >= 1 and radius in (0, 1)");
  }
  std::vector<QuantileIndex> grid;
  grid.reserve(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    Vector dir;
    double norm = 0.0;
    do {
      dir = rng.normal_vector(d);
      norm = dir.norm();
    } while (norm == 0.0);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    grid.emplace_back(dir * (r / norm));
  }
  return grid;
}

}  // namespace sqq
