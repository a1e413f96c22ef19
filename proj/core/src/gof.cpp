#include "spatialqq/gof.hpp"

#include <algorithm>
#include <cmath>

#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"

namespace sqq {

namespace {

constexpr double kDropDistance = 1e-12;
constexpr double kDegenerateEigen = 1e-10;
constexpr Index kChunk = 512;

std::vector<Vector> evaluate(const ModelQuantileFunction& model, const std::vector<QuantileIndex>& grid) {
  std::vector<Vector> q(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { q[i] = model(grid[i]); });
  return q;
}

void check_grid(const std::vector<QuantileIndex>& grid, const std::vector<Vector>& quantiles, Index d) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "grid must be nonempty");
  if (grid.size() != quantiles.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one quantile per grid point is required");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].dim() != d || quantiles[i].size() != d) {
      throw Error(ErrorKind::ShapeMismatch, "grid dimension differs from the data");
    }
  }
}

// D1(u) over the rows of pts.
Matrix mean_d1(const RowMatrix& pts, const Vector& q) {
  const Index d = pts.cols();
  Matrix sum = Matrix::Zero(d, d);
  Vector diff(d);
  for (Index j = 0; j < pts.rows(); ++j) {
    diff = pts.row(j).transpose() - q;
    const double dist = diff.norm();
    if (dist < kDropDistance) continue;
    const double inv = 1.0 / dist;
    sum.diagonal().array() += inv;
    sum.noalias() -= (inv * inv * inv) * diff * diff.transpose();
  }
  return sum / static_cast<double>(pts.rows());
}

// Pseudo-inverse of the symmetric D1; throws when it is numerically zero.
Matrix d1_inverse(const Matrix& d1) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(d1);
  const Vector& ev = es.eigenvalues();
  if (ev.maxCoeff() < kDegenerateEigen) {
    throw Error(ErrorKind::DegenerateKernel, "D1 vanishes at a grid point");
  }
  Vector inv(ev.size());
  for (Index k = 0; k < ev.size(); ++k) inv(k) = ev(k) > kDegenerateEigen ? 1.0 / ev(k) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Rows of W for the given points: column block i holds s_{u_i}(x)^T D1_i^{-1} / sqrt(total).
void fill_factor(const RowMatrix& pts, const KernelEstimate& k, double total, Matrix& out) {
  const Index d = pts.cols(), m = k.grid_size();
  out.resize(pts.rows(), m * d);
  const double norm = 1.0 / std::sqrt(total);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    const Vector& q = k.quantiles[ii];
    const Vector& u = k.grid[ii].vector();
    Matrix s(pts.rows(), d);
    Vector diff(d);
    for (Index j = 0; j < pts.rows(); ++j) {
      diff = pts.row(j).transpose() - q;
      const double dist = diff.norm();
      if (dist < kDropDistance) {
        s.row(j).setZero();
      } else {
        s.row(j) = (diff / dist + u).transpose();
      }
    }
    out.middleCols(i * d, d).noalias() = norm * s * k.d1_inverse[ii];
  });
}

void fill_d1(const RowMatrix& pts, KernelEstimate& k) {
  const std::size_t m = k.grid.size();
  k.d1.assign(m, Matrix());
  k.d1_inverse.assign(m, Matrix());
  parallel_for(m, [&](std::size_t i) {
    k.d1[i] = mean_d1(pts, k.quantiles[i]);
    k.d1_inverse[i] = d1_inverse(k.d1[i]);
  });
}

Matrix symmetrized(Matrix m) {
  Matrix t = m.transpose();
  m += t;
  m *= 0.5;
  return m;
}

struct FieldComparison {
  double mean_squared = 0.0;
  double converged_fraction = 1.0;
};

FieldComparison compare(const QuantileSolver& sx, const std::vector<Vector>& target,
                        const std::vector<QuantileIndex>& grid) {
  const std::size_t m = grid.size();
  std::vector<double> sq(m);
  std::vector<char> ok(m);
  parallel_for(m, [&](std::size_t i) {
    const auto r = sx.solve(grid[i]);
    ok[i] = r.converged;
    sq[i] = (r.point - target[i]).squaredNorm();
  });
  FieldComparison out;
  double sum = 0.0, conv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sum += sq[i];
    conv += ok[i];
  }
  out.mean_squared = sum / static_cast<double>(m);
  out.converged_fraction = conv / static_cast<double>(m);
  return out;
}

std::vector<Vector> solve_field(const QuantileSolver& s, const std::vector<QuantileIndex>& grid,
                                double& converged_fraction) {
  const auto field = quantile_field(s, grid);
  converged_fraction = field.converged_fraction();
  std::vector<Vector> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = field.values[i].point;
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
}

void check_config(const GofConfig& cfg) {
  if (cfg.grid_size < 1 || cfg.null_replicates < 1 || cfg.expectation_draws < 2 || cfg.null_subgrid < 1) {
    throw Error(ErrorKind::InvalidArgument, "grid, replicate and draw counts must be positive");
  }
}

}  // namespace

Matrix KernelEstimate::d2(Index i, Index j) const {
  return d1[static_cast<std::size_t>(i)] * (block(i, j) / scale) * d1[static_cast<std::size_t>(j)];
}

Matrix KernelEstimate::block(Index i, Index j) const {
  const Index d = dim();
  if (has_factor()) {
    return scale * factor.middleCols(i * d, d).transpose() * factor.middleCols(j * d, d);
  }
  return scale * gram.block(i * d, j * d, d, d);
}

Matrix KernelEstimate::covariance() const {
  if (has_factor()) return symmetrized(scale * (factor.transpose() * factor));
  return scale * gram;
}

Vector KernelEstimate::eigenvalues() const {
  Matrix small;
  if (has_factor() && factor.rows() < factor.cols()) {
    small = symmetrized(factor * factor.transpose());
  } else if (has_factor()) {
    small = symmetrized(factor.transpose() * factor);
  } else {
    small = gram;
  }
  Vector ev = sym_eigen(small).values * scale;
  for (Index k = 0; k < ev.size(); ++k) ev(k) = std::max(ev(k), 0.0);
  return ev;
}

KernelEstimate estimate_kernel(const DistributionSpec& f0, const std::vector<QuantileIndex>& grid,
                               const std::vector<Vector>& quantiles, Index n_exp, RngStream& rng) {
  const Index d = f0.dim();
  check_grid(grid, quantiles, d);
  if (n_exp < 2) throw Error(ErrorKind::InvalidArgument, "kernel needs at least two expectation draws");
  KernelEstimate k;
  k.grid = grid;
  k.quantiles = quantiles;
  k.expectation_draws = n_exp;
  k.source = KernelEstimate::Source::ModelF0;
  const RowMatrix draws = sample(f0, n_exp, rng).values();
  fill_d1(draws, k);

  const Index md = k.grid_size() * d;
  if (n_exp < md) {
    fill_factor(draws, k, static_cast<double>(n_exp), k.factor);
    return k;
  }
  // Accumulate W^T W chunk by chunk so W is never held whole.
  k.gram = Matrix::Zero(md, md);
  Matrix part;
  for (Index start = 0; start < n_exp; start += kChunk) {
    const Index rows = std::min(kChunk, n_exp - start);
    const RowMatrix chunk = draws.middleRows(start, rows);
    fill_factor(chunk, k, static_cast<double>(n_exp), part);
    k.gram.selfadjointView<Eigen::Lower>().rankUpdate(part.transpose());
  }
  Matrix full = k.gram.selfadjointView<Eigen::Lower>();
  k.gram = std::move(full);
  return k;
}

KernelEstimate estimate_kernel(const DataMatrix& pooled, const std::vector<QuantileIndex>& grid,
                               const std::vector<Vector>& quantiles, double scale) {
  check_grid(grid, quantiles, pooled.cols());
  if (pooled.rows() < pooled.cols() + 2) {
    throw Error(ErrorKind::InvalidArgument, "pooled kernel needs at least d + 2 points");
  }
  KernelEstimate k;
  k.grid = grid;
  k.quantiles = quantiles;
  k.scale = scale;
  k.expectation_draws = pooled.rows();
  k.source = KernelEstimate::Source::PooledSample;
  fill_d1(pooled.values(), k);
  fill_factor(pooled.values(), k, static_cast<double>(pooled.rows()), k.factor);
  return k;
}

NullDistribution weighted_chi_square_null(const Vector& eigenvalues, Index grid_size, Index replicates,
                                          RngStream& rng) {
  if (replicates < 1 || grid_size < 1) throw Error(ErrorKind::InvalidArgument, "need replicates and grid");
  const double top = eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0;
  std::vector<double> weights;
  for (Index k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues(k) > 1e-13 * top) weights.push_back(eigenvalues(k));
  }
  const double inv_m = 1.0 / static_cast<double>(grid_size);
  std::vector<double> reps(static_cast<std::size_t>(replicates));
  parallel_for(reps.size(), [&](std::size_t r) {
    RngStream s = rng.derive(r);
    double sum = 0.0;
    for (double w : weights) {
      const double z = s.normal();
      sum += w * z * z;
    }
    reps[r] = sum * inv_m;
  });
  return NullDistribution(std::move(reps), NullScheme::EigenWeightedChiSquare);
}

NullDistribution null_one_sample(const KernelEstimate& kernel, Index replicates, RngStream& rng,
                                 NullScheme scheme, double* jitter) {
  if (scheme == NullScheme::EigenWeightedChiSquare) {
    if (jitter) *jitter = 0.0;
    return weighted_chi_square_null(kernel.eigenvalues(), kernel.grid_size(), replicates, rng);
  }
  if (scheme != NullScheme::CholeskyProcess) {
    throw Error(ErrorKind::InvalidArgument, "quantile-process nulls use the eigen or Cholesky scheme");
  }
  if (replicates < 1) throw Error(ErrorKind::InvalidArgument, "need at least one replicate");
  const auto chol = cholesky(kernel.covariance());
  if (jitter) *jitter = chol.jitter;
  const Index md = chol.factor.rows();
  const double inv_m = 1.0 / static_cast<double>(kernel.grid_size());
  std::vector<double> reps(static_cast<std::size_t>(replicates));
  constexpr Index kBatch = 256;
  for (Index start = 0; start < replicates; start += kBatch) {
    const Index cols = std::min(kBatch, replicates - start);
    Matrix z(md, cols);
    parallel_for(static_cast<std::size_t>(cols), [&](std::size_t c) {
      RngStream s = rng.derive(static_cast<std::uint64_t>(start) + c);
      for (Index i = 0; i < md; ++i) z(i, static_cast<Index>(c)) = s.normal();
    });
    const Matrix v = chol.factor.triangularView<Eigen::Lower>() * z;
    for (Index c = 0; c < cols; ++c) reps[static_cast<std::size_t>(start + c)] = v.col(c).squaredNorm() * inv_m;
  }
  return NullDistribution(std::move(reps), NullScheme::CholeskyProcess);
}

double statistic_one_sample(const DataMatrix& x, const std::vector<Vector>& model_quantiles,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg) {
  check_grid(grid, model_quantiles, x.cols());
  const QuantileSolver sx(x, cfg);
  return static_cast<double>(x.rows()) * compare(sx, model_quantiles, grid).mean_squared;
}

double statistic_one_sample(const DataMatrix& x, const ModelQuantileFunction& model,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg) {
  if (model.spec().dim() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "model dimension mismatch");
  return statistic_one_sample(x, evaluate(model, grid), grid, cfg);
}

double statistic_two_sample(const DataMatrix& x, const DataMatrix& y,
                            const std::vector<QuantileIndex>& grid, const SolverConfig& cfg) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const QuantileSolver sy(y, cfg);
  double conv = 1.0;
  const auto qy = solve_field(sy, grid, conv);
  check_grid(grid, qy, x.cols());
  const QuantileSolver sx(x, cfg);
  return static_cast<double>(x.rows() + y.rows()) * compare(sx, qy, grid).mean_squared;
}

OneSampleTest::OneSampleTest(DistributionSpec f0, GofConfig cfg) : f0_(std::move(f0)), cfg_(cfg) {
  check_config(cfg_);
  const Index d = f0_.dim();
  RngStream grid_rng(cfg_.seed, 1);
  grid_ = uniform_ball_grid(cfg_.grid_size, d, cfg_.grid_radius, grid_rng);
  const auto model = ModelQuantileFunction::automatic(f0_);
  model_q_ = evaluate(model, grid_);

  std::vector<QuantileIndex> null_grid = grid_;
  std::vector<Vector> null_q = model_q_;
  if (cfg_.fresh_null_grid) {
    RngStream fresh(cfg_.seed, 4);
    null_grid = uniform_ball_grid(cfg_.grid_size, d, cfg_.grid_radius, fresh);
    null_q = evaluate(model, null_grid);
  }
  // The grid is i.i.d., so its leading points are a uniform random subgrid.
  if (cfg_.scheme == NullScheme::EigenWeightedChiSquare && cfg_.grid_size * d > GofConfig::kSubgridThreshold &&
      cfg_.expectation_draws > GofConfig::kSubgridThreshold && cfg_.null_subgrid < cfg_.grid_size) {
    null_grid.resize(static_cast<std::size_t>(cfg_.null_subgrid), null_grid.front());
    null_q.resize(static_cast<std::size_t>(cfg_.null_subgrid));
  }
  null_grid_size_ = static_cast<Index>(null_grid.size());
  RngStream kernel_rng(cfg_.seed, 2);
  const KernelEstimate kernel = estimate_kernel(f0_, null_grid, null_q, cfg_.expectation_draws, kernel_rng);
  RngStream null_rng(cfg_.seed, 3);
  if (cfg_.scheme == NullScheme::EigenWeightedChiSquare) {
    const Vector ev = kernel.eigenvalues();
    spectrum_size_ = ev.size();
    null_ = weighted_chi_square_null(ev, kernel.grid_size(), cfg_.null_replicates, null_rng);
  } else {
    null_ = null_one_sample(kernel, cfg_.null_replicates, null_rng, cfg_.scheme, &jitter_);
  }
}

TestReport OneSampleTest::run(const DataMatrix& raw, double alpha) const {
  check_alpha(alpha);
  if (raw.cols() != f0_.dim()) throw Error(ErrorKind::ShapeMismatch, "sample dimension differs from the model");
  std::optional<StandardizationTransform> st;
  if (cfg_.standardize) st = fit_standardization(raw);
  const DataMatrix x = st ? apply_standardization(raw, *st) : raw;

  const QuantileSolver sx(x, cfg_.solver);
  const auto cmp = compare(sx, model_q_, grid_);
  const double stat = static_cast<double>(x.rows()) * cmp.mean_squared;

  TestReport r = make_report("spatial-qq-one-sample", stat, null_, alpha);
  r.grid_size = cfg_.grid_size;
  r.seed = cfg_.seed;
  r.add("n", static_cast<double>(x.rows()));
  r.add("dim", static_cast<double>(x.cols()));
  r.add("converged_fraction", cmp.converged_fraction);
  r.add("null_grid_size", static_cast<double>(null_grid_size_));
  r.add("expectation_draws", static_cast<double>(cfg_.expectation_draws));
  if (spectrum_size_ > 0) r.add("spectrum_size", static_cast<double>(spectrum_size_));
  r.add("jitter", jitter_);
  r.note("model", f0_.to_string());
  r.note("null_grid", cfg_.fresh_null_grid ? "fresh" : "shared");
  if (st) {
    r.note("standardized", "true");
    r.note("null_approximation", "location and scatter estimated; null law is approximate");
  } else {
    r.note("standardized", "false");
  }
  return r;
}

TestReport test_one_sample(const DataMatrix& x, const DistributionSpec& f0, double alpha,
                           const GofConfig& cfg) {
  check_alpha(alpha);
  return OneSampleTest(f0, cfg).run(x, alpha);
}

TestReport test_two_sample(const DataMatrix& x, const DataMatrix& y, double alpha, const GofConfig& cfg) {
  check_alpha(alpha);
  check_config(cfg);
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const Index d = x.cols(), n = x.rows(), m = y.rows();
  if (n < d + 1 || m < d + 1) throw Error(ErrorKind::InvalidArgument, "each sample needs at least d + 1 points");

  RngStream grid_rng(cfg.seed, 1);
  const auto grid = uniform_ball_grid(cfg.grid_size, d, cfg.grid_radius, grid_rng);
  const QuantileSolver sx(x, cfg.solver), sy(y, cfg.solver);
  double conv_y = 1.0;
  const auto qy = solve_field(sy, grid, conv_y);
  const auto cmp = compare(sx, qy, grid);
  const double stat = static_cast<double>(n + m) * cmp.mean_squared;

  const DataMatrix z = pool(x, y);
  const QuantileSolver sz(z, cfg.solver);
  auto null_grid = grid;
  if (cfg.fresh_null_grid) {
    RngStream fresh(cfg.seed, 4);
    null_grid = uniform_ball_grid(cfg.grid_size, d, cfg.grid_radius, fresh);
  }
  double conv_z = 1.0;
  const auto qz = solve_field(sz, null_grid, conv_z);
  const double lambda = static_cast<double>(n) / static_cast<double>(n + m);
  const KernelEstimate kernel = estimate_kernel(z, null_grid, qz, 1.0 / (lambda * (1.0 - lambda)));
  RngStream null_rng(cfg.seed, 3);
  double jitter = 0.0;
  const NullDistribution null = null_one_sample(kernel, cfg.null_replicates, null_rng, cfg.scheme, &jitter);

  TestReport r = make_report("spatial-qq-two-sample", stat, null, alpha);
  r.grid_size = cfg.grid_size;
  r.seed = cfg.seed;
  r.add("n", static_cast<double>(n));
  r.add("m", static_cast<double>(m));
  r.add("dim", static_cast<double>(d));
  r.add("lambda", lambda);
  r.add("converged_fraction", std::min({cmp.converged_fraction, conv_y, conv_z}));
  r.add("null_grid_size", static_cast<double>(null_grid.size()));
  r.add("jitter", jitter);
  r.note("null_grid", cfg.fresh_null_grid ? "fresh" : "shared");
  r.note("standardized", "false");
  return r;
}

}  // namespace sqq
