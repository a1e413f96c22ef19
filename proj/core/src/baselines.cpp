#include "spatialqq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"

namespace sqq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <bool Strict>
double ecdf_at(const RowMatrix& x, const double* t) {
  const Index n = x.rows(), d = x.cols();
  const double* data = x.data();
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    const double* row = data + i * d;
    bool below = true;
    for (Index j = 0; j < d && below; ++j) below = Strict ? row[j] < t[j] : row[j] <= t[j];
    count += below ? 1 : 0;
  }
  return static_cast<double>(count) / static_cast<double>(n);
}

// Sorted distinct values of each coordinate, with +inf appended.
std::vector<std::vector<double>> lattice_axes(const RowMatrix& x) {
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    auto& a = axes[static_cast<std::size_t>(j)];
    a.reserve(static_cast<std::size_t>(x.rows()) + 1);
    for (Index i = 0; i < x.rows(); ++i) a.push_back(x(i, j));
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    a.push_back(kInf);
  }
  return axes;
}

double lattice_size(const std::vector<std::vector<double>>& axes) {
  double size = 1.0;
  for (const auto& a : axes) size *= static_cast<double>(a.size());
  return size;
}

// Calls fn(t) for every lattice point; t is reused.
template <typename Fn>
void for_each_lattice_point(const std::vector<std::vector<double>>& axes, Fn&& fn) {
  const std::size_t d = axes.size();
  std::vector<std::size_t> idx(d, 0);
  Vector t(static_cast<Index>(d));
  for (std::size_t j = 0; j < d; ++j) t(static_cast<Index>(j)) = axes[j][0];
  while (true) {
    fn(t);
    std::size_t j = 0;
    while (j < d) {
      if (++idx[j] < axes[j].size()) {
        t(static_cast<Index>(j)) = axes[j][idx[j]];
        break;
      }
      idx[j] = 0;
      t(static_cast<Index>(j)) = axes[j][0];
      ++j;
    }
    if (j == d) return;
  }
}

Vector random_lattice_point(const std::vector<std::vector<double>>& axes, RngStream& rng) {
  Vector t(static_cast<Index>(axes.size()));
  for (std::size_t j = 0; j < axes.size(); ++j) t(static_cast<Index>(j)) = axes[j][rng.below(axes[j].size())];
  return t;
}

bool has_closed_1d(const DistributionSpec& f) { return f.dim() == 1 && f.has_closed_cdf(); }

CdfEvaluator evaluator_for(const DistributionSpec& f, std::uint64_t seed) {
  if (f.has_closed_cdf()) return CdfEvaluator(f, ClosedCdf{});
  return CdfEvaluator(f, MonteCarloCdf{100000, seed});
}

Matrix process_paths(const Matrix& factor, Index count, RngStream& rng, double scale, std::uint64_t first) {
  const Index k = factor.cols();
  Matrix xi(k, count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t c) {
    RngStream s = rng.derive(first + c);
    for (Index i = 0; i < k; ++i) xi(i, static_cast<Index>(c)) = s.normal();
  });
  Matrix out = factor * xi;
  if (scale != 1.0) out *= std::sqrt(scale);
  return out;
}

// Replicates of both functionals from one set of paths.
std::pair<std::vector<double>, std::vector<double>> both_functionals(const IndicatorProcess& p, Index replicates,
                                                                     RngStream& rng, double scale) {
  std::vector<double> ks(static_cast<std::size_t>(replicates)), cvm(ks.size());
  constexpr Index kBatch = 256;
  for (Index start = 0; start < replicates; start += kBatch) {
    const Index cols = std::min(kBatch, replicates - start);
    const Matrix paths = p.paths(cols, rng, scale, static_cast<std::uint64_t>(start));
    for (Index c = 0; c < cols; ++c) {
      ks[static_cast<std::size_t>(start + c)] = ks_functional(paths.col(c));
      cvm[static_cast<std::size_t>(start + c)] = cvm_functional(paths.col(c));
    }
  }
  return {std::move(ks), std::move(cvm)};
}

}  // namespace

double EcdfEvaluator::operator()(const Vector& t) const {
  if (t.size() != x_.cols()) throw Error(ErrorKind::ShapeMismatch, "ECDF argument dimension mismatch");
  return ecdf_at<false>(x_.values(), t.data());
}

double EcdfEvaluator::strict(const Vector& t) const {
  if (t.size() != x_.cols()) throw Error(ErrorKind::ShapeMismatch, "ECDF argument dimension mismatch");
  return ecdf_at<true>(x_.values(), t.data());
}

// F_n is constant on each lattice cell while F0 increases across it, so the
// sup of F_n - F0 sits at a cell's lower corner and that of F0 - F_n at the
// upper corner's left limit.
double ks_statistic(const DataMatrix& x, const CdfEvaluator& f0, const KsOptions& opts) {
  if (f0.spec().dim() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "model dimension mismatch");
  const RowMatrix& v = x.values();
  const auto axes = lattice_axes(v);
  double sup = 0.0;
  auto visit = [&](const Vector& t) {
    const double f = f0(t);
    sup = std::max({sup, ecdf_at<false>(v, t.data()) - f, f - ecdf_at<true>(v, t.data())});
  };
  if (lattice_size(axes) * static_cast<double>(x.rows() * x.cols()) <= opts.exact_budget) {
    for_each_lattice_point(axes, visit);
  } else {
    for (Index i = 0; i < x.rows(); ++i) visit(x.row(i));
    RngStream rng(opts.seed, 0x1a77);
    for (Index p = 0; p < opts.probes; ++p) visit(random_lattice_point(axes, rng));
  }
  return std::sqrt(static_cast<double>(x.rows())) * sup;
}

double ks_statistic(const DataMatrix& x, const DataMatrix& y, const KsOptions& opts) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const DataMatrix z = pool(x, y);
  const auto axes = lattice_axes(z.values());
  double sup = 0.0;
  const RowMatrix &vx = x.values(), &vy = y.values();
  auto visit = [&](const Vector& t) {
    sup = std::max(sup, std::abs(ecdf_at<false>(vx, t.data()) - ecdf_at<false>(vy, t.data())));
  };
  if (lattice_size(axes) * static_cast<double>(z.rows() * z.cols()) <= opts.exact_budget) {
    for_each_lattice_point(axes, visit);
  } else {
    for (Index i = 0; i < z.rows(); ++i) {
      const Vector t = z.row(i);
      visit(t);
      sup = std::max(sup, std::abs(ecdf_at<true>(vx, t.data()) - ecdf_at<true>(vy, t.data())));
    }
    RngStream rng(opts.seed, 0x1a77);
    for (Index p = 0; p < opts.probes; ++p) visit(random_lattice_point(axes, rng));
  }
  return std::sqrt(static_cast<double>(z.rows())) * sup;
}

double cvm_statistic(const DataMatrix& x, const DistributionSpec& f0, const CvmOptions& opts) {
  if (f0.dim() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "model dimension mismatch");
  const Index n = x.rows();
  const double nd = static_cast<double>(n);
  if (has_closed_1d(f0)) {
    const CdfEvaluator f(f0, ClosedCdf{});
    std::vector<double> v(x.values().data(), x.values().data() + n);
    std::sort(v.begin(), v.end());
    double sum = 1.0 / (12.0 * nd);
    Vector t(1);
    for (Index i = 0; i < n; ++i) {
      t(0) = v[static_cast<std::size_t>(i)];
      const double r = f(t) - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd);
      sum += r * r;
    }
    return sum;
  }
  if (opts.draws < 1) throw Error(ErrorKind::InvalidArgument, "CVM integration needs draws");
  RngStream rng(opts.seed, 0xc7a1);
  const DataMatrix draws = sample(f0, opts.draws, rng);
  const CdfEvaluator f = evaluator_for(f0, opts.seed);
  std::vector<double> sq(static_cast<std::size_t>(opts.draws));
  parallel_for(sq.size(), [&](std::size_t k) {
    const Vector t = draws.row(static_cast<Index>(k));
    const double r = ecdf_at<false>(x.values(), t.data()) - f(t);
    sq[k] = r * r;
  });
  double sum = 0.0;
  for (double s : sq) sum += s;
  return nd * sum / static_cast<double>(opts.draws);
}

double cvm_statistic(const DataMatrix& x, const DataMatrix& y) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const DataMatrix z = pool(x, y);
  double sum = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    const double r = ecdf_at<false>(x.values(), z.row_data(i)) - ecdf_at<false>(y.values(), z.row_data(i));
    sum += r * r;
  }
  return sum;  // (n + m) times the mean over the pooled points
}

IndicatorProcess IndicatorProcess::from_model(const DistributionSpec& f, Index grid_t, RngStream& rng,
                                              Index reference_draws) {
  if (grid_t < 1) throw Error(ErrorKind::InvalidArgument, "t-grid must be nonempty");
  IndicatorProcess p;
  p.points_ = sample(f, grid_t, rng).values();
  const Index t = grid_t, d = f.dim();
  Matrix cov(t, t);
  p.cdf_.resize(t);
  if (f.has_closed_cdf()) {
    const CdfEvaluator cdf(f, ClosedCdf{});
    for (Index i = 0; i < t; ++i) p.cdf_(i) = cdf(p.points_.row(i).transpose());
    parallel_for(static_cast<std::size_t>(t), [&](std::size_t ii) {
      const Index i = static_cast<Index>(ii);
      Vector m(d);
      for (Index j = 0; j <= i; ++j) {
        m = p.points_.row(i).transpose().cwiseMin(p.points_.row(j).transpose());
        cov(i, j) = cdf(m) - p.cdf_(i) * p.cdf_(j);
      }
    });
  } else {
    RngStream ref_rng = rng.derive(1);
    const RowMatrix ref = sample(f, reference_draws, ref_rng).values();
    Matrix ind(reference_draws, t);
    parallel_for(static_cast<std::size_t>(t), [&](std::size_t ii) {
      const Index i = static_cast<Index>(ii);
      for (Index k = 0; k < reference_draws; ++k) {
        bool below = true;
        for (Index j = 0; j < d && below; ++j) below = ref(k, j) <= p.points_(i, j);
        ind(k, i) = below ? 1.0 : 0.0;
      }
    });
    p.cdf_ = ind.colwise().mean().transpose();
    cov = ind.transpose() * ind / static_cast<double>(reference_draws) - p.cdf_ * p.cdf_.transpose();
  }
  const Matrix full = cov.selfadjointView<Eigen::Lower>();
  auto chol = cholesky(full);
  p.factor_ = std::move(chol.factor);
  p.jitter_ = chol.jitter;
  return p;
}

IndicatorProcess IndicatorProcess::from_sample(const DataMatrix& reference, Index grid_t, RngStream& rng) {
  if (grid_t < 1) throw Error(ErrorKind::InvalidArgument, "t-grid must be nonempty");
  const Index n = reference.rows(), d = reference.cols();
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  if (grid_t < n) {
    for (Index i = 0; i < grid_t; ++i) {
      const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
    rows.resize(static_cast<std::size_t>(grid_t));
  }
  const Index t = static_cast<Index>(rows.size());
  IndicatorProcess p;
  p.points_.resize(t, d);
  for (Index i = 0; i < t; ++i) p.points_.row(i) = reference.row(rows[static_cast<std::size_t>(i)]).transpose();
  // Centred indicators: cov = B^T B / N exactly reproduces M(min) - M M^T.
  Matrix b(n, t);
  for (Index i = 0; i < t; ++i) {
    for (Index k = 0; k < n; ++k) {
      bool below = true;
      for (Index j = 0; j < d && below; ++j) below = reference(k, j) <= p.points_(i, j);
      b(k, i) = below ? 1.0 : 0.0;
    }
  }
  p.cdf_ = b.colwise().mean().transpose();
  b.rowwise() -= p.cdf_.transpose();
  p.factor_ = b.transpose() / std::sqrt(static_cast<double>(n));
  return p;
}

Matrix IndicatorProcess::paths(Index count, RngStream& rng, double scale, std::uint64_t first) const {
  return process_paths(factor_, count, rng, scale, first);
}

double ks_functional(const Eigen::Ref<const Vector>& path) { return path.cwiseAbs().maxCoeff(); }

double cvm_functional(const Eigen::Ref<const Vector>& path) { return path.squaredNorm() / static_cast<double>(path.size()); }

NullDistribution ks_cvm_null(BaselineKind kind, const IndicatorProcess& process, Index replicates,
                             RngStream& rng, double scale) {
  if (replicates < 1) throw Error(ErrorKind::InvalidArgument, "need at least one replicate");
  auto [ks, cvm] = both_functionals(process, replicates, rng, scale);
  return NullDistribution(kind == BaselineKind::KS ? std::move(ks) : std::move(cvm), NullScheme::GaussianProcess);
}

NullDistribution ks_cvm_null(BaselineKind kind, const DistributionSpec& f_ref, Index grid_t, Index replicates,
                             RngStream& rng, double scale) {
  RngStream grid_rng = rng.derive(0x9e1d);
  const auto process = IndicatorProcess::from_model(f_ref, grid_t, grid_rng);
  return ks_cvm_null(kind, process, replicates, rng, scale);
}

BaselineOneSample::BaselineOneSample(DistributionSpec f0, BaselineConfig cfg)
    : f0_(std::move(f0)), cfg_(cfg), cdf_(evaluator_for(f0_, cfg.seed)) {
  RngStream grid_rng(cfg_.seed, 5);
  const auto process = IndicatorProcess::from_model(f0_, cfg_.t_grid, grid_rng);
  grid_points_ = process.size();
  jitter_ = process.jitter();
  RngStream null_rng(cfg_.seed, 6);
  auto [ks, cvm] = both_functionals(process, cfg_.null_replicates, null_rng, 1.0);
  ks_null_ = NullDistribution(std::move(ks), NullScheme::GaussianProcess);
  cvm_null_ = NullDistribution(std::move(cvm), NullScheme::GaussianProcess);
}

TestReport BaselineOneSample::ks(const DataMatrix& x, double alpha) const {
  KsOptions opts;
  opts.probes = cfg_.lattice_probes;
  opts.seed = cfg_.seed;
  TestReport r = make_report("ks-one-sample", ks_statistic(x, cdf_, opts), ks_null_, alpha);
  r.grid_size = grid_points_;
  r.seed = cfg_.seed;
  r.add("n", static_cast<double>(x.rows()));
  r.add("jitter", jitter_);
  r.note("model", f0_.to_string());
  return r;
}

TestReport BaselineOneSample::cvm(const DataMatrix& x, double alpha) const {
  TestReport r = make_report("cvm-one-sample", cvm_statistic(x, f0_, {cfg_.cvm_draws, cfg_.seed}), cvm_null_, alpha);
  r.grid_size = grid_points_;
  r.seed = cfg_.seed;
  r.add("n", static_cast<double>(x.rows()));
  r.add("jitter", jitter_);
  r.note("model", f0_.to_string());
  return r;
}

TestReport baseline_two_sample(BaselineKind kind, const DataMatrix& x, const DataMatrix& y, double alpha,
                               const BaselineConfig& cfg) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const DataMatrix z = pool(x, y);
  RngStream grid_rng(cfg.seed, 5);
  const auto process = IndicatorProcess::from_sample(z, cfg.t_grid, grid_rng);
  const double lambda = static_cast<double>(x.rows()) / static_cast<double>(z.rows());
  RngStream null_rng(cfg.seed, 6);
  const auto null = ks_cvm_null(kind, process, cfg.null_replicates, null_rng, 1.0 / (lambda * (1.0 - lambda)));
  double stat = 0.0;
  if (kind == BaselineKind::KS) {
    KsOptions opts;
    opts.probes = cfg.lattice_probes;
    opts.seed = cfg.seed;
    stat = ks_statistic(x, y, opts);
  } else {
    stat = cvm_statistic(x, y);
  }
  TestReport r = make_report(kind == BaselineKind::KS ? "ks-two-sample" : "cvm-two-sample", stat, null, alpha);
  r.grid_size = process.size();
  r.seed = cfg.seed;
  r.add("n", static_cast<double>(x.rows()));
  r.add("m", static_cast<double>(y.rows()));
  r.add("lambda", lambda);
  return r;
}

}  // namespace sqq
