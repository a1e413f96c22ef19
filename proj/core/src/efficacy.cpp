#include <algorithm>
#include <cmath>
#include <functional>

#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"
#include "spatialqq/powerlab.hpp"

namespace sqq {

namespace {

std::vector<double> power_from(const std::vector<double>& gammas, Index replicates, double critical,
                               const std::function<double(Index, double)>& stat) {
  std::vector<double> power;
  for (double g : gammas) {
    Index above = 0;
    for (Index r = 0; r < replicates; ++r) above += stat(r, g) > critical ? 1 : 0;
    power.push_back(static_cast<double>(above) / static_cast<double>(replicates));
  }
  return power;
}

CdfEvaluator cdf_for(const DistributionSpec& f, std::uint64_t seed) {
  if (f.has_closed_cdf()) return CdfEvaluator(f, ClosedCdf{});
  return CdfEvaluator(f, MonteCarloCdf{100000, seed});
}

// Index of the first maximum after checking strict increase up to it.
std::size_t increasing_prefix(const ContiguousCurve& c) {
  if (c.power.size() < 2 || c.power.size() != c.gammas.size()) {
    throw Error(ErrorKind::InvalidArgument, "a power curve needs at least two points");
  }
  const auto top = static_cast<std::size_t>(std::max_element(c.power.begin(), c.power.end()) - c.power.begin());
  for (std::size_t i = 1; i <= top; ++i) {
    if (!(c.power[i] > c.power[i - 1]) || !(c.gammas[i] > c.gammas[i - 1])) {
      throw Error(ErrorKind::NotMonotone, c.test + " power is not strictly increasing at gamma = " +
                                              std::to_string(c.gammas[i]));
    }
  }
  if (top == 0) throw Error(ErrorKind::NotMonotone, c.test + " power never rises above its gamma = 0 value");
  return top;
}

double invert(const MonotoneCubic& f, double target) {
  double lo = f.x_min(), hi = f.x_max();
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> ContiguousSpec::default_gammas() { return sweep(6.0, 0.5); }

std::vector<double> ContiguousSpec::sweep(double max, double step) {
  if (!(step > 0.0) || !(max >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sweep needs step > 0 and max >= 0");
  std::vector<double> g;
  const auto count = static_cast<Index>(std::floor(max / step + 1e-9));
  for (Index k = 0; k <= count; ++k) g.push_back(static_cast<double>(k) * step);
  return g;
}

void ContiguousSpec::validate() const {
  if (base.dim() != contaminant.dim()) throw Error(ErrorKind::BadSpec, "base and contaminant differ in dimension");
  if (gammas.empty()) throw Error(ErrorKind::BadSpec, "gamma sweep is empty");
  for (double g : gammas) {
    if (!(g >= 0.0)) throw Error(ErrorKind::BadSpec, "gamma must be nonnegative");
  }
  if (two_sample && !(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorKind::BadSpec, "lambda must lie in (0, 1)");
  if (grid_size < 1 || expectation_draws < 2 || contaminant_draws < 2 || t_grid < 1 || replicates < 1) {
    throw Error(ErrorKind::BadSpec, "contiguous grid and draw counts must be positive");
  }
}

double ContiguousCurve::stderr_at(std::size_t i) const {
  const double p = power.at(i);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(replicates));
}

// With K = V diag(l) V^T and mean gamma b, |Z|^2 = A + 2 gamma B + gamma^2 C
// where A = sum l_k xi_k^2, B = sum sqrt(l_k) xi_k a_k, C = |a|^2, a = V^T b.
ContiguousCurve contiguous_power_spatial(const ContiguousSpec& spec, double alpha) {
  spec.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  const Index d = spec.base.dim(), m = spec.grid_size, md = m * d;
  RngStream grid_rng(spec.seed, 1);
  const auto grid = uniform_ball_grid(m, d, ModelQuantileFunction::kMaxIndexNorm, grid_rng);
  const auto model = ModelQuantileFunction::automatic(spec.base);
  std::vector<Vector> q(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { q[i] = model(grid[i]); });
  RngStream kernel_rng(spec.seed, 2);
  const KernelEstimate kernel = estimate_kernel(spec.base, grid, q, spec.expectation_draws, kernel_rng);
  const double scale = spec.two_sample ? 1.0 / (spec.lambda * (1.0 - spec.lambda)) : 1.0;
  const SymEigen eig = sym_eigen(scale * kernel.covariance());

  // Mean direction D1^{-1} E_H[s_u], negated for the two-sample alternative.
  RngStream h_rng(spec.seed, 3);
  const RowMatrix h = sample(spec.contaminant, spec.contaminant_draws, h_rng).values();
  Vector b(md);
  std::vector<double> se(static_cast<std::size_t>(m));
  const double nh = static_cast<double>(spec.contaminant_draws);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t ii) {
    const Index i = static_cast<Index>(ii);
    const Matrix& inv = kernel.d1_inverse[ii];
    Vector sum = Vector::Zero(d), sq = Vector::Zero(d), diff(d), v(d);
    for (Index j = 0; j < h.rows(); ++j) {
      diff = h.row(j).transpose() - q[ii];
      const double dist = diff.norm();
      v = dist < 1e-12 ? Vector(grid[ii].vector()) : Vector(diff / dist + grid[ii].vector());
      v = inv * v;
      sum += v;
      sq += v.cwiseProduct(v);
    }
    const Vector mean = sum / nh;
    b.segment(i * d, d) = (spec.two_sample ? -1.0 : 1.0) * mean;
    se[ii] = ((sq / nh - mean.cwiseProduct(mean)).cwiseMax(0.0) / nh).cwiseSqrt().maxCoeff();
  });

  const Vector a = eig.vectors.transpose() * b;
  const double c_term = a.squaredNorm();
  Vector root(md);
  for (Index k = 0; k < md; ++k) root(k) = std::sqrt(std::max(eig.values(k), 0.0));

  const Index reps = spec.replicates;
  std::vector<double> big_a(static_cast<std::size_t>(reps)), big_b(big_a.size());
  RngStream noise(spec.seed, 4);
  parallel_for(big_a.size(), [&](std::size_t r) {
    RngStream s = noise.derive(r);
    double sa = 0.0, sb = 0.0;
    for (Index k = 0; k < md; ++k) {
      const double z = root(k) * s.normal();
      sa += z * z;
      sb += z * a(k);
    }
    big_a[r] = sa;
    big_b[r] = sb;
  });
  const double inv_m = 1.0 / static_cast<double>(m);
  auto stat = [&](Index r, double g) {
    const auto i = static_cast<std::size_t>(r);
    return (big_a[i] + 2.0 * g * big_b[i] + g * g * c_term) * inv_m;
  };
  std::vector<double> null(big_a.size());
  for (std::size_t r = 0; r < null.size(); ++r) null[r] = big_a[r] * inv_m;

  ContiguousCurve curve;
  curve.test = "spatial";
  curve.gammas = spec.gammas;
  curve.replicates = reps;
  curve.critical_value = NullDistribution(std::move(null), NullScheme::EigenWeightedChiSquare).critical_value(alpha);
  curve.power = power_from(spec.gammas, reps, curve.critical_value, stat);
  curve.mean_stderr = *std::max_element(se.begin(), se.end());
  return curve;
}

ContiguousCurve contiguous_power_baseline(const ContiguousSpec& spec, BaselineKind kind, double alpha) {
  spec.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  RngStream grid_rng(spec.seed, 5);
  const auto process = IndicatorProcess::from_model(spec.base, spec.t_grid, grid_rng);
  const CdfEvaluator h_cdf = cdf_for(spec.contaminant, spec.seed);
  const Index t = process.size();
  Vector b(t);
  for (Index i = 0; i < t; ++i) b(i) = h_cdf(process.points().row(i).transpose()) - process.cdf()(i);
  if (spec.two_sample) b = -b;
  const double scale = spec.two_sample ? 1.0 / (spec.lambda * (1.0 - spec.lambda)) : 1.0;

  RngStream noise(spec.seed, 6);
  const Matrix paths = process.paths(spec.replicates, noise, scale);
  auto functional = [&](const Vector& z) { return kind == BaselineKind::KS ? ks_functional(z) : cvm_functional(z); };
  auto stat = [&](Index r, double g) { return functional(paths.col(r) + g * b); };

  std::vector<double> null(static_cast<std::size_t>(spec.replicates));
  for (Index r = 0; r < spec.replicates; ++r) null[static_cast<std::size_t>(r)] = stat(r, 0.0);

  ContiguousCurve curve;
  curve.test = kind == BaselineKind::KS ? "ks" : "cvm";
  curve.gammas = spec.gammas;
  curve.replicates = spec.replicates;
  curve.critical_value = NullDistribution(std::move(null), NullScheme::GaussianProcess).critical_value(alpha);
  curve.power = power_from(spec.gammas, spec.replicates, curve.critical_value, stat);
  return curve;
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error(ErrorKind::InvalidArgument, "interpolation needs two or more points");
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x_[k + 1] - x_[k];
    if (!(h[k] > 0.0)) throw Error(ErrorKind::InvalidArgument, "abscissae must increase strictly");
    delta[k] = (y_[k + 1] - y_[k]) / h[k];
  }
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1], w2 = h[k] + 2.0 * h[k - 1];
    slope_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
}

double MonotoneCubic::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
  const double h = x_[k + 1] - x_[k], s = (t - x_[k]) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * y_[k] + h10 * h * slope_[k] + h01 * y_[k + 1] + h11 * h * slope_[k + 1];
}

std::vector<EfficacyPoint> pitman_efficacy(const ContiguousCurve& first, const ContiguousCurve& other,
                                           const std::vector<double>& targets) {
  const std::size_t top_a = increasing_prefix(first), top_b = increasing_prefix(other);
  const MonotoneCubic fa({first.gammas.begin(), first.gammas.begin() + static_cast<std::ptrdiff_t>(top_a) + 1},
                         {first.power.begin(), first.power.begin() + static_cast<std::ptrdiff_t>(top_a) + 1});
  const MonotoneCubic fb({other.gammas.begin(), other.gammas.begin() + static_cast<std::ptrdiff_t>(top_b) + 1},
                         {other.power.begin(), other.power.begin() + static_cast<std::ptrdiff_t>(top_b) + 1});
  std::vector<EfficacyPoint> out;
  for (double p : targets) {
    EfficacyPoint e;
    e.target = p;
    if (p <= first.power.front() || p <= other.power.front()) {
      e.at_limit = true;
      e.efficacy = std::nan("");
      out.push_back(e);
      continue;
    }
    if (p > first.power[top_a] || p > other.power[top_b]) {
      throw Error(ErrorKind::TargetUnreachable, "target power " + std::to_string(p) + " lies beyond the gamma sweep");
    }
    e.gamma = invert(fa, p);
    e.gamma_other = invert(fb, p);
    e.efficacy = (e.gamma_other / e.gamma) * (e.gamma_other / e.gamma);
    out.push_back(e);
  }
  return out;
}

}  // namespace sqq
