#include "spatialqq/model_quantile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spatialqq/error.hpp"

namespace sqq {

namespace {

struct RadialSample {
  std::vector<double> along;  // first coordinate, antithetic pairs
  std::vector<double> perp2;  // squared norm of the remaining coordinates
};

// Mean of (r - a) / |(r - a, b)| and its derivative in r.
std::pair<double, double> radial_moment(const RadialSample& s, double r) {
  const std::size_t n = s.along.size();
  double value = 0.0, slope = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = r - s.along[i];
    const double q2 = t * t + s.perp2[i];
    if (q2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(q2);
    value += t * inv;
    slope += s.perp2[i] * inv * inv * inv;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return {value * inv_n, slope * inv_n};
}

double solve_radius(const RadialSample& s, double target, double lo) {
  double hi = std::max(2.0 * lo, 1.0);
  while (radial_moment(s, hi).first < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorKind::NoConvergence, "radial quantile bracket diverged");
  }
  double r = lo;
  for (int it = 0; it < 200; ++it) {
    const auto [value, slope] = radial_moment(s, r);
    const double residual = value - target;
    if (std::abs(residual) < 1e-14) return r;
    if (residual < 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    if (hi - lo <= 1e-12 * (1.0 + hi)) return 0.5 * (lo + hi);
    double next = slope > 0.0 ? r - residual / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    r = next;
  }
  throw Error(ErrorKind::NoConvergence, "radial quantile root finder did not converge");
}

std::shared_ptr<const std::vector<double>> build_radial_table(const DistributionSpec& spec,
                                                               const Vector& center) {
  const Index n = ModelQuantileFunction::kRadialDraws;
  RngStream rng(0x5eed, 0x7ad1a1);
  const DataMatrix draws = sample(spec, n, rng);
  RadialSample s;
  s.along.reserve(static_cast<std::size_t>(2 * n));
  s.perp2.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    const Vector x = draws.row(i) - center;
    const double a = x(0);
    const double b2 = std::max(x.squaredNorm() - a * a, 0.0);
    s.along.push_back(a);
    s.perp2.push_back(b2);
    s.along.push_back(-a);
    s.perp2.push_back(b2);
  }
  const Index k = ModelQuantileFunction::kRadialGrid;
  auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(k), 0.0);
  double prev = 0.0;
  for (Index i = 1; i < k; ++i) {
    const double target = ModelQuantileFunction::kMaxIndexNorm * static_cast<double>(i) /
                          static_cast<double>(k - 1);
    prev = solve_radius(s, target, prev);
    (*table)[static_cast<std::size_t>(i)] = prev;
  }
  return table;
}

std::shared_ptr<const std::vector<double>> radial_table(const DistributionSpec& spec,
                                                         const Vector& center) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const std::vector<double>>> tables;
  const std::string key = spec.to_string();
  {
    std::lock_guard lock(mutex);
    if (auto it = tables.find(key); it != tables.end()) return it->second;
  }
  auto table = build_radial_table(spec, center);
  std::lock_guard lock(mutex);
  return tables.emplace(key, std::move(table)).first->second;
}

}  // namespace

ModelQuantileFunction::ModelQuantileFunction(DistributionSpec spec, Method method, Index draws,
                                             std::uint64_t seed)
    : spec_(std::move(spec)), method_(method) {
  if (method_ == Method::ClosedRadial) {
    if (!spec_.is_spherical()) {
      throw Error(ErrorKind::NotSpherical, "closed radial quantiles need a spherical family, got " +
                                               spec_.to_string());
    }
    center_ = spec_.center();
    radial_ = radial_table(spec_, center_);
    return;
  }
  if (draws < spec_.dim() + 1) throw Error(ErrorKind::InvalidArgument, "too few draws");
  RngStream rng(seed, 0x1a4e);
  empirical_ = std::make_shared<EmpiricalState>();
  empirical_->solver = std::make_unique<QuantileSolver>(sample(spec_, draws, rng));
}

ModelQuantileFunction ModelQuantileFunction::automatic(const DistributionSpec& spec) {
  return ModelQuantileFunction(spec, spec.is_spherical() ? Method::ClosedRadial
                                                         : Method::LargeSampleEmpirical);
}

double ModelQuantileFunction::radius(double s) const {
  if (!radial_) throw Error(ErrorKind::NotSpherical, "no radial profile for this method");
  s = std::clamp(s, 0.0, kMaxIndexNorm);
  const double pos = s / kMaxIndexNorm * static_cast<double>(kRadialGrid - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(kRadialGrid - 2));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * (*radial_)[lo] + w * (*radial_)[lo + 1];
}

Vector ModelQuantileFunction::operator()(const Vector& u) const {
  if (u.size() != spec_.dim()) throw Error(ErrorKind::ShapeMismatch, "quantile index dimension mismatch");
  if (radial_) {
    const double s = u.norm();
    if (s == 0.0) return center_;
    return center_ + u * (radius(s) / s);
  }
  const std::vector<double> key(u.data(), u.data() + u.size());
  {
    std::lock_guard lock(empirical_->mutex);
    if (auto it = empirical_->cache.find(key); it != empirical_->cache.end()) return it->second;
  }
  const auto result = empirical_->solver->solve(QuantileIndex::clamped(u, kMaxIndexNorm));
  if (!result.converged) {
    throw Error(ErrorKind::NoConvergence, "large-sample model quantile did not converge");
  }
  std::lock_guard lock(empirical_->mutex);
  empirical_->cache.emplace(key, result.point);
  return result.point;
}

Vector ModelQuantileFunction::operator()(const QuantileIndex& u) const { return (*this)(u.vector()); }

}  // namespace sqq
