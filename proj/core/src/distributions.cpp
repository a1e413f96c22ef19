#include "spatialqq/distributions.hpp"

#include <cmath>
#include <numbers>

#include "spatialqq/error.hpp"

namespace sqq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_diagonal(const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::BadSpec, what);
}

void require_spd(const Matrix& m, const std::string& what) {
  require(m.rows() == m.cols() && m.rows() >= 1, what + " must be square");
  require(m.allFinite(), what + " must be finite");
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()),
          what + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, what + " must be positive definite");
}

// Fills out[0..d) with a direction uniform on the unit sphere.
void unit_direction(RngStream& rng, Index d, double* out) {
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (Index j = 0; j < d; ++j) {
      out[j] = rng.normal();
      norm2 += out[j] * out[j];
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (Index j = 0; j < d; ++j) out[j] *= inv;
}

struct SkewNormalParams {
  Matrix omega;
  Vector alpha;
};

SkewNormalParams skew_normal_params(const SkewNormalFamily& f) {
  const Index d = f.delta.size();
  Vector scale(d), lambda(d);
  for (Index j = 0; j < d; ++j) {
    scale(j) = std::sqrt(1.0 - f.delta(j) * f.delta(j));
    lambda(j) = f.delta(j) / scale(j);
  }
  const Matrix psi_inv = f.psi.inverse();
  SkewNormalParams p;
  p.omega = scale.asDiagonal() * (f.psi + lambda * lambda.transpose()) * scale.asDiagonal();
  const double denom = std::sqrt(1.0 + lambda.dot(psi_inv * lambda));
  p.alpha = scale.cwiseInverse().asDiagonal() * (psi_inv * lambda) / denom;
  return p;
}

double mvn_density(const Vector& x, const Vector& mean, const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  const Vector z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double d = static_cast<double>(x.size());
  return std::exp(-0.5 * z.squaredNorm() - 0.5 * log_det -
                  0.5 * d * std::log(2.0 * std::numbers::pi));
}

}  // namespace

DistributionSpec DistributionSpec::normal(Vector mean, Matrix covariance) {
  require(mean.size() >= 1, "normal: dimension must be >= 1");
  require(mean.allFinite(), "normal: mean must be finite");
  require(covariance.rows() == mean.size(), "normal: covariance dimension mismatch");
  require_spd(covariance, "normal: covariance");
  const Index d = mean.size();
  return DistributionSpec(NormalFamily{std::move(mean), std::move(covariance)}, d);
}

DistributionSpec DistributionSpec::standard_normal(Index d) {
  require(d >= 1, "normal: dimension must be >= 1");
  return normal(Vector::Zero(d), Matrix::Identity(d, d));
}

DistributionSpec DistributionSpec::laplace(Index d) {
  require(d >= 1, "laplace: dimension must be >= 1");
  return DistributionSpec(LaplaceFamily{d}, d);
}

DistributionSpec DistributionSpec::cauchy(Index d) {
  require(d >= 1, "cauchy: dimension must be >= 1");
  return DistributionSpec(CauchyFamily{d}, d);
}

DistributionSpec DistributionSpec::skew_normal(Vector delta, Matrix psi) {
  const Index d = delta.size();
  require(d >= 1, "skewnormal: dimension must be >= 1");
  require((delta.array().abs() < 1.0).all(), "skewnormal: |delta_i| < 1 required");
  require(psi.rows() == d, "skewnormal: psi dimension mismatch");
  require_spd(psi, "skewnormal: psi");
  require((psi.diagonal().array() - 1.0).abs().maxCoeff() < 1e-12,
          "skewnormal: psi must be a correlation matrix");
  return DistributionSpec(SkewNormalFamily{std::move(delta), std::move(psi)}, d);
}

DistributionSpec DistributionSpec::mixture(double beta, DistributionSpec base,
                                           DistributionSpec contaminant) {
  require(beta >= 0.0 && beta <= 1.0, "mixture: beta must lie in [0, 1]");
  require(base.dim() == contaminant.dim(), "mixture: components must share dimension");
  const Index d = base.dim();
  return DistributionSpec(
      MixtureFamily{beta, std::make_shared<const DistributionSpec>(std::move(base)),
                    std::make_shared<const DistributionSpec>(std::move(contaminant))},
      d);
}

DistributionSpec DistributionSpec::brownian(double mean_level, double scale,
                                            std::vector<double> grid) {
  require(std::isfinite(mean_level), "brownian: mean must be finite");
  require(std::isfinite(scale) && scale >= 0.0, "brownian: scale must be >= 0");
  require(!grid.empty(), "brownian: grid must be nonempty");
  double prev = 0.0;
  for (double t : grid) {
    require(t > prev && t <= 1.0, "brownian: grid must be strictly increasing in (0, 1]");
    prev = t;
  }
  const auto d = static_cast<Index>(grid.size());
  return DistributionSpec(BrownianFamily{mean_level, scale, std::move(grid)}, d);
}

DistributionSpec DistributionSpec::brownian_equispaced(Index points, double mean_level,
                                                       double scale) {
  require(points >= 1, "brownian: need at least one grid point");
  std::vector<double> grid;
  for (Index k = 1; k <= points; ++k)
    grid.push_back(static_cast<double>(k) / static_cast<double>(points));
  return brownian(mean_level, scale, std::move(grid));
}

bool DistributionSpec::is_spherical() const {
  return std::visit(
      overloaded{
          [](const NormalFamily& f) {
            const double v = f.covariance(0, 0);
            return is_diagonal(f.covariance) &&
                   (f.covariance.diagonal().array() == v).all();
          },
          [](const LaplaceFamily&) { return true; },
          [](const CauchyFamily&) { return true; },
          [](const SkewNormalFamily& f) { return (f.delta.array() == 0.0).all() && is_diagonal(f.psi); },
          [](const MixtureFamily& f) {
            if (f.beta == 0.0) return f.base->is_spherical();
            if (f.beta == 1.0) return f.contaminant->is_spherical();
            return f.base->is_spherical() && f.contaminant->is_spherical() &&
                   f.base->center() == f.contaminant->center();
          },
          [](const BrownianFamily&) { return false; },
      },
      family_);
}

Vector DistributionSpec::center() const {
  return std::visit(
      overloaded{
          [](const NormalFamily& f) -> Vector { return f.mean; },
          [](const LaplaceFamily& f) -> Vector { return Vector::Zero(f.dim); },
          [](const CauchyFamily& f) -> Vector { return Vector::Zero(f.dim); },
          [](const SkewNormalFamily& f) -> Vector {
            if (!(f.delta.array() == 0.0).all())
              throw Error(ErrorKind::NotSpherical, "skew-normal has no symmetry center");
            return Vector::Zero(f.delta.size());
          },
          [](const MixtureFamily& f) -> Vector {
            if (f.beta == 1.0) return f.contaminant->center();
            return f.base->center();
          },
          [](const BrownianFamily& f) -> Vector {
            return Vector::Constant(static_cast<Index>(f.grid.size()), f.mean_level);
          },
      },
      family_);
}

bool DistributionSpec::has_closed_cdf() const {
  return std::visit(
      overloaded{
          [](const NormalFamily& f) { return is_diagonal(f.covariance); },
          [](const LaplaceFamily& f) { return f.dim == 1; },
          [](const CauchyFamily& f) { return f.dim == 1; },
          [](const SkewNormalFamily&) { return false; },
          [](const MixtureFamily& f) {
            return f.base->has_closed_cdf() && f.contaminant->has_closed_cdf();
          },
          [](const BrownianFamily&) { return false; },
      },
      family_);
}

void draw_into(const DistributionSpec& spec, RngStream& rng, double* out) {
  const Index d = spec.dim();
  std::visit(
      overloaded{
          [&](const NormalFamily& f) {
            const Vector z = rng.normal_vector(d);
            if (is_diagonal(f.covariance)) {
              for (Index j = 0; j < d; ++j)
                out[j] = f.mean(j) + std::sqrt(f.covariance(j, j)) * z(j);
              return;
            }
            Eigen::LLT<Matrix> llt(f.covariance);
            Eigen::Map<Vector>(out, d) = f.mean + llt.matrixL() * z;
          },
          [&](const LaplaceFamily&) {
            unit_direction(rng, d, out);
            const double r = rng.gamma(static_cast<double>(d));
            for (Index j = 0; j < d; ++j) out[j] *= r;
          },
          [&](const CauchyFamily&) {
            double chi = 0.0;
            do {
              chi = rng.chi_square(1.0);
            } while (chi == 0.0);
            const double inv = 1.0 / std::sqrt(chi);
            for (Index j = 0; j < d; ++j) out[j] = rng.normal() * inv;
          },
          [&](const SkewNormalFamily& f) {
            Eigen::LLT<Matrix> llt(f.psi);
            const double u0 = std::abs(rng.normal());
            const Vector u = llt.matrixL() * rng.normal_vector(d);
            for (Index j = 0; j < d; ++j)
              out[j] = f.delta(j) * u0 + std::sqrt(1.0 - f.delta(j) * f.delta(j)) * u(j);
          },
          [&](const MixtureFamily& f) {
            // The endpoints skip the coin so they reproduce the pure laws draw for draw.
            const bool contaminate = f.beta == 1.0 || (f.beta > 0.0 && rng.uniform() < f.beta);
            draw_into(contaminate ? *f.contaminant : *f.base, rng, out);
          },
          [&](const BrownianFamily& f) {
            const double amp = std::sqrt(f.scale);
            double w = 0.0, prev = 0.0;
            for (Index k = 0; k < d; ++k) {
              const double t = f.grid[static_cast<std::size_t>(k)];
              w += std::sqrt(t - prev) * rng.normal();
              prev = t;
              out[k] = f.mean_level + amp * w;
            }
          },
      },
      spec.family());
}

DataMatrix sample(const DistributionSpec& spec, Index n, RngStream& rng) {
  if (n < 1) throw Error(ErrorKind::BadSpec, "sample size must be >= 1");
  const Index d = spec.dim();
  RowMatrix values(n, d);
  if (const auto* f = std::get_if<NormalFamily>(&spec.family())) {
    const Matrix l = Eigen::LLT<Matrix>(f->covariance).matrixL();
    for (Index i = 0; i < n; ++i) {
      const Vector z = rng.normal_vector(d);
      values.row(i) = (f->mean + l * z).transpose();
    }
  } else if (const auto* s = std::get_if<SkewNormalFamily>(&spec.family())) {
    const Matrix l = Eigen::LLT<Matrix>(s->psi).matrixL();
    for (Index i = 0; i < n; ++i) {
      const double u0 = std::abs(rng.normal());
      const Vector u = l * rng.normal_vector(d);
      for (Index j = 0; j < d; ++j)
        values(i, j) = s->delta(j) * u0 + std::sqrt(1.0 - s->delta(j) * s->delta(j)) * u(j);
    }
  } else {
    for (Index i = 0; i < n; ++i) draw_into(spec, rng, values.data() + i * d);
  }
  return DataMatrix(std::move(values));
}

namespace {

double closed_cdf(const DistributionSpec& spec, const Vector& t) {
  return std::visit(
      overloaded{
          [&](const NormalFamily& f) {
            double p = 1.0;
            for (Index j = 0; j < t.size(); ++j)
              p *= normal_cdf((t(j) - f.mean(j)) / std::sqrt(f.covariance(j, j)));
            return p;
          },
          [&](const LaplaceFamily&) {
            const double x = t(0);
            return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
          },
          [&](const CauchyFamily&) { return 0.5 + std::atan(t(0)) / std::numbers::pi; },
          [&](const SkewNormalFamily&) -> double {
            throw Error(ErrorKind::NoClosedForm, "skew-normal CDF");
          },
          [&](const MixtureFamily& f) {
            return (1.0 - f.beta) * closed_cdf(*f.base, t) + f.beta * closed_cdf(*f.contaminant, t);
          },
          [&](const BrownianFamily&) -> double {
            throw Error(ErrorKind::NoClosedForm, "Brownian path CDF");
          },
      },
      spec.family());
}

}  // namespace

CdfEvaluator::CdfEvaluator(DistributionSpec spec, CdfMethod method)
    : spec_(std::move(spec)), closed_(std::holds_alternative<ClosedCdf>(method)) {
  if (closed_) {
    if (!spec_.has_closed_cdf()) {
      throw Error(ErrorKind::NoClosedForm, "no closed-form CDF for " + spec_.to_string());
    }
    return;
  }
  const auto& mc = std::get<MonteCarloCdf>(method);
  if (mc.draws < 1) throw Error(ErrorKind::InvalidArgument, "MonteCarlo CDF needs draws >= 1");
  RngStream rng(mc.seed, 0xcdf);
  draws_ = std::make_shared<const RowMatrix>(sample(spec_, mc.draws, rng).values());
}

double CdfEvaluator::operator()(const Vector& t) const {
  if (t.size() != spec_.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "CDF argument dimension mismatch");
  }
  if (closed_) return closed_cdf(spec_, t);
  const Index n = draws_->rows(), d = draws_->cols();
  const double* data = draws_->data();
  Index count = 0;
  for (Index i = 0; i < n; ++i) {
    const double* row = data + i * d;
    bool below = true;
    for (Index j = 0; j < d && below; ++j) below = row[j] <= t(j);
    count += below ? 1 : 0;
  }
  return static_cast<double>(count) / static_cast<double>(n);
}

double cdf(const DistributionSpec& spec, const Vector& t, const CdfMethod& method) {
  return CdfEvaluator(spec, method)(t);
}

double density(const DistributionSpec& spec, const Vector& x) {
  if (x.size() != spec.dim()) {
    throw Error(ErrorKind::ShapeMismatch, "density argument dimension mismatch");
  }
  const double d = static_cast<double>(spec.dim());
  return std::visit(
      overloaded{
          [&](const NormalFamily& f) { return mvn_density(x, f.mean, f.covariance); },
          [&](const LaplaceFamily&) {
            const double log_c = std::lgamma(d / 2.0) - std::log(2.0) - std::lgamma(d) -
                                 (d / 2.0) * std::log(std::numbers::pi);
            return std::exp(log_c - x.norm());
          },
          [&](const CauchyFamily&) {
            const double log_c = std::lgamma((d + 1.0) / 2.0) -
                                 ((d + 1.0) / 2.0) * std::log(std::numbers::pi);
            return std::exp(log_c - ((d + 1.0) / 2.0) * std::log1p(x.squaredNorm()));
          },
          [&](const SkewNormalFamily& f) {
            const auto p = skew_normal_params(f);
            return 2.0 * mvn_density(x, Vector::Zero(x.size()), p.omega) * normal_cdf(p.alpha.dot(x));
          },
          [&](const MixtureFamily& f) {
            return (1.0 - f.beta) * density(*f.base, x) + f.beta * density(*f.contaminant, x);
          },
          [&](const BrownianFamily&) -> double {
            throw Error(ErrorKind::NoDensity, "Brownian path has no density formula here");
          },
      },
      spec.family());
}

}  // namespace sqq
