#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spatialqq/numerics.hpp"

namespace sqq {

class DistributionSpec;

struct NormalFamily {
  Vector mean;
  Matrix covariance;
};

/// Density (Gamma(d/2) / (2 Gamma(d) pi^{d/2})) exp(-|x|).
struct LaplaceFamily {
  Index dim;
};

/// Multivariate t with one degree of freedom.
struct CauchyFamily {
  Index dim;
};

/// Azzalini--Dalla Valle skew-normal: z_j = delta_j |u0| + sqrt(1 - delta_j^2) u_j
/// with u ~ N(0, psi) independent of u0 ~ N(0, 1).
struct SkewNormalFamily {
  Vector delta;
  Matrix psi;
};

/// (1 - beta) base + beta contaminant.
struct MixtureFamily {
  double beta;
  std::shared_ptr<const DistributionSpec> base;
  std::shared_ptr<const DistributionSpec> contaminant;
};

/// Brownian motion observed on a grid: mean_level + sqrt(scale) W(t_k).
struct BrownianFamily {
  double mean_level;
  double scale;
  std::vector<double> grid;
};

/// Immutable description of a distribution family and its parameters.
/// Factories validate invariants and throw Error(BadSpec).
class DistributionSpec {
 public:
  using Family = std::variant<NormalFamily, LaplaceFamily, CauchyFamily, SkewNormalFamily,
                              MixtureFamily, BrownianFamily>;

  static DistributionSpec normal(Vector mean, Matrix covariance);
  static DistributionSpec standard_normal(Index d);
  static DistributionSpec laplace(Index d);
  static DistributionSpec cauchy(Index d);
  static DistributionSpec skew_normal(Vector delta, Matrix psi);
  static DistributionSpec mixture(double beta, DistributionSpec base, DistributionSpec contaminant);
  static DistributionSpec brownian(double mean_level, double scale, std::vector<double> grid);
  /// Grid t_k = k / points for k = 1..points.
  static DistributionSpec brownian_equispaced(Index points, double mean_level, double scale);

  /// Text form, e.g. "normal d=3", "mixture beta=0.2 base=(normal d=2) contaminant=(cauchy d=2)".
  static DistributionSpec parse(std::string_view text);
  std::string to_string() const;

  Index dim() const noexcept { return dim_; }
  const Family& family() const noexcept { return family_; }

  /// Spherically symmetric about center(): standard Laplace/Cauchy, normal with
  /// covariance proportional to I, and mixtures of those sharing a center.
  bool is_spherical() const;
  Vector center() const;

  /// Normal with diagonal covariance, d = 1 Laplace/Cauchy, and mixtures of these.
  bool has_closed_cdf() const;

 private:
  DistributionSpec(Family family, Index dim) : family_(std::move(family)), dim_(dim) {}

  Family family_;
  Index dim_;
};

DataMatrix sample(const DistributionSpec& spec, Index n, RngStream& rng);

/// Writes one draw into out (size dim()).
void draw_into(const DistributionSpec& spec, RngStream& rng, double* out);

struct ClosedCdf {};
struct MonteCarloCdf {
  Index draws = 100000;
  std::uint64_t seed = 0;
};
using CdfMethod = std::variant<ClosedCdf, MonteCarloCdf>;

/// P(x <= t coordinatewise). A MonteCarlo evaluator draws its sample once and
/// reuses it for every evaluation point.
class CdfEvaluator {
 public:
  CdfEvaluator(DistributionSpec spec, CdfMethod method);

  double operator()(const Vector& t) const;
  const DistributionSpec& spec() const noexcept { return spec_; }

 private:
  DistributionSpec spec_;
  bool closed_;
  std::shared_ptr<const RowMatrix> draws_;
};

double cdf(const DistributionSpec& spec, const Vector& t, const CdfMethod& method);

double density(const DistributionSpec& spec, const Vector& x);

}  // namespace sqq
