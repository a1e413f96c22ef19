#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "spatialqq/distributions.hpp"
#include "spatialqq/spatial.hpp"

namespace sqq {

/// Population spatial quantile Q_F(u) of a model distribution.
///
/// ClosedRadial (spherical families only): Q(u) = center + r(|u|) u / |u|,
/// where r solves E[(r - x_1) / |r e_1 - x|] = |u|. The expectation is a
/// Monte Carlo average over a fixed antithetic sample of 1e5 draws; roots are
/// tabulated on 512 equally spaced radii in [0, 0.99] and interpolated
/// linearly. Tables are shared across instances with the same spec.
///
/// LargeSampleEmpirical: empirical spatial quantile of one large sample drawn
/// at construction, memoized per index.
class ModelQuantileFunction {
 public:
  enum class Method { ClosedRadial, LargeSampleEmpirical };

  static constexpr Index kRadialDraws = 100000;
  static constexpr Index kRadialGrid = 512;
  static constexpr double kMaxIndexNorm = 0.99;

  /// Throws NotSpherical for ClosedRadial on a non-spherical spec.
  explicit ModelQuantileFunction(DistributionSpec spec, Method method = Method::ClosedRadial,
                                 Index draws = 100000, std::uint64_t seed = 0x5eed);

  /// Picks ClosedRadial for spherical specs, LargeSampleEmpirical otherwise.
  static ModelQuantileFunction automatic(const DistributionSpec& spec);

  Vector operator()(const QuantileIndex& u) const;
  Vector operator()(const Vector& u) const;

  /// Standardized radial profile r(s) for s in [0, 0.99] (ClosedRadial only).
  double radius(double s) const;

  const DistributionSpec& spec() const noexcept { return spec_; }
  Method method() const noexcept { return method_; }

 private:
  struct EmpiricalState {
    std::unique_ptr<QuantileSolver> solver;
    std::mutex mutex;
    std::map<std::vector<double>, Vector> cache;
  };

  DistributionSpec spec_;
  Method method_;
  Vector center_;
  std::shared_ptr<const std::vector<double>> radial_;
  std::shared_ptr<EmpiricalState> empirical_;
};

}  // namespace sqq
