#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spatialqq/numerics.hpp"

namespace sqq {

enum class NullScheme {
  EigenWeightedChiSquare,
  CholeskyProcess,
  GaussianProcess,  // KS/CVM limit process on a t-grid
  Permutation,
  Enumeration,  // every relabelling, observed one included
};

std::string to_string(NullScheme scheme);

/// Simulated (or enumerated) null law of a test statistic.
///
/// Monte Carlo schemes use p = (1 + #{r >= s}) / (R + 1). Enumeration already
/// contains the observed configuration, so there p = #{r >= s} / R. The
/// critical value is derived from the same counts, which makes
/// `s > c(alpha)` and `p < alpha` the same decision.
class NullDistribution {
 public:
  NullDistribution() = default;
  NullDistribution(std::vector<double> replicates, NullScheme scheme);

  const std::vector<double>& sorted() const noexcept { return sorted_; }
  Index size() const noexcept { return static_cast<Index>(sorted_.size()); }
  NullScheme scheme() const noexcept { return scheme_; }

  double p_value(double statistic) const;
  double critical_value(double alpha) const;

  /// Small statistics are evidence against the null.
  double lower_p_value(double statistic) const;
  double lower_critical_value(double alpha) const;

 private:
  // Largest K with (offset + K) / (R + offset) < alpha, or -1.
  Index tail_allowance(double alpha) const;
  double offset() const noexcept { return scheme_ == NullScheme::Enumeration ? 0.0 : 1.0; }

  std::vector<double> sorted_;
  NullScheme scheme_ = NullScheme::EigenWeightedChiSquare;
};

struct TestReport {
  std::string test;
  double statistic = 0.0;
  double critical_value = 0.0;
  double alpha = 0.05;
  double p_value = 1.0;
  bool reject = false;
  bool lower_tail = false;
  Index grid_size = 0;
  Index null_replicates = 0;
  std::uint64_t seed = 0;
  std::string null_scheme;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::pair<std::string, std::string>> notes;

  void add(std::string key, double value) { diagnostics.emplace_back(std::move(key), value); }
  void note(std::string key, std::string value) { notes.emplace_back(std::move(key), std::move(value)); }
  double diagnostic(const std::string& key, double fallback = 0.0) const;

  /// Flat JSON object; diagnostics and notes keep insertion order.
  std::string to_json() const;
};

/// Fills statistic, alpha, critical value, p-value and the decision from a
/// null law; throws InvalidArgument unless alpha lies in (0, 1).
TestReport make_report(std::string test, double statistic, const NullDistribution& null, double alpha,
                       bool lower_tail = false);

}  // namespace sqq
