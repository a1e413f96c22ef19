#include "spatialqq/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "spatialqq/error.hpp"

namespace sqq {

std::string to_string(NullScheme scheme) {
  switch (scheme) {
    case NullScheme::EigenWeightedChiSquare: return "eigen-weighted-chi-square";
    case NullScheme::CholeskyProcess: return "cholesky-process";
    case NullScheme::GaussianProcess: return "gaussian-process";
    case NullScheme::Permutation: return "permutation";
    case NullScheme::Enumeration: return "enumeration";
  }
  return "unknown";
}

NullDistribution::NullDistribution(std::vector<double> replicates, NullScheme scheme)
    : sorted_(std::move(replicates)), scheme_(scheme) {
  if (sorted_.empty()) throw Error(ErrorKind::InvalidArgument, "null distribution needs replicates");
  for (double r : sorted_) {
    if (!std::isfinite(r)) throw Error(ErrorKind::InvalidArgument, "null replicate is not finite");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double NullDistribution::p_value(double statistic) const {
  const auto at_least = sorted_.end() - std::lower_bound(sorted_.begin(), sorted_.end(), statistic);
  return (offset() + static_cast<double>(at_least)) / (static_cast<double>(sorted_.size()) + offset());
}

double NullDistribution::lower_p_value(double statistic) const {
  const auto at_most = std::upper_bound(sorted_.begin(), sorted_.end(), statistic) - sorted_.begin();
  return (offset() + static_cast<double>(at_most)) / (static_cast<double>(sorted_.size()) + offset());
}

Index NullDistribution::tail_allowance(double alpha) const {
  const double total = static_cast<double>(sorted_.size()) + offset();
  Index k = static_cast<Index>(std::floor(alpha * total - offset())) + 1;
  k = std::min<Index>(k, size());
  while (k >= 0 && !((offset() + static_cast<double>(k)) / total < alpha)) --k;
  return k;
}

// With K the allowance, p < alpha holds exactly when at most K replicates lie
// at or beyond the statistic.
double NullDistribution::critical_value(double alpha) const {
  const Index k = tail_allowance(alpha);
  if (k < 0) return std::numeric_limits<double>::infinity();
  if (k >= size()) return -std::numeric_limits<double>::infinity();
  return sorted_[static_cast<std::size_t>(size() - 1 - k)];
}

double NullDistribution::lower_critical_value(double alpha) const {
  const Index k = tail_allowance(alpha);
  if (k < 0) return -std::numeric_limits<double>::infinity();
  if (k >= size()) return std::numeric_limits<double>::infinity();
  return sorted_[static_cast<std::size_t>(k)];
}

double TestReport::diagnostic(const std::string& key, double fallback) const {
  for (const auto& [k, v] : diagnostics) {
    if (k == key) return v;
  }
  return fallback;
}

std::string TestReport::to_json() const {
  nlohmann::ordered_json j;
  j["test"] = test;
  j["statistic"] = statistic;
  j["critical_value"] = std::isfinite(critical_value) ? nlohmann::ordered_json(critical_value)
                                                      : nlohmann::ordered_json(critical_value > 0 ? "inf" : "-inf");
  j["p_value"] = p_value;
  j["alpha"] = alpha;
  j["reject"] = reject;
  j["tail"] = lower_tail ? "lower" : "upper";
  j["grid_size"] = grid_size;
  j["null_replicates"] = null_replicates;
  j["null_scheme"] = null_scheme;
  j["seed"] = seed;
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr;
  for (const auto& [k, v] : notes) diag[k] = v;
  j["diagnostics"] = diag;
  return j.dump(2);
}

TestReport make_report(std::string test, double statistic, const NullDistribution& null, double alpha,
                       bool lower_tail) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  TestReport r;
  r.test = std::move(test);
  r.statistic = statistic;
  r.alpha = alpha;
  r.lower_tail = lower_tail;
  r.null_replicates = null.size();
  r.null_scheme = to_string(null.scheme());
  if (lower_tail) {
    r.critical_value = null.lower_critical_value(alpha);
    r.p_value = null.lower_p_value(statistic);
    r.reject = statistic < r.critical_value;
  } else {
    r.critical_value = null.critical_value(alpha);
    r.p_value = null.p_value(statistic);
    r.reject = statistic > r.critical_value;
  }
  return r;
}

}  // namespace sqq
