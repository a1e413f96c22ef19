#include <algorithm>
#include <cmath>
#include <limits>

#include "spatialqq/baselines.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"

namespace sqq {

namespace {

// C(n, k), saturating at limit + 1.
double capped_binomial(Index n, Index k, double limit) {
  k = std::min(k, n - k);
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (c > limit) return limit + 1.0;
  }
  return std::round(c);
}

}  // namespace

double MstGraph::total_length() const {
  double sum = 0.0;
  for (const auto& e : edges) sum += e.length;
  return sum;
}

Index MstGraph::cross_edges(const std::vector<int>& labels) const {
  Index count = 0;
  for (const auto& e : edges) {
    count += labels[static_cast<std::size_t>(e.a)] != labels[static_cast<std::size_t>(e.b)] ? 1 : 0;
  }
  return count;
}

MstGraph euclidean_mst(const DataMatrix& points) {
  const Index n = points.rows();
  MstGraph g;
  if (n < 2) return g;
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<Index> parent(static_cast<std::size_t>(n), -1);
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  Index current = 0;
  in_tree[0] = 1;
  g.edges.reserve(static_cast<std::size_t>(n - 1));
  for (Index step = 1; step < n; ++step) {
    Index next = -1;
    double next_len = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (in_tree[sj]) continue;
      const double len = (points.row(j) - points.row(current)).norm();
      if (len < best[sj]) {
        best[sj] = len;
        parent[sj] = current;
      }
      if (best[sj] < next_len) {
        next_len = best[sj];
        next = j;
      }
    }
    in_tree[static_cast<std::size_t>(next)] = 1;
    g.edges.push_back({parent[static_cast<std::size_t>(next)], next, next_len});
    current = next;
  }
  return g;
}

TestReport mst_run_test(const DataMatrix& x, const DataMatrix& y, double alpha, Index permutations,
                        RngStream& rng) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const Index n = x.rows(), total = n + y.rows();
  if (total < 4) throw Error(ErrorKind::InvalidArgument, "MST-run test needs at least four points");
  if (permutations < 1) throw Error(ErrorKind::InvalidArgument, "need at least one permutation");
  const DataMatrix z = pool(x, y);
  bool distinct = false;
  for (Index i = 1; i < total && !distinct; ++i) distinct = z.row(i) != z.row(0);
  if (!distinct) throw Error(ErrorKind::DegeneratePooledSample, "all pooled points coincide");

  const MstGraph g = euclidean_mst(z);
  std::vector<int> labels(static_cast<std::size_t>(total), 1);
  std::fill(labels.begin(), labels.begin() + n, 0);
  const double observed = static_cast<double>(g.cross_edges(labels));

  std::vector<double> reps;
  NullScheme scheme;
  const double combos = capped_binomial(total, n, static_cast<double>(permutations));
  if (combos <= static_cast<double>(permutations)) {
    scheme = NullScheme::Enumeration;
    std::vector<int> mask = labels;  // lexicographically smallest: zeros first
    do {
      reps.push_back(static_cast<double>(g.cross_edges(mask)));
    } while (std::next_permutation(mask.begin(), mask.end()));
  } else {
    scheme = NullScheme::Permutation;
    reps.resize(static_cast<std::size_t>(permutations));
    parallel_for(reps.size(), [&](std::size_t p) {
      RngStream s = rng.derive(p);
      std::vector<int> perm = labels;
      for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[s.below(i + 1)]);
      reps[p] = static_cast<double>(g.cross_edges(perm));
    });
  }
  const NullDistribution null(std::move(reps), scheme);
  TestReport r = make_report("mst-run", observed, null, alpha, true);
  r.seed = rng.master_seed();
  r.add("n", static_cast<double>(n));
  r.add("m", static_cast<double>(y.rows()));
  r.add("tree_length", g.total_length());
  return r;
}

}  // namespace sqq
