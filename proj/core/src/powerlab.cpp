#include "spatialqq/powerlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <memory>
#include <optional>
#include <ostream>

#include "spatialqq/csv.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/svg.hpp"

namespace sqq {

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::SpatialQQ: return "spatial";
    case TestKind::KS: return "ks";
    case TestKind::CVM: return "cvm";
    case TestKind::MSTRun: return "mst";
  }
  return "unknown";
}

TestKind parse_test_kind(std::string_view text) {
  std::string t(text);
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "spatial" || t == "spatialqq") return TestKind::SpatialQQ;
  if (t == "ks") return TestKind::KS;
  if (t == "cvm") return TestKind::CVM;
  if (t == "mst" || t == "mstrun" || t == "mst-run") return TestKind::MSTRun;
  throw Error(ErrorKind::BadSpec, "unknown test '" + std::string(text) + "'");
}

void ScenarioSpec::validate() const {
  if (reps < 1) throw Error(ErrorKind::BadSpec, "reps must be at least 1");
  if (tests.empty()) throw Error(ErrorKind::BadSpec, "a scenario needs at least one test");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::BadSpec, "alpha must lie in (0, 1)");
  if (first.dim() != second.dim()) throw Error(ErrorKind::BadSpec, "scenario laws differ in dimension");
  if (n < 1 || (problem == Problem::TwoSample && m < 1)) throw Error(ErrorKind::BadSpec, "sample sizes must be positive");
  if (problem == Problem::OneSample) {
    for (auto t : tests) {
      if (t == TestKind::MSTRun) throw Error(ErrorKind::BadSpec, "the MST-run test is two-sample only");
    }
  }
}

const PowerEstimate& PowerPoint::at(TestKind kind) const {
  for (const auto& e : estimates) {
    if (e.test == kind) return e;
  }
  throw Error(ErrorKind::InvalidArgument, "no estimate for test " + to_string(kind));
}

std::uint64_t hash_data(const DataMatrix& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t bytes) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const Index dims[2] = {x.rows(), x.cols()};
  mix(dims, sizeof dims);
  mix(x.values().data(), static_cast<std::size_t>(x.values().size()) * sizeof(double));
  return h;
}

PowerPoint empirical_level_power(const ScenarioSpec& spec) {
  spec.validate();
  const bool one = spec.problem == ScenarioSpec::Problem::OneSample;
  const auto has = [&](TestKind k) { return std::find(spec.tests.begin(), spec.tests.end(), k) != spec.tests.end(); };

  GofConfig gof = spec.gof;
  gof.seed = mix64(spec.seed ^ 0x60f);
  BaselineConfig base = spec.baseline;
  base.seed = mix64(spec.seed ^ 0xba5e);

  // Data-independent pieces are prepared once for the whole campaign.
  std::unique_ptr<OneSampleTest> spatial_one;
  std::unique_ptr<BaselineOneSample> baseline_one;
  if (one && has(TestKind::SpatialQQ)) spatial_one = std::make_unique<OneSampleTest>(spec.first, gof);
  if (one && (has(TestKind::KS) || has(TestKind::CVM))) {
    baseline_one = std::make_unique<BaselineOneSample>(spec.first, base);
  }

  PowerPoint point;
  point.parameter = spec.parameter;
  point.seed = spec.seed;
  std::vector<Index> rejections(spec.tests.size(), 0), decided(spec.tests.size(), 0), failed(spec.tests.size(), 0);
  const RngStream data_root(spec.seed, 0xda7a);
  const RngStream mst_root(spec.seed, 0x357);

  for (Index rep = 0; rep < spec.reps; ++rep) {
    RngStream data_rng = data_root.derive(static_cast<std::uint64_t>(rep));
    const DataMatrix x = sample(one ? spec.second : spec.first, spec.n, data_rng);
    std::optional<DataMatrix> y;
    if (!one) y = sample(spec.second, spec.m, data_rng);
    const std::uint64_t h = one ? hash_data(x) : (hash_data(x) ^ mix64(hash_data(*y)));
    point.data_hashes.push_back(h);

    for (std::size_t t = 0; t < spec.tests.size(); ++t) {
      const std::uint64_t seen = one ? hash_data(x) : (hash_data(x) ^ mix64(hash_data(*y)));
      if (seen != h) point.paired = false;
      try {
        TestReport r;
        switch (spec.tests[t]) {
          case TestKind::SpatialQQ:
            r = one ? spatial_one->run(x, spec.alpha) : test_two_sample(x, *y, spec.alpha, gof);
            break;
          case TestKind::KS:
            r = one ? baseline_one->ks(x, spec.alpha) : baseline_two_sample(BaselineKind::KS, x, *y, spec.alpha, base);
            break;
          case TestKind::CVM:
            r = one ? baseline_one->cvm(x, spec.alpha) : baseline_two_sample(BaselineKind::CVM, x, *y, spec.alpha, base);
            break;
          case TestKind::MSTRun: {
            RngStream mst_rng = mst_root.derive(static_cast<std::uint64_t>(rep));
            r = mst_run_test(x, *y, spec.alpha, spec.permutations, mst_rng);
            break;
          }
        }
        ++decided[t];
        rejections[t] += r.reject ? 1 : 0;
      } catch (const Error&) {
        ++failed[t];
      }
    }
  }

  for (std::size_t t = 0; t < spec.tests.size(); ++t) {
    PowerEstimate e;
    e.test = spec.tests[t];
    e.reps = decided[t];
    e.failures = failed[t];
    if (decided[t] > 0) {
      e.power = static_cast<double>(rejections[t]) / static_cast<double>(decided[t]);
      e.standard_error = std::sqrt(e.power * (1.0 - e.power) / static_cast<double>(decided[t]));
    }
    point.estimates.push_back(e);
  }
  return point;
}

void PowerCurve::write_csv(std::ostream& out, const std::vector<std::string>& comments) const {
  csv::Writer w(out);
  for (const auto& c : comments) w.comment(c);
  w.comment("parameter = " + parameter_name);
  w.row({"parameter", "test", "power", "stderr", "reps", "seed"});
  for (const auto& p : points) {
    for (const auto& e : p.estimates) {
      w.row({csv::format_number(p.parameter), to_string(e.test), csv::format_number(e.power),
             csv::format_number(e.standard_error), std::to_string(e.reps), std::to_string(p.seed)});
    }
  }
}

std::string PowerCurve::render_svg(const std::vector<std::string>& comments) const {
  static const char* palette[] = {"#1f5fa8", "#c0392b", "#27ae60", "#8e44ad"};
  svg::Panel panel;
  panel.title = "power";
  panel.x_label = parameter_name;
  panel.y_label = "rejection rate";
  std::vector<TestKind> kinds;
  for (const auto& p : points) {
    for (const auto& e : p.estimates) {
      if (std::find(kinds.begin(), kinds.end(), e.test) == kinds.end()) kinds.push_back(e.test);
    }
  }
  for (TestKind k : kinds) {
    svg::Series s;
    s.connect = true;
    s.label = to_string(k);
    s.color = palette[static_cast<int>(k) % 4];
    for (const auto& p : points) {
      for (const auto& e : p.estimates) {
        if (e.test != k) continue;
        s.x.push_back(p.parameter);
        s.y.push_back(e.power);
      }
    }
    panel.series.push_back(std::move(s));
  }
  return svg::render({panel}, comments, 1);
}

}  // namespace sqq
