#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <random>
#include <sstream>

#include "cli/cli.hpp"
#include "spatialqq/csv.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"

namespace sqq::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
  std::vector<std::string> inputs;
  std::string model;
  std::string spec;
  std::string output;
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  Index grid = 1000;
  Index null_reps = 1000;
  Index n = 100;
  Index permutations = 999;
  unsigned threads = 0;
  bool no_standardize = false;
  bool standardize = false;
  bool fail_on_reject = false;
  bool header = false;
  bool no_header = false;
  std::string pairing = "all";
  std::string scheme = "eigen";
};

struct Context {
  std::string command;
  Options opt;
  std::uint64_t seed = 0;
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> comments;
};

std::optional<bool> header_choice(const Options& o) {
  if (o.header) return true;
  if (o.no_header) return false;
  return std::nullopt;
}

DataMatrix input(const Context& c, std::size_t k) { return ingest_csv(c.opt.inputs.at(k), header_choice(c.opt)); }

std::string vector_text(const Vector& v) {
  std::string s = "[";
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + csv::format_number(v(i));
  return s + "]";
}

std::string matrix_text(const Matrix& m) {
  std::string s = "[";
  for (Index i = 0; i < m.rows(); ++i) s += (i ? ", " : "") + vector_text(m.row(i).transpose());
  return s + "]";
}

void log_standardization(Context& c, const std::string& what, const StandardizationTransform& t) {
  const std::string line = "standardized " + what + " by MLE: mean = " + vector_text(t.mean) +
                           ", dispersion = " + matrix_text(t.dispersion);
  c.err << line << '\n';
  c.comments.push_back(line);
}

GofConfig gof_config(const Context& c) {
  GofConfig g;
  g.grid_size = c.opt.grid;
  g.null_replicates = c.opt.null_reps;
  g.seed = c.seed;
  if (c.opt.scheme == "eigen") {
    g.scheme = NullScheme::EigenWeightedChiSquare;
  } else if (c.opt.scheme == "cholesky") {
    g.scheme = NullScheme::CholeskyProcess;
  } else {
    throw Error(ErrorKind::InvalidArgument, "cli: --scheme must be eigen or cholesky");
  }
  return g;
}

BaselineConfig baseline_config(const Context& c) {
  BaselineConfig b;
  b.null_replicates = c.opt.null_reps;
  b.seed = c.seed;
  return b;
}

DistributionSpec model_spec(const Context& c) {
  if (c.opt.model.empty()) throw Error(ErrorKind::InvalidArgument, "cli: --model is required");
  return DistributionSpec::parse(c.opt.model);
}

bool is_normal(const DistributionSpec& s) { return std::holds_alternative<NormalFamily>(s.family()); }

Json parse_report(const TestReport& r) { return Json::parse(r.to_json()); }

std::string relation(const LineFit& f, double spread) {
  if (f.r_squared <= 0.99) return "none";
  const bool unit = std::abs(f.slope - 1.0) <= 0.05;
  const bool origin = std::abs(f.intercept) <= 0.1 * spread;
  if (unit && origin) return "identity";
  if (unit) return "location";
  if (origin) return "scale";
  return "location-scale";
}

Json line_fits(const QQPlot& plot) {
  Json fits = Json::array();
  for (const auto& set : plot.sets) {
    Json f;
    f["coordinate"] = set.coordinate;
    f["label"] = set.label;
    try {
      const LineFit fit = fit_reference_line(set);
      double lo = set.points.front().abscissa, hi = lo;
      for (const auto& p : set.points) {
        lo = std::min(lo, p.abscissa);
        hi = std::max(hi, p.abscissa);
      }
      f["slope"] = fit.slope;
      f["intercept"] = fit.intercept;
      f["r_squared"] = fit.r_squared;
      f["relation"] = relation(fit, hi - lo);
    } catch (const Error& e) {
      f["error"] = e.what();
    }
    fits.push_back(std::move(f));
  }
  return fits;
}

std::string prefix(const Context& c) { return c.opt.output.empty() ? c.command : c.opt.output; }

template <class Plot>
Json emit_both(const Context& c, const Plot& plot) {
  const std::string p = prefix(c);
  emit(plot, PlotFormat::Csv, p + ".csv", c.comments);
  emit(plot, PlotFormat::Svg, p + ".svg", c.comments);
  Json files = Json::array();
  files.push_back(p + ".csv");
  files.push_back(p + ".svg");
  return files;
}

bool finish(Context& c, Json doc, bool rejected) {
  c.out << doc.dump(2) << '\n';
  return rejected;
}

bool cmd_test_one(Context& c, bool plot) {
  DataMatrix x = input(c, 0);
  DistributionSpec f0 = model_spec(c);
  GofConfig g = gof_config(c);
  const bool standardize = !c.opt.no_standardize && (c.opt.standardize || is_normal(f0));
  DataMatrix shown = x;
  if (standardize) {
    const auto t = fit_standardization(x);
    log_standardization(c, "sample", t);
    shown = apply_standardization(x, t);
    if (is_normal(f0)) f0 = DistributionSpec::standard_normal(f0.dim());
    g.standardize = true;
  }
  c.comments.push_back("model: " + f0.to_string());
  const TestReport r = OneSampleTest(f0, g).run(x, c.opt.alpha);
  Json doc;
  if (plot) {
    const QQPlot qq = one_sample_points(shown, ModelQuantileFunction::automatic(f0), g.solver);
    Json p;
    p["files"] = emit_both(c, qq);
    p["clamped_count"] = qq.clamped_count;
    p["converged_fraction"] = qq.converged_fraction;
    p["reference_fits"] = line_fits(qq);
    doc["plot"] = std::move(p);
  }
  doc["report"] = parse_report(r);
  return finish(c, std::move(doc), r.reject);
}

std::pair<DataMatrix, DataMatrix> two_inputs(Context& c) {
  DataMatrix x = input(c, 0), y = input(c, 1);
  if (c.opt.standardize && !c.opt.no_standardize) {
    const auto t = fit_standardization(pool(x, y));
    log_standardization(c, "pooled samples", t);
    x = apply_standardization(x, t);
    y = apply_standardization(y, t);
  }
  return {std::move(x), std::move(y)};
}

bool cmd_test_two(Context& c, int plot) {
  auto [x, y] = two_inputs(c);
  const GofConfig g = gof_config(c);
  const TestReport r = test_two_sample(x, y, c.opt.alpha, g);
  Json doc;
  if (plot == 1) {
    TwoSamplePairing pairing = TwoSamplePairing::AllRanks;
    if (c.opt.pairing == "first") {
      pairing = TwoSamplePairing::FirstSampleRanks;
    } else if (c.opt.pairing != "all") {
      throw Error(ErrorKind::InvalidArgument, "cli: --pairing must be all or first");
    }
    c.comments.push_back("pairing: " + c.opt.pairing);
    const QQPlot qq = two_sample_points(x, y, g.solver, pairing);
    Json p;
    p["files"] = emit_both(c, qq);
    p["clamped_count"] = qq.clamped_count;
    p["converged_fraction"] = qq.converged_fraction;
    p["reference_fits"] = line_fits(qq);
    doc["plot"] = std::move(p);
  } else if (plot == 2) {
    const DifferencePlot diff = difference_plot(x, y, g.solver);
    Json p;
    p["files"] = emit_both(c, diff);
    p["clamped_count"] = diff.clamped_count;
    p["converged_fraction"] = diff.converged_fraction;
    doc["plot"] = std::move(p);
  }
  doc["report"] = parse_report(r);
  return finish(c, std::move(doc), r.reject);
}

bool cmd_baseline(Context& c) {
  Json reports = Json::array();
  bool rejected = false;
  auto keep = [&](const TestReport& r) {
    rejected = rejected || r.reject;
    reports.push_back(parse_report(r));
  };
  const BaselineConfig b = baseline_config(c);
  if (c.opt.inputs.size() == 1) {
    const DataMatrix x = input(c, 0);
    const BaselineOneSample tests(model_spec(c), b);
    keep(tests.ks(x, c.opt.alpha));
    keep(tests.cvm(x, c.opt.alpha));
  } else {
    auto [x, y] = two_inputs(c);
    keep(baseline_two_sample(BaselineKind::KS, x, y, c.opt.alpha, b));
    keep(baseline_two_sample(BaselineKind::CVM, x, y, c.opt.alpha, b));
    RngStream rng(c.seed, 0x357);
    keep(mst_run_test(x, y, c.opt.alpha, c.opt.permutations, rng));
  }
  Json doc;
  doc["reports"] = std::move(reports);
  return finish(c, std::move(doc), rejected);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cli: cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorKind::IoError, "cli: cannot write " + path);
}

std::string block_name(const Block& b, std::size_t index) {
  if (auto n = b.get("name")) return *n;
  return b.kind + "-" + std::to_string(index + 1);
}

void write_curve(const Context& c, const PowerCurve& curve, const std::string& name,
                 const std::vector<std::string>& extra, Json& files) {
  std::vector<std::string> comments = c.comments;
  comments.insert(comments.end(), extra.begin(), extra.end());
  const std::string base = prefix(c) + "-" + name;
  std::ostringstream csv_text;
  curve.write_csv(csv_text, comments);
  write_text(base + ".csv", csv_text.str());
  write_text(base + ".svg", curve.render_svg(comments));
  files.push_back(base + ".csv");
  files.push_back(base + ".svg");
}

Json estimate_json(const PowerEstimate& e) {
  Json j;
  j["test"] = to_string(e.test);
  j["power"] = e.power;
  j["stderr"] = e.standard_error;
  j["reps"] = e.reps;
  j["failures"] = e.failures;
  return j;
}

bool cmd_power(Context& c) {
  const auto blocks = parse_blocks(read_file(c.opt.inputs.at(0)));
  Json results = Json::array();
  Json files = Json::array();
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const Block& b = blocks[bi];
    if (b.kind != "scenario") continue;
    auto specs = scenarios_from(b);
    PowerCurve curve;
    curve.parameter_name = b.get("parameter_name").value_or("parameter");
    Json points = Json::array();
    for (auto& spec : specs) {
      if (!b.get("seed")) spec.seed = c.seed;
      const PowerPoint pt = empirical_level_power(spec);
      Json p;
      p["parameter"] = pt.parameter;
      p["seed"] = pt.seed;
      p["paired"] = pt.paired;
      Json est = Json::array();
      for (const auto& e : pt.estimates) est.push_back(estimate_json(e));
      p["estimates"] = std::move(est);
      points.push_back(std::move(p));
      curve.points.push_back(pt);
    }
    const std::string name = block_name(b, bi);
    write_curve(c, curve, name, {"scenario: " + name}, files);
    Json r;
    r["name"] = name;
    r["parameter_name"] = curve.parameter_name;
    r["points"] = std::move(points);
    results.push_back(std::move(r));
  }
  if (results.empty()) throw Error(ErrorKind::BadSpec, "cli: no [scenario] blocks in " + c.opt.inputs.at(0));
  Json doc;
  doc["files"] = std::move(files);
  doc["scenarios"] = std::move(results);
  return finish(c, std::move(doc), false);
}

ContiguousCurve contiguous_curve(const ContiguousJob& job, TestKind kind) {
  switch (kind) {
    case TestKind::SpatialQQ: return contiguous_power_spatial(job.spec, job.alpha);
    case TestKind::KS: return contiguous_power_baseline(job.spec, BaselineKind::KS, job.alpha);
    case TestKind::CVM: return contiguous_power_baseline(job.spec, BaselineKind::CVM, job.alpha);
    case TestKind::MSTRun: break;
  }
  throw Error(ErrorKind::BadSpec, "cli: no contiguous simulator for " + to_string(kind));
}

Json efficacy_json(const ContiguousCurve& first, const ContiguousCurve& other, const std::vector<double>& targets) {
  Json rows = Json::array();
  for (double t : targets) {
    Json row;
    row["target"] = t;
    try {
      const auto e = pitman_efficacy(first, other, {t}).front();
      row["gamma"] = e.gamma;
      row["gamma_other"] = e.gamma_other;
      row["efficacy"] = e.efficacy;
      row["at_limit"] = e.at_limit;
    } catch (const Error& e) {
      row["error"] = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool cmd_efficacy(Context& c) {
  const auto blocks = parse_blocks(read_file(c.opt.inputs.at(0)));
  Json results = Json::array();
  Json files = Json::array();
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const Block& b = blocks[bi];
    if (b.kind != "contiguous") continue;
    ContiguousJob job = contiguous_from(b);
    if (!b.get("seed")) job.spec.seed = c.seed;
    std::vector<ContiguousCurve> curves;
    for (auto kind : job.tests) curves.push_back(contiguous_curve(job, kind));

    PowerCurve curve;
    curve.parameter_name = "gamma";
    Json curve_json = Json::array();
    for (std::size_t g = 0; g < job.spec.gammas.size(); ++g) {
      PowerPoint pt;
      pt.parameter = job.spec.gammas[g];
      pt.seed = job.spec.seed;
      for (std::size_t k = 0; k < curves.size(); ++k) {
        PowerEstimate e;
        e.test = job.tests[k];
        e.power = curves[k].power[g];
        e.standard_error = curves[k].stderr_at(g);
        e.reps = curves[k].replicates;
        pt.estimates.push_back(e);
      }
      curve.points.push_back(std::move(pt));
    }
    for (const auto& cc : curves) {
      Json j;
      j["test"] = cc.test;
      j["critical_value"] = cc.critical_value;
      j["replicates"] = cc.replicates;
      j["mean_stderr"] = cc.mean_stderr;
      j["gammas"] = cc.gammas;
      j["power"] = cc.power;
      curve_json.push_back(std::move(j));
    }
    Json eff = Json::array();
    for (std::size_t k = 0; k < curves.size(); ++k) {
      Json e;
      e["first"] = curves.front().test;
      e["other"] = curves[k].test;
      e["points"] = efficacy_json(curves.front(), curves[k], job.targets);
      eff.push_back(std::move(e));
    }
    const std::string name = job.name.empty() ? block_name(b, bi) : job.name;
    write_curve(c, curve, name,
                {"contiguous: " + name, "base: " + job.spec.base.to_string(),
                 "contaminant: " + job.spec.contaminant.to_string(),
                 std::string("problem: ") + (job.spec.two_sample ? "two-sample" : "one-sample")},
                files);
    Json r;
    r["name"] = name;
    r["alpha"] = job.alpha;
    r["curves"] = std::move(curve_json);
    r["efficacy"] = std::move(eff);
    results.push_back(std::move(r));
  }
  if (results.empty()) throw Error(ErrorKind::BadSpec, "cli: no [contiguous] blocks in " + c.opt.inputs.at(0));
  Json doc;
  doc["files"] = std::move(files);
  doc["jobs"] = std::move(results);
  return finish(c, std::move(doc), false);
}

bool cmd_simulate(Context& c) {
  if (c.opt.spec.empty()) throw Error(ErrorKind::InvalidArgument, "cli: --spec is required");
  const DistributionSpec spec = DistributionSpec::parse(c.opt.spec);
  RngStream rng(c.seed, 0x51a);
  const DataMatrix x = sample(spec, c.opt.n, rng);
  std::vector<std::string> comments = c.comments;
  comments.push_back("spec: " + spec.to_string());
  comments.push_back("n: " + std::to_string(c.opt.n));
  if (c.opt.output.empty() || c.opt.output == "-") {
    write_matrix(x, c.out, comments);
    return false;
  }
  std::ostringstream text;
  write_matrix(x, text, comments);
  write_text(c.opt.output, text.str());
  return false;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Master seed; a random one is drawn and recorded when omitted");
  sub->add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)");
}

void add_test_flags(CLI::App* sub, Options& o) {
  sub->add_option("--alpha", o.alpha, "Significance level")->capture_default_str();
  sub->add_option("--grid", o.grid, "Quantile index grid size M")->capture_default_str();
  sub->add_option("--null-reps", o.null_reps, "Null replicates R")->capture_default_str();
  sub->add_flag("--fail-on-reject", o.fail_on_reject, "Exit with status 2 when a test rejects");
  sub->add_flag("--header", o.header, "First CSV row is a header");
  sub->add_flag("--no-header", o.no_header, "First CSV row is data");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Spatial-quantile Q-Q plots and goodness-of-fit tests for multivariate data"};
  app.require_subcommand(1);
  app.footer(std::string("\n") + kScenarioHelp);

  auto* qq_one = app.add_subcommand("qq-one", "Q-Q plot of a sample against a model, plus the one-sample test");
  auto* qq_two = app.add_subcommand("qq-two", "Q-Q plot of two samples, plus the two-sample test");
  auto* qq_diff = app.add_subcommand("qq-diff", "Quantile-difference plot of two samples, plus the two-sample test");
  auto* test_one = app.add_subcommand("test-one", "One-sample spatial-quantile test");
  auto* test_two = app.add_subcommand("test-two", "Two-sample spatial-quantile test");
  auto* baseline = app.add_subcommand("baseline", "KS and CVM against a model, or KS, CVM and MST-run for two samples");
  auto* power = app.add_subcommand("power", "Run [scenario] blocks of a scenario file");
  auto* efficacy = app.add_subcommand("efficacy", "Run [contiguous] blocks of a scenario file");
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic sample as CSV");

  for (auto* sub : {qq_one, test_one}) {
    sub->add_option("data", o.inputs, "Sample CSV")->required()->expected(1);
    sub->add_option("--model", o.model, "Model, e.g. \"normal d=3\"")->required();
  }
  for (auto* sub : {qq_two, qq_diff, test_two}) {
    sub->add_option("data", o.inputs, "Two sample CSVs")->required()->expected(2);
  }
  baseline->add_option("data", o.inputs, "One sample CSV (with --model) or two")->required()->expected(1, 2);
  baseline->add_option("--model", o.model, "Model for the one-sample baselines");
  baseline->add_option("--permutations", o.permutations, "MST-run relabellings")->capture_default_str();
  for (auto* sub : {qq_one, qq_two, qq_diff, test_one, test_two, baseline}) {
    add_common(sub, o);
    add_test_flags(sub, o);
    sub->add_flag("--no-standardize", o.no_standardize, "Never standardize the data");
    sub->add_flag("--standardize", o.standardize, "Standardize by MLE mean and dispersion");
  }
  for (auto* sub : {qq_one, qq_two, qq_diff, test_one, test_two}) {
    sub->add_option("--scheme", o.scheme, "Null scheme: eigen or cholesky")->capture_default_str();
  }
  for (auto* sub : {qq_one, qq_two, qq_diff}) {
    sub->add_option("-o,--output", o.output, "Output prefix for PREFIX.csv and PREFIX.svg");
  }
  qq_two->add_option("--pairing", o.pairing, "Matched indices: all (n + m ranks) or first (x's ranks, n = m)")
      ->capture_default_str();
  for (auto* sub : {power, efficacy}) {
    sub->add_option("scenarios", o.inputs, "Scenario file")->required()->expected(1);
    sub->add_option("-o,--output", o.output, "Output prefix; each block writes PREFIX-NAME.csv/.svg");
    add_common(sub, o);
  }
  simulate->add_option("--spec", o.spec, "Distribution, e.g. \"normal d=3\"")->required();
  simulate->add_option("--n", o.n, "Sample size")->capture_default_str();
  simulate->add_option("-o,--output", o.output, "Output CSV, '-' for standard output");
  add_common(simulate, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* active = app.get_subcommands().front();
  Context c{active->get_name(), o, 0, out, err, {}};
  if (o.seed) {
    c.seed = *o.seed;
  } else {
    std::random_device rd;
    c.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    err << "seed: " << c.seed << " (generated; pass --seed " << c.seed << " to replay)\n";
  }
  c.comments.push_back("spatialqq " + c.command);
  for (const auto& path : o.inputs) c.comments.push_back("input: " + path);
  c.comments.push_back("seed: " + std::to_string(c.seed));
  if (active != simulate && active != power && active != efficacy) {
    c.comments.push_back("alpha: " + csv::format_number(o.alpha));
    c.comments.push_back("grid: " + std::to_string(o.grid));
    c.comments.push_back("null_reps: " + std::to_string(o.null_reps));
  }

  try {
    if (o.header && o.no_header) throw Error(ErrorKind::InvalidArgument, "cli: --header and --no-header conflict");
    if (o.threads > 0) set_thread_count(o.threads);
    bool rejected = false;
    if (active == qq_one) rejected = cmd_test_one(c, true);
    else if (active == test_one) rejected = cmd_test_one(c, false);
    else if (active == qq_two) rejected = cmd_test_two(c, 1);
    else if (active == qq_diff) rejected = cmd_test_two(c, 2);
    else if (active == test_two) rejected = cmd_test_two(c, 0);
    else if (active == baseline) rejected = cmd_baseline(c);
    else if (active == power) rejected = cmd_power(c);
    else if (active == efficacy) rejected = cmd_efficacy(c);
    else rejected = cmd_simulate(c);
    out.flush();
    return rejected && o.fail_on_reject ? 2 : 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sqq::cli
