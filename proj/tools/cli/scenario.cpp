#include <charconv>
#include <cmath>

#include "cli/cli.hpp"
#include "spatialqq/csv.hpp"
#include "spatialqq/error.hpp"

namespace sqq::cli {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

[[noreturn]] void bad(const Block& b, const std::string& what) {
  throw Error(ErrorKind::BadSpec, "[" + b.kind + "] block at line " + std::to_string(b.line) + ": " + what);
}

double number(const Block& b, const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!csv::parse_number(text, v)) bad(b, key + " = '" + text + "' is not a number");
  return v;
}

Index count(const Block& b, const std::string& key, const std::string& text) {
  const double v = number(b, key, text);
  if (v != std::floor(v) || v < 0 || v > 1e15) bad(b, key + " must be a nonnegative integer");
  return static_cast<Index>(v);
}

std::uint64_t seed_value(const Block& b, const std::string& text) {
  std::uint64_t v = 0;
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) bad(b, "seed = '" + text + "' is not an unsigned integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> number_list(const Block& b, const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos && text.find(',') == std::string::npos) {
    const auto first = text.find(':'), second = text.find(':', first + 1);
    if (second == std::string::npos) bad(b, key + " range must read lo:step:hi");
    const double lo = number(b, key, text.substr(0, first));
    const double step = number(b, key, text.substr(first + 1, second - first - 1));
    const double hi = number(b, key, text.substr(second + 1));
    if (!(step > 0.0) || hi < lo) bad(b, key + " range needs step > 0 and hi >= lo");
    const auto steps = static_cast<Index>(std::floor((hi - lo) / step + 1e-9));
    // Round to suppress accumulated binary noise in values like 0.30000000000000004.
    for (Index k = 0; k <= steps; ++k) out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
    return out;
  }
  for (const auto& piece : split_list(text)) out.push_back(number(b, key, piece));
  if (out.empty()) bad(b, key + " is empty");
  return out;
}

std::vector<TestKind> test_list(const Block& b, const std::string& text) {
  std::vector<TestKind> out;
  try {
    for (const auto& piece : split_list(text)) out.push_back(parse_test_kind(piece));
  } catch (const Error& e) {
    bad(b, e.what());
  }
  if (out.empty()) bad(b, "tests is empty");
  return out;
}

std::string substitute(std::string text, const std::string& value) {
  for (auto pos = text.find("{x}"); pos != std::string::npos; pos = text.find("{x}", pos + value.size())) {
    text.replace(pos, 3, value);
  }
  return text;
}

DistributionSpec spec_value(const Block& b, const std::string& key, const std::string& text) {
  try {
    return DistributionSpec::parse(text);
  } catch (const Error& e) {
    bad(b, key + ": " + e.what());
  }
}

bool two_sample_problem(const Block& b, const std::string& text) {
  if (text == "one-sample") return false;
  if (text == "two-sample") return true;
  bad(b, "problem must be one-sample or two-sample");
}

}  // namespace

const char* const kScenarioHelp = R"(Scenario files hold blocks of `key = value` lines; `#` starts a comment.

[scenario]                 finite-sample level/power (one block, possibly swept)
  name = cauchy-mixture
  problem = one-sample       one-sample | two-sample
  model = normal d=2         one-sample null model F0 (alias: first)
  truth = mixture beta={x} base=(normal d=2) contaminant=(cauchy d=2)
                             one-sample data law F (alias: second)
  first / second             two-sample laws F and G
  n = 10   m = 10   alpha = 0.05   reps = 200   seed = 1
  tests = spatial, ks, cvm, mst
  grid = 1000   null_reps = 1000   expectation_draws = 10000
  t_grid = 500   permutations = 999   standardize = false
  sweep = 0:0.1:1            or a list `0, 0.5, 1`; `{x}` is replaced in
                             every value and recorded as the parameter
  parameter_name = beta

[contiguous]               limiting power under contiguous contamination
  problem = one-sample
  base = normal d=2
  contaminant = cauchy d=2
  lambda = 0.5               two-sample only
  gamma_max = 6   gamma_step = 0.5     (or gammas = 0, 1, 2)
  grid = 300   expectation_draws = 10000   contaminant_draws = 10000
  t_grid = 500   replicates = 4000   seed = 1   alpha = 0.05
  tests = spatial, ks, cvm
  targets = 0.3, 0.5, 0.7, 0.9  (efficacy only; the first test is compared with the others)
)";

std::optional<std::string> Block::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::vector<Block> parse_blocks(std::string_view text) {
  std::vector<Block> blocks;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::BadSpec, "line " + std::to_string(line_no) + ": unterminated block header");
      blocks.push_back({trim(std::string_view(line).substr(1, line.size() - 2)), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::BadSpec, "line " + std::to_string(line_no) + ": expected key = value");
    }
    if (blocks.empty()) throw Error(ErrorKind::BadSpec, "line " + std::to_string(line_no) + ": entry outside a block");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (blocks.back().get(key)) {
      throw Error(ErrorKind::BadSpec, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    blocks.back().entries.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  if (blocks.empty()) throw Error(ErrorKind::BadSpec, "no blocks found");
  return blocks;
}

std::vector<ScenarioSpec> scenarios_from(const Block& b) {
  if (b.kind != "scenario") bad(b, "expected a [scenario] block");
  std::vector<std::string> values = {""};
  if (auto s = b.get("sweep")) {
    values.clear();
    for (double v : number_list(b, "sweep", *s)) values.push_back(csv::format_number(v));
  }
  std::vector<ScenarioSpec> out;
  for (const auto& x : values) {
    ScenarioSpec spec;
    bool have_first = false, have_second = false;
    if (!x.empty()) spec.parameter = number(b, "sweep", x);
    for (const auto& [key, raw] : b.entries) {
      const std::string v = x.empty() ? raw : substitute(raw, x);
      if (key == "sweep" || key == "parameter_name") continue;
      if (key == "name") spec.name = v;
      else if (key == "problem") spec.problem = two_sample_problem(b, v) ? ScenarioSpec::Problem::TwoSample : ScenarioSpec::Problem::OneSample;
      else if (key == "first" || key == "model") { spec.first = spec_value(b, key, v); have_first = true; }
      else if (key == "second" || key == "truth") { spec.second = spec_value(b, key, v); have_second = true; }
      else if (key == "n") spec.n = count(b, key, v);
      else if (key == "m") spec.m = count(b, key, v);
      else if (key == "alpha") spec.alpha = number(b, key, v);
      else if (key == "reps") spec.reps = count(b, key, v);
      else if (key == "tests") spec.tests = test_list(b, v);
      else if (key == "seed") spec.seed = seed_value(b, v);
      else if (key == "parameter") spec.parameter = number(b, key, v);
      else if (key == "grid") spec.gof.grid_size = count(b, key, v);
      else if (key == "null_reps") spec.gof.null_replicates = spec.baseline.null_replicates = count(b, key, v);
      else if (key == "expectation_draws") spec.gof.expectation_draws = count(b, key, v);
      else if (key == "t_grid") spec.baseline.t_grid = count(b, key, v);
      else if (key == "permutations") spec.permutations = count(b, key, v);
      else if (key == "standardize") spec.gof.standardize = v == "true";
      else bad(b, "unknown key '" + key + "'");
    }
    if (!have_first || !have_second) bad(b, "both laws (model/first and truth/second) are required");
    try {
      spec.validate();
    } catch (const Error& e) {
      bad(b, e.what());
    }
    out.push_back(std::move(spec));
  }
  return out;
}

ContiguousJob contiguous_from(const Block& b) {
  if (b.kind != "contiguous") bad(b, "expected a [contiguous] block");
  ContiguousJob job;
  double gamma_max = 6.0, gamma_step = 0.5;
  bool explicit_gammas = false, have_base = false, have_contaminant = false;
  for (const auto& [key, v] : b.entries) {
    if (key == "name") job.name = v;
    else if (key == "problem") job.spec.two_sample = two_sample_problem(b, v);
    else if (key == "base") { job.spec.base = spec_value(b, key, v); have_base = true; }
    else if (key == "contaminant") { job.spec.contaminant = spec_value(b, key, v); have_contaminant = true; }
    else if (key == "lambda") job.spec.lambda = number(b, key, v);
    else if (key == "gamma_max") gamma_max = number(b, key, v);
    else if (key == "gamma_step") gamma_step = number(b, key, v);
    else if (key == "gammas") { job.spec.gammas = number_list(b, key, v); explicit_gammas = true; }
    else if (key == "grid") job.spec.grid_size = count(b, key, v);
    else if (key == "expectation_draws") job.spec.expectation_draws = count(b, key, v);
    else if (key == "contaminant_draws") job.spec.contaminant_draws = count(b, key, v);
    else if (key == "t_grid") job.spec.t_grid = count(b, key, v);
    else if (key == "replicates") job.spec.replicates = count(b, key, v);
    else if (key == "seed") job.spec.seed = seed_value(b, v);
    else if (key == "alpha") job.alpha = number(b, key, v);
    else if (key == "tests") job.tests = test_list(b, v);
    else if (key == "targets") job.targets = number_list(b, key, v);
    else bad(b, "unknown key '" + key + "'");
  }
  if (!have_base || !have_contaminant) bad(b, "base and contaminant are required");
  if (!explicit_gammas) {
    try {
      job.spec.gammas = ContiguousSpec::sweep(gamma_max, gamma_step);
    } catch (const Error& e) {
      bad(b, e.what());
    }
  }
  for (auto t : job.tests) {
    if (t == TestKind::MSTRun) bad(b, "the MST-run test has no contiguous limit here");
  }
  try {
    job.spec.validate();
  } catch (const Error& e) {
    bad(b, e.what());
  }
  if (!(job.alpha > 0.0 && job.alpha < 1.0)) bad(b, "alpha must lie in (0, 1)");
  return job;
}

}  // namespace sqq::cli
