#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spatialqq/powerlab.hpp"
#include "spatialqq/qqplot.hpp"

namespace sqq::cli {

/// Numeric matrix from RFC-4180 text. With has_header unset, the first record
/// is a header when any of its fields is not a number. Throws ParseError
/// listing every bad cell, RaggedRows, or EmptyInput.
DataMatrix parse_matrix(std::string_view text, std::optional<bool> has_header = std::nullopt);
DataMatrix ingest_csv(const std::string& path, std::optional<bool> has_header = std::nullopt);

void write_matrix(const DataMatrix& x, std::ostream& out, const std::vector<std::string>& comments = {});

struct LineFit {
  double slope = 1.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

/// Least-squares line through a point set; DegenerateAbscissae with fewer
/// than two distinct abscissae.
LineFit fit_reference_line(const QQPointSet& points);

/// `[kind]` headed block of `key = value` lines.
struct Block {
  std::string kind;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> get(const std::string& key) const;
};

std::vector<Block> parse_blocks(std::string_view text);

/// One scenario per sweep value. `sweep = a, b, c` or `sweep = lo:step:hi`;
/// `{x}` in any value is replaced by the sweep value, which also becomes the
/// recorded parameter.
std::vector<ScenarioSpec> scenarios_from(const Block& block);

struct ContiguousJob {
  std::string name;
  ContiguousSpec spec;
  double alpha = 0.05;
  std::vector<TestKind> tests = {TestKind::SpatialQQ, TestKind::KS, TestKind::CVM};
  std::vector<double> targets = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

ContiguousJob contiguous_from(const Block& block);

/// Documentation of the scenario file format, shown by --help.
extern const char* const kScenarioHelp;

/// Runs the command line. Exit status 0 on success, 1 on error, 2 when
/// --fail-on-reject is given and a test rejects.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sqq::cli
