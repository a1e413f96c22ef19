#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "spatialqq/model_quantile.hpp"
#include "spatialqq/spatial.hpp"

namespace sqq {

struct QQPoint {
  double abscissa = 0.0;
  double ordinate = 0.0;
};

struct ReferenceLine {
  double slope = 1.0;
  double intercept = 0.0;
};

/// Q-Q points for one coordinate.
struct QQPointSet {
  Index coordinate = 1;  // 1-based
  std::string label;
  std::vector<QQPoint> points;
  ReferenceLine reference;
};

/// One point set per coordinate plus construction diagnostics.
struct QQPlot {
  std::vector<QQPointSet> sets;
  std::vector<bool> clamped;  // per matched index u_k
  Index clamped_count = 0;
  double converged_fraction = 1.0;
};

struct DifferenceEntry {
  Index coordinate = 1;  // 1-based
  double difference = 0.0;
};

/// Coordinatewise quantile differences, drawn as d vertical strips.
struct DifferencePlot {
  Index dim = 0;
  std::vector<std::string> labels;
  std::vector<DifferenceEntry> entries;
  Index clamped_count = 0;
  double converged_fraction = 1.0;
};

/// Ranks beyond this norm are pulled back onto the sphere and flagged.
inline constexpr double kQQMaxRankNorm = 0.99;

using QuantileMap = std::function<Vector(const QuantileIndex&)>;

QQPlot one_sample_points(const DataMatrix& x, const ModelQuantileFunction& model,
                         const SolverConfig& cfg = {});
QQPlot one_sample_points(const DataMatrix& x, const QuantileMap& model, const SolverConfig& cfg = {});

enum class TwoSamplePairing {
  AllRanks,  // n + m matched indices
  FirstSampleRanks,  // n = m only: x's own ranks, the univariate convention
};

QQPlot two_sample_points(const DataMatrix& x, const DataMatrix& y, const SolverConfig& cfg = {},
                         TwoSamplePairing pairing = TwoSamplePairing::AllRanks);

DifferencePlot difference_plot(const DataMatrix& x, const DataMatrix& y, const SolverConfig& cfg = {});

enum class PlotFormat { Csv, Svg };

/// ".svg" selects SVG, anything else CSV.
PlotFormat format_for_path(const std::string& path);

void write_csv(const QQPlot& plot, std::ostream& out, const std::vector<std::string>& comments = {});
void write_csv(const DifferencePlot& plot, std::ostream& out,
               const std::vector<std::string>& comments = {});
std::string render_svg(const QQPlot& plot, const std::vector<std::string>& comments = {});
std::string render_svg(const DifferencePlot& plot, const std::vector<std::string>& comments = {});

/// Throws IoError when the file cannot be written.
void emit(const QQPlot& plot, PlotFormat format, const std::string& path,
          const std::vector<std::string>& comments = {});
void emit(const DifferencePlot& plot, PlotFormat format, const std::string& path,
          const std::vector<std::string>& comments = {});

}  // namespace sqq
