#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "spatialqq/csv.hpp"
#include "spatialqq/distributions.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/qqplot.hpp"
#include "spatialqq/svg.hpp"

using namespace sqq;

namespace {

DataMatrix draw(const char* spec, Index n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return sample(DistributionSpec::parse(spec), n, rng);
}

DataMatrix scaled(const DataMatrix& x, double c, const Vector& shift) {
  RowMatrix v = (c * x.values()).rowwise() + shift.transpose();
  return DataMatrix(std::move(v), x.names());
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(std::floor(p * static_cast<double>(v.size() - 1)))];
}

std::vector<double> abs_deviations(const QQPlot& plot) {
  std::vector<double> out;
  for (const auto& set : plot.sets)
    for (const auto& p : set.points) out.push_back(std::abs(p.ordinate - p.abscissa));
  return out;
}

// Kendall's tau with its large-sample z score.
double kendall_z(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = (a[i] - a[j]) * (b[i] - b[j]);
      s += (p > 0) - (p < 0);
    }
  const double nn = static_cast<double>(n);
  return s / std::sqrt(nn * (nn - 1) * (2 * nn + 5) / 18);
}

std::size_t count(const std::string& text, const std::string& what) {
  std::size_t c = 0;
  for (auto pos = text.find(what); pos != std::string::npos; pos = text.find(what, pos + 1)) ++c;
  return c;
}

}  // namespace

TEST(Csv, ParsesQuotesCommentsAndBlankLines) {
  const auto r = csv::parse("# note\na,\"b,c\"\n\n\"say \"\"hi\"\"\",2\r\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].fields[1], "b,c");
  EXPECT_EQ(r[1].fields[0], "say \"hi\"");
  EXPECT_EQ(r[1].line, 4u);
}

TEST(Csv, UnterminatedQuoteIsParseError) {
  try {
    csv::parse("a,\"b\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
}

TEST(Csv, NumberFormattingRoundTrips) {
  RngStream rng(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.normal() * 5);
    double back = 0;
    ASSERT_TRUE(csv::parse_number(csv::format_number(v), back));
    EXPECT_EQ(back, v);
  }
  double out = 0;
  EXPECT_FALSE(csv::parse_number("1.5x", out));
  EXPECT_FALSE(csv::parse_number("", out));
  EXPECT_FALSE(csv::parse_number("inf", out));
  EXPECT_TRUE(csv::parse_number(" +2 ", out));
  EXPECT_EQ(out, 2.0);
}

TEST(OneSamplePoints, SelfComparisonIsOnTheDiagonal) {
  const auto x = draw("normal d=1", 30, 2);
  const QuantileSolver own(x);
  const auto plot = one_sample_points(x, QuantileMap([&](const QuantileIndex& u) { return own.solve(u).point; }));
  ASSERT_EQ(plot.sets.size(), 1u);
  ASSERT_EQ(plot.sets[0].points.size(), 30u);
  for (const auto& p : plot.sets[0].points) EXPECT_DOUBLE_EQ(p.ordinate, p.abscissa);
  EXPECT_EQ(plot.sets[0].reference.slope, 1.0);
  EXPECT_EQ(plot.sets[0].reference.intercept, 0.0);
}

TEST(OneSamplePoints, StandardizedNormalHugsTheDiagonal) {
  const auto raw = draw("normal d=3", 500, 3);
  const auto x = apply_standardization(raw, fit_standardization(raw));
  const auto plot = one_sample_points(x, ModelQuantileFunction::automatic(DistributionSpec::standard_normal(3)));
  EXPECT_EQ(plot.sets.size(), 3u);
  EXPECT_LT(percentile(abs_deviations(plot), 0.95), 0.25);
}

TEST(OneSamplePoints, LaplaceAgainstNormalBends) {
  const auto raw = draw("laplace d=3", 300, 4);
  const auto x = apply_standardization(raw, fit_standardization(raw));
  const auto plot = one_sample_points(x, ModelQuantileFunction::automatic(DistributionSpec::standard_normal(3)));
  std::vector<double> a, gap;
  for (const auto& p : plot.sets[0].points) {
    a.push_back(p.abscissa);
    gap.push_back(p.ordinate - p.abscissa);
  }
  EXPECT_GT(std::abs(kendall_z(a, gap)), 3.0);
}

TEST(TwoSamplePoints, IdenticalSamples) {
  const auto x = draw("normal d=2", 40, 5);
  for (auto pairing : {TwoSamplePairing::AllRanks, TwoSamplePairing::FirstSampleRanks}) {
    const auto plot = two_sample_points(x, x, {}, pairing);
    for (const auto& set : plot.sets)
      for (const auto& p : set.points) EXPECT_NEAR(p.ordinate, p.abscissa, 1e-9);
  }
}

TEST(TwoSamplePoints, DoubledSampleGivesSlopeTwo) {
  const auto x = draw("normal d=3", 60, 6);
  const auto y = scaled(x, 2.0, Vector::Zero(3));
  const auto plot = two_sample_points(x, y);
  EXPECT_EQ(plot.sets[0].points.size(), 120u);
  for (const auto& set : plot.sets)
    for (const auto& p : set.points) EXPECT_NEAR(p.ordinate, 2.0 * p.abscissa, 1e-6);
}

TEST(TwoSamplePoints, FirstSampleRanksNeedEqualSizes) {
  EXPECT_THROW(two_sample_points(draw("normal d=2", 10, 1), draw("normal d=2", 11, 2), {},
                                 TwoSamplePairing::FirstSampleRanks),
               Error);
}

TEST(TwoSamplePoints, IndependentNormalsStayNearDiagonal) {
  // The bound is the largest 95th percentile seen over 40 calibration pairs.
  std::vector<double> calibration;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto plot = two_sample_points(draw("normal d=3", 100, 1000 + s), draw("normal d=3", 100, 2000 + s));
    calibration.push_back(percentile(abs_deviations(plot), 0.95));
  }
  const double bound = *std::max_element(calibration.begin(), calibration.end());
  const auto plot = two_sample_points(draw("normal d=3", 100, 77), draw("normal d=3", 100, 78));
  EXPECT_LT(percentile(abs_deviations(plot), 0.95), bound);
  const auto shifted = two_sample_points(draw("normal d=3", 100, 77), draw("normal d=3 mean=2,2,2", 100, 78));
  EXPECT_GT(percentile(abs_deviations(shifted), 0.95), bound);
}

TEST(DifferencePlot, IdenticalSamplesGiveZero) {
  const auto x = draw("normal d=3", 30, 7);
  const auto plot = difference_plot(x, x);
  EXPECT_EQ(plot.dim, 3);
  EXPECT_EQ(plot.entries.size(), 3u * 60u);
  for (const auto& e : plot.entries) EXPECT_NEAR(e.difference, 0.0, 1e-9);
}

TEST(DifferencePlot, LocationShiftShowsInOneStrip) {
  const auto x = draw("normal d=3", 50, 8);
  const auto y = scaled(x, 1.0, Eigen::Vector3d(1.5, 0, 0));
  for (const auto& e : difference_plot(x, y).entries) {
    EXPECT_NEAR(e.difference, e.coordinate == 1 ? -1.5 : 0.0, 1e-6);
  }
}

TEST(DifferencePlot, BrownianLocationAndScale) {
  const auto x = draw("brownian points=20 mean=0 scale=1", 50, 9);
  const auto y = draw("brownian points=20 mean=2 scale=2", 50, 10);
  const auto plot = difference_plot(x, y);
  std::vector<std::vector<double>> strips(20);
  for (const auto& e : plot.entries) strips[static_cast<std::size_t>(e.coordinate - 1)].push_back(e.difference);
  for (auto& s : strips) EXPECT_LT(percentile(s, 0.5), -1.0);
}

TEST(Emit, EmptyPlotIsHeaderOnly) {
  std::ostringstream out;
  write_csv(QQPlot{}, out);
  EXPECT_EQ(out.str(), "coordinate,abscissa,ordinate\n");
}

TEST(Emit, CommentsPrecedeHeader) {
  std::ostringstream out;
  write_csv(QQPlot{}, out, {"seed: 4"});
  EXPECT_EQ(out.str(), "# seed: 4\ncoordinate,abscissa,ordinate\n");
}

TEST(Emit, SvgHasOnePanelAndReferencePerCoordinate) {
  const auto x = draw("normal d=3", 20, 11);
  const auto svg = render_svg(two_sample_points(x, draw("normal d=3", 20, 12)), {"a -- b"});
  EXPECT_EQ(count(svg, "class=\"panel\""), 3u);
  EXPECT_EQ(count(svg, "class=\"reference\""), 3u);
  EXPECT_EQ(svg.find("a -- b"), std::string::npos);
  EXPECT_EQ(svg.rfind("</svg>"), svg.size() - 7);
}

TEST(Emit, DifferenceSvgIsOnePanel) {
  const auto x = draw("normal d=4", 20, 13);
  const auto svg = render_svg(difference_plot(x, x));
  EXPECT_EQ(count(svg, "class=\"panel\""), 1u);
  EXPECT_EQ(count(svg, "class=\"reference\""), 1u);
}

TEST(Emit, CsvRoundTrip) {
  const auto x = draw("cauchy d=2", 40, 14);
  const auto plot = two_sample_points(x, draw("normal d=2", 30, 15));
  const auto path = (std::filesystem::temp_directory_path() / "sqq_roundtrip.csv").string();
  emit(plot, format_for_path(path), path, {"round trip"});
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  const auto records = csv::parse(text.str());
  ASSERT_EQ(records.size(), 1 + 2 * plot.sets[0].points.size());
  std::size_t row = 1;
  for (const auto& set : plot.sets) {
    for (const auto& p : set.points) {
      double a = 0, o = 0;
      ASSERT_TRUE(csv::parse_number(records[row].fields[1], a));
      ASSERT_TRUE(csv::parse_number(records[row].fields[2], o));
      EXPECT_NEAR(a, p.abscissa, 1e-12 * std::max(1.0, std::abs(p.abscissa)));
      EXPECT_NEAR(o, p.ordinate, 1e-12 * std::max(1.0, std::abs(p.ordinate)));
      ++row;
    }
  }
  std::filesystem::remove(path);
}

TEST(Emit, UnwritablePathIsIoError) {
  try {
    emit(QQPlot{}, PlotFormat::Csv, "/nonexistent-dir/x.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Emit, FormatFromExtension) {
  EXPECT_EQ(format_for_path("a/b.SVG"), PlotFormat::Svg);
  EXPECT_EQ(format_for_path("a.csv"), PlotFormat::Csv);
  EXPECT_EQ(format_for_path("noext"), PlotFormat::Csv);
}
