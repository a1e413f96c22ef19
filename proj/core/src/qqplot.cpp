#include "spatialqq/qqplot.hpp"

#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "spatialqq/csv.hpp"
#include "spatialqq/error.hpp"
#include "spatialqq/parallel.hpp"
#include "spatialqq/svg.hpp"

namespace sqq {

namespace {

std::vector<QuantileIndex> ranks_within(const DataMatrix& x) {
  std::vector<QuantileIndex> ranks(static_cast<std::size_t>(x.rows()), QuantileIndex(Vector::Zero(x.cols())));
  parallel_for(ranks.size(), [&](std::size_t k) {
    const QuantileIndex r = spatial_rank(x.row(static_cast<Index>(k)), x);
    ranks[k] = QuantileIndex::clamped(r.vector(), kQQMaxRankNorm);
  });
  return ranks;
}

std::vector<QQPointSet> empty_sets(const DataMatrix& x) {
  std::vector<QQPointSet> sets(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.cols(); ++i) {
    sets[static_cast<std::size_t>(i)].coordinate = i + 1;
    sets[static_cast<std::size_t>(i)].label = x.names()[static_cast<std::size_t>(i)];
  }
  return sets;
}

// Quantiles of both samples at the matched indices u_1..u_count, where the
// first n indices are ranks within x and the rest ranks within y.
struct MatchedQuantiles {
  std::vector<Vector> qx, qy;
  std::vector<bool> clamped;
  Index clamped_count = 0;
  double converged_fraction = 1.0;
};

MatchedQuantiles matched_quantiles(const DataMatrix& x, const DataMatrix& y, const SolverConfig& cfg,
                                   bool first_sample_only) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  const Index d = x.cols();
  if (x.rows() < d + 1 || y.rows() < d + 1) {
    throw Error(ErrorKind::InvalidArgument, "two-sample plots need at least d + 1 points per sample");
  }
  const QuantileSolver sx(x, cfg), sy(y, cfg);
  const auto rx = ranks_within(x);
  const auto ry = first_sample_only ? std::vector<QuantileIndex>{} : ranks_within(y);
  const std::size_t n = rx.size(), total = n + ry.size();

  MatchedQuantiles out;
  out.qx.resize(total);
  out.qy.resize(total);
  out.clamped.resize(total);
  std::vector<char> converged(total, 1);
  parallel_for(total, [&](std::size_t k) {
    const bool from_x = k < n;
    const QuantileIndex& u = from_x ? rx[k] : ry[k - n];
    const Index row = static_cast<Index>(from_x ? k : k - n);
    out.clamped[k] = u.was_clamped();
    auto solve = [&](const QuantileSolver& s) {
      const auto r = s.solve(u);
      if (!r.converged) converged[k] = 0;
      return r.point;
    };
    // The native sample's quantile at its own rank is the point itself.
    if (from_x) {
      out.qx[k] = u.was_clamped() ? solve(sx) : Vector(x.row(row));
      out.qy[k] = solve(sy);
    } else {
      out.qx[k] = solve(sx);
      out.qy[k] = u.was_clamped() ? solve(sy) : Vector(y.row(row));
    }
  });
  Index ok = 0;
  for (std::size_t k = 0; k < total; ++k) {
    ok += converged[k];
    out.clamped_count += out.clamped[k] ? 1 : 0;
  }
  out.converged_fraction = total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path);
}

}  // namespace

QQPlot one_sample_points(const DataMatrix& x, const ModelQuantileFunction& model, const SolverConfig& cfg) {
  if (model.spec().dim() != x.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "model dimension differs from the sample's");
  }
  return one_sample_points(x, QuantileMap([&model](const QuantileIndex& u) { return model(u); }), cfg);
}

QQPlot one_sample_points(const DataMatrix& x, const QuantileMap& model, const SolverConfig&) {
  const auto ranks = ranks_within(x);
  const std::size_t n = ranks.size();
  std::vector<Vector> q(n);
  parallel_for(n, [&](std::size_t k) { q[k] = model(ranks[k]); });

  QQPlot plot;
  plot.sets = empty_sets(x);
  plot.clamped.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    plot.clamped[k] = ranks[k].was_clamped();
    plot.clamped_count += plot.clamped[k] ? 1 : 0;
    if (q[k].size() != x.cols()) throw Error(ErrorKind::ShapeMismatch, "model quantile has wrong dimension");
    for (Index i = 0; i < x.cols(); ++i) {
      plot.sets[static_cast<std::size_t>(i)].points.push_back({x(static_cast<Index>(k), i), q[k](i)});
    }
  }
  return plot;
}

QQPlot two_sample_points(const DataMatrix& x, const DataMatrix& y, const SolverConfig& cfg,
                         TwoSamplePairing pairing) {
  const bool own = pairing == TwoSamplePairing::FirstSampleRanks;
  if (own && x.rows() != y.rows()) {
    throw Error(ErrorKind::InvalidArgument, "first-sample pairing needs equal sample sizes");
  }
  const auto mq = matched_quantiles(x, y, cfg, own);
  QQPlot plot;
  plot.sets = empty_sets(x);
  plot.clamped = mq.clamped;
  plot.clamped_count = mq.clamped_count;
  plot.converged_fraction = mq.converged_fraction;
  for (std::size_t k = 0; k < mq.qx.size(); ++k) {
    for (Index i = 0; i < x.cols(); ++i) {
      plot.sets[static_cast<std::size_t>(i)].points.push_back({mq.qx[k](i), mq.qy[k](i)});
    }
  }
  return plot;
}

DifferencePlot difference_plot(const DataMatrix& x, const DataMatrix& y, const SolverConfig& cfg) {
  const auto mq = matched_quantiles(x, y, cfg, false);
  DifferencePlot plot;
  plot.dim = x.cols();
  plot.labels = x.names();
  plot.clamped_count = mq.clamped_count;
  plot.converged_fraction = mq.converged_fraction;
  plot.entries.reserve(mq.qx.size() * static_cast<std::size_t>(x.cols()));
  for (std::size_t k = 0; k < mq.qx.size(); ++k) {
    for (Index l = 0; l < x.cols(); ++l) plot.entries.push_back({l + 1, mq.qx[k](l) - mq.qy[k](l)});
  }
  return plot;
}

PlotFormat format_for_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos) {
    std::string ext = path.substr(dot + 1);
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == "svg") return PlotFormat::Svg;
  }
  return PlotFormat::Csv;
}

void write_csv(const QQPlot& plot, std::ostream& out, const std::vector<std::string>& comments) {
  csv::Writer w(out);
  for (const auto& c : comments) w.comment(c);
  w.row({"coordinate", "abscissa", "ordinate"});
  for (const auto& set : plot.sets) {
    for (const auto& p : set.points) {
      w.row({std::to_string(set.coordinate), csv::format_number(p.abscissa), csv::format_number(p.ordinate)});
    }
  }
}

void write_csv(const DifferencePlot& plot, std::ostream& out, const std::vector<std::string>& comments) {
  csv::Writer w(out);
  for (const auto& c : comments) w.comment(c);
  w.row({"coordinate", "difference"});
  for (const auto& e : plot.entries) w.row({std::to_string(e.coordinate), csv::format_number(e.difference)});
}

std::string render_svg(const QQPlot& plot, const std::vector<std::string>& comments) {
  std::vector<svg::Panel> panels;
  for (const auto& set : plot.sets) {
    svg::Panel p;
    p.title = set.label.empty() ? "coordinate " + std::to_string(set.coordinate) : set.label;
    p.x_label = "coordinate " + std::to_string(set.coordinate) + ", first quantile";
    p.y_label = "coordinate " + std::to_string(set.coordinate) + ", second quantile";
    svg::Series s;
    for (const auto& pt : set.points) {
      s.x.push_back(pt.abscissa);
      s.y.push_back(pt.ordinate);
    }
    p.series.push_back(std::move(s));
    p.guides.push_back({set.reference.slope, set.reference.intercept});
    panels.push_back(std::move(p));
  }
  return svg::render(panels, comments);
}

std::string render_svg(const DifferencePlot& plot, const std::vector<std::string>& comments) {
  svg::Panel p;
  p.title = "quantile differences";
  p.x_label = "coordinate index";
  p.y_label = "difference";
  svg::Series s;
  for (const auto& e : plot.entries) {
    s.x.push_back(static_cast<double>(e.coordinate));
    s.y.push_back(e.difference);
  }
  p.series.push_back(std::move(s));
  p.guides.push_back({0.0, 0.0});
  return svg::render({p}, comments, 1);
}

void emit(const QQPlot& plot, PlotFormat format, const std::string& path,
          const std::vector<std::string>& comments) {
  if (format == PlotFormat::Svg) return write_file(path, render_svg(plot, comments));
  std::ostringstream os;
  write_csv(plot, os, comments);
  write_file(path, os.str());
}

void emit(const DifferencePlot& plot, PlotFormat format, const std::string& path,
          const std::vector<std::string>& comments) {
  if (format == PlotFormat::Svg) return write_file(path, render_svg(plot, comments));
  std::ostringstream os;
  write_csv(plot, os, comments);
  write_file(path, os.str());
}

}  // namespace sqq
