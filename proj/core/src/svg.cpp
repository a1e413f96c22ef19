#include "spatialqq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spatialqq/csv.hpp"

namespace sqq::svg {

namespace {

constexpr double kMargin = 56.0;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// "--" may not appear inside an XML comment.
std::string comment_safe(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '-' && !out.empty() && out.back() == '-') out.push_back(' ');
    out.push_back(c);
  }
  if (!out.empty() && out.back() == '-') out.push_back(' ');
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = -1.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

void render_panel(std::ostringstream& os, const Panel& panel, double ox, double oy) {
  Range xr, yr;
  for (const auto& s : panel.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  for (const auto& g : panel.guides) {
    yr.add(g.slope * xr.lo + g.intercept);
    yr.add(g.slope * xr.hi + g.intercept);
  }
  yr.finish();

  const double size = kPanelSize;
  const double w = size - 1.5 * kMargin, h = size - 1.5 * kMargin;
  const double left = kMargin, top = 0.5 * kMargin;
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return top + h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  os << "<g class=\"panel\" transform=\"translate(" << num(ox) << ',' << num(oy) << ")\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << kPanelSize << "\" height=\"" << kPanelSize
     << "\" fill=\"white\"/>\n";
  os << "<clipPath id=\"clip" << static_cast<long>(ox) << '_' << static_cast<long>(oy)
     << "\"><rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w)
     << "\" height=\"" << num(h) << "\"/></clipPath>\n";
  os << "<rect class=\"frame\" x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w)
     << "\" height=\"" << num(h) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  // Tick labels at the range ends and midpoint.
  for (double f : {0.0, 0.5, 1.0}) {
    const double xv = xr.lo + f * (xr.hi - xr.lo);
    const double yv = yr.lo + f * (yr.hi - yr.lo);
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + h + 14)
       << "\" font-size=\"10\" text-anchor=\"middle\">" << csv::format_number(std::round(xv * 1e3) / 1e3)
       << "</text>\n";
    os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(py(yv) + 3)
       << "\" font-size=\"10\" text-anchor=\"end\">" << csv::format_number(std::round(yv * 1e3) / 1e3)
       << "</text>\n";
  }
  os << "<text x=\"" << num(left + 0.5 * w) << "\" y=\"" << num(top + h + 32)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << escape(panel.x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(top + 0.5 * h) << "\" font-size=\"12\" text-anchor=\"middle\""
     << " transform=\"rotate(-90 14 " << num(top + 0.5 * h) << ")\">" << escape(panel.y_label)
     << "</text>\n";
  if (!panel.title.empty()) {
    os << "<text x=\"" << num(left + 0.5 * w) << "\" y=\"" << num(top - 8)
       << "\" font-size=\"13\" text-anchor=\"middle\">" << escape(panel.title) << "</text>\n";
  }

  os << "<g clip-path=\"url(#clip" << static_cast<long>(ox) << '_' << static_cast<long>(oy)
     << ")\">\n";
  for (const auto& g : panel.guides) {
    os << "<line class=\"reference\" x1=\"" << num(px(xr.lo)) << "\" y1=\""
       << num(py(g.slope * xr.lo + g.intercept)) << "\" x2=\"" << num(px(xr.hi)) << "\" y2=\""
       << num(py(g.slope * xr.hi + g.intercept)) << "\" stroke=\"#c0392b\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (const auto& s : panel.series) {
    const std::size_t count = std::min(s.x.size(), s.y.size());
    if (s.connect) {
      os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color << "\" points=\"";
      for (std::size_t i = 0; i < count; ++i) {
        os << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
      }
      os << "\"/>\n";
    }
    for (std::size_t i = 0; i < count; ++i) {
      os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
         << "\" r=\"2\" fill=\"" << s.color << "\"/>\n";
    }
  }
  os << "</g>\n";

  // Legend for labelled series.
  double ly = top + 12;
  for (const auto& s : panel.series) {
    if (s.label.empty()) continue;
    os << "<text x=\"" << num(left + 8) << "\" y=\"" << num(ly) << "\" font-size=\"11\" fill=\""
       << s.color << "\">" << escape(s.label) << "</text>\n";
    ly += 14;
  }
  os << "</g>\n";
}

}  // namespace

std::string render(const std::vector<Panel>& panels, const std::vector<std::string>& comments,
                   int columns) {
  const int count = static_cast<int>(panels.size());
  columns = std::max(1, std::min(columns, std::max(count, 1)));
  const int rows = std::max(1, (count + columns - 1) / columns);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comments.empty()) {
    os << "<!--\n";
    for (const auto& c : comments) os << "# " << comment_safe(c) << '\n';
    os << "-->\n";
  }
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << columns * kPanelSize
     << "\" height=\"" << rows * kPanelSize << "\" viewBox=\"0 0 " << columns * kPanelSize << ' '
     << rows * kPanelSize << "\" font-family=\"sans-serif\">\n";
  for (int i = 0; i < count; ++i) {
    render_panel(os, panels[static_cast<std::size_t>(i)], (i % columns) * kPanelSize,
                 (i / columns) * kPanelSize);
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sqq::svg
