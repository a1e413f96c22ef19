#pragma once

#include <string>
#include <vector>

namespace sqq::svg {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  bool connect = false;  // polyline instead of radius-2 circles
  std::string color = "#1f5fa8";
  std::string label;
};

/// Reference line y = slope * x + intercept, drawn across the panel.
struct Guide {
  double slope = 1.0;
  double intercept = 0.0;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Guide> guides;
};

inline constexpr int kPanelSize = 480;

/// Static SVG document, panels laid out left to right, at most `columns` per
/// row. Each comment line is echoed inside a leading XML comment.
std::string render(const std::vector<Panel>& panels, const std::vector<std::string>& comments,
                   int columns = 3);

}  // namespace sqq::svg
