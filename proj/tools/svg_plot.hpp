#pragma once

#include <string>
#include <vector>

namespace meltblow::tools {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // points instead of a polyline
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Static line chart; non-finite points (and non-positive ones on log axes)
/// are skipped and break the polyline.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

/// Writes `render_svg` output to `path`; returns false on I/O failure.
bool write_svg(const std::string& path, const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace meltblow::tools
