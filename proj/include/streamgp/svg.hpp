#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace streamgp {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal line chart (fixed 720x440 canvas, legend, linear axes).
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

// Scatter plot of 2-d points; `labels` picks the marker color per point.
void write_svg_scatter(const std::string& path, const std::string& title,
                       const Eigen::MatrixXd& points,
                       const std::vector<int>& labels);

}  // namespace streamgp
