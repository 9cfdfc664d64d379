#include "streamgp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace streamgp {
namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void absorb(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void finalize() {
    if (!(lo < hi)) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double map_x(double v, const Range& r) {
  return kMarginLeft +
         (v - r.lo) / (r.hi - r.lo) * (kWidth - kMarginLeft - kMarginRight);
}

double map_y(double v, const Range& r) {
  return kHeight - kMarginBottom -
         (v - r.lo) / (r.hi - r.lo) * (kHeight - kMarginTop - kMarginBottom);
}

void open_svg(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
}

void draw_axes(std::ofstream& out, const Range& rx, const Range& ry,
               const std::string& x_label, const std::string& y_label) {
  const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
  const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
      << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
      << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
    const double px = map_x(fx, rx);
    out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px
        << "\" y2=\"" << y0 + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
    const double py = map_y(fy, ry);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0
        << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fy) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << x_label << "</text>\n"
      << "<text x=\"16\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 "
      << (y0 + y1) / 2 << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create svg file: " + path);

  Range rx, ry;
  for (const SvgSeries& s : series) {
    for (double v : s.x) rx.absorb(v);
    for (double v : s.y) ry.absorb(v);
  }
  rx.finalize();
  ry.finalize();

  open_svg(out, title);
  draw_axes(out, rx, ry, x_label, y_label);
  for (size_t k = 0; k < series.size(); ++k) {
    const SvgSeries& s = series[k];
    const char* color = kPalette[k % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << fmt(map_x(s.x[i], rx)) << ',' << fmt(map_y(s.y[i], ry)) << ' ';
    }
    out << "\"/>\n";
    const int ly = kMarginTop + 16 * static_cast<int>(k);
    out << "<rect x=\"" << kWidth - 150 << "\" y=\"" << ly - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n"
        << "<text x=\"" << kWidth - 135 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_svg_scatter(const std::string& path, const std::string& title,
                       const Eigen::MatrixXd& points,
                       const std::vector<int>& labels) {
  if (points.cols() < 2) {
    throw std::invalid_argument("write_svg_scatter: need 2 columns");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create svg file: " + path);

  Range rx, ry;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    rx.absorb(points(i, 0));
    ry.absorb(points(i, 1));
  }
  rx.finalize();
  ry.finalize();

  open_svg(out, title);
  draw_axes(out, rx, ry, "dim 1", "dim 2");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int label = i < static_cast<Eigen::Index>(labels.size())
                          ? labels[i]
                          : 0;
    const char* color = kPalette[((label % kPaletteSize) + kPaletteSize) %
                                 kPaletteSize];
    out << "<circle cx=\"" << fmt(map_x(points(i, 0), rx)) << "\" cy=\""
        << fmt(map_y(points(i, 1), ry)) << "\" r=\"2.5\" fill=\"" << color
        << "\" fill-opacity=\"0.7\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace streamgp
