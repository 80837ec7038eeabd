#include "evolve/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace evolve {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_loglog_svg(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series) {
  double lx_min = 1e300, lx_max = -1e300, ly_min = 1e300, ly_max = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 || s.y[i] <= 0.0) continue;
      lx_min = std::min(lx_min, std::log10(s.x[i]));
      lx_max = std::max(lx_max, std::log10(s.x[i]));
      ly_min = std::min(ly_min, std::log10(s.y[i]));
      ly_max = std::max(ly_max, std::log10(s.y[i]));
    }
  }
  if (lx_min > lx_max) {
    lx_min = 0.0;
    lx_max = 1.0;
  }
  if (ly_min > ly_max) {
    ly_min = -1.0;
    ly_max = 0.0;
  }
  if (lx_max - lx_min < 1e-9) lx_max = lx_min + 1.0;
  if (ly_max - ly_min < 1e-9) ly_max = ly_min + 1.0;

  const double left = 90, right = 770, top = 60, bottom = 540;
  auto px = [&](double lx) { return left + (lx - lx_min) / (lx_max - lx_min) * (right - left); };
  auto py = [&](double ly) { return bottom - (ly - ly_min) / (ly_max - ly_min) * (bottom - top); };

  std::ofstream out(path);
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
         "width=\"800\" height=\"600\">\n";
  out << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  out << "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">" << title
      << "</text>\n";
  out << "<text x=\"430\" y=\"580\" text-anchor=\"middle\" font-size=\"14\">" << x_label
      << "</text>\n";
  out << "<text x=\"25\" y=\"300\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 25 300)\">"
      << y_label << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
      << "\" height=\"" << bottom - top << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int d = static_cast<int>(std::ceil(lx_min)); d <= static_cast<int>(std::floor(lx_max));
       ++d) {
    double x = px(d);
    out << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << bottom
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << bottom + 20
        << "\" text-anchor=\"middle\" font-size=\"12\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(ly_min)); d <= static_cast<int>(std::floor(ly_max));
       ++d) {
    double y = py(d);
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << right << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-size=\"12\">1e" << d << "</text>\n";
  }

  int ci = 0;
  for (const auto& s : series) {
    const char* color = kColors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 || s.y[i] <= 0.0) continue;
      out << px(std::log10(s.x[i])) << "," << py(std::log10(s.y[i])) << " ";
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 || s.y[i] <= 0.0) continue;
      out << "<circle cx=\"" << px(std::log10(s.x[i])) << "\" cy=\"" << py(std::log10(s.y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << right - 10 << "\" y=\"" << top + 20 + 18 * ci
        << "\" text-anchor=\"end\" font-size=\"13\" fill=\"" << color << "\">" << s.label
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace evolve
