#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mrdo/cli.hpp"

namespace mrdo {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 80, kRight = 220, kTop = 30, kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const std::string& quantity, bool log_scale) {
  double t0 = std::numeric_limits<double>::infinity(), t1 = -t0;
  double v0 = t0, v1 = -t0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      const double v = s.value[i];
      if (!std::isfinite(v) || (log_scale && v <= 0)) continue;
      const double y = log_scale ? std::log10(v) : v;
      t0 = std::min(t0, s.t[i]);
      t1 = std::max(t1, s.t[i]);
      v0 = std::min(v0, y);
      v1 = std::max(v1, y);
    }
  if (!std::isfinite(t0)) t0 = 0, t1 = 1, v0 = 0, v1 = 1;
  if (t1 <= t0) t1 = t0 + 1;
  if (log_scale) {
    v0 = std::floor(v0);
    v1 = std::ceil(v1);
  }
  if (v1 <= v0) v1 = v0 + 1;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double t) { return kLeft + (t - t0) / (t1 - t0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - v0) / (v1 - v0)) * ph; };

  std::ostringstream o;
  o << std::setprecision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks: decades on a log axis, five even steps otherwise.
  const int n_yticks = log_scale ? static_cast<int>(v1 - v0) : 5;
  const int y_stride = std::max(1, n_yticks / 10);
  for (int i = 0; i <= n_yticks; i += y_stride) {
    const double y = v0 + (v1 - v0) * i / n_yticks;
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(y) << "\" y2=\"" << py(y)
      << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">";
    if (log_scale)
      o << "1e" << static_cast<int>(std::lround(y));
    else
      o << y;
    o << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + (t1 - t0) * i / 5;
    o << "<text x=\"" << px(t) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << t << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">t</text>\n";
  o << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kTop + ph / 2 << ")\">" << escape(quantity) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      const double v = s.value[i];
      if (!std::isfinite(v) || (log_scale && v <= 0)) continue;
      o << px(s.t[i]) << "," << py(log_scale ? std::log10(v) : v) << " ";
    }
    o << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * k;
    o << "<line x1=\"" << kWidth - kRight + 15 << "\" x2=\"" << kWidth - kRight + 40 << "\" y1=\"" << ly
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kWidth - kRight + 46 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace mrdo
