#include "biaslens/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace biaslens {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Fixed decimals keep the documents byte-stable.
std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  std::string s = os.str();
  if (s == "-0" || s.rfind("-0.", 0) == 0) {
    bool all_zero = true;
    for (char c : s) {
      if (c >= '1' && c <= '9') {
        all_zero = false;
        break;
      }
    }
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

struct Rgb {
  double r, g, b;
};

Rgb parse_hex(const std::string& hex) {
  auto channel = [&](size_t pos) {
    return static_cast<double>(std::stoi(hex.substr(pos, 2), nullptr, 16));
  };
  return {channel(1), channel(3), channel(5)};
}

std::string to_hex(const Rgb& c) {
  auto channel = [](double v) {
    const int i = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
    const char digits[] = "0123456789abcdef";
    return std::string{digits[i / 16], digits[i % 16]};
  };
  return "#" + channel(c.r) + channel(c.g) + channel(c.b);
}

// Light-to-dark single-hue ramp; t in [0, 1].
std::string ramp_color(double t) {
  static const Rgb low = parse_hex("#eff3ff");
  static const Rgb high = parse_hex("#08306b");
  t = std::clamp(t, 0.0, 1.0);
  return to_hex({low.r + t * (high.r - low.r), low.g + t * (high.g - low.g),
                 low.b + t * (high.b - low.b)});
}

std::string series_color(const RadarStyle& style, size_t i) {
  return style.colors[i % style.colors.size()];
}

double radial_fraction(double value, double vmax, bool log_scale) {
  if (vmax <= 0.0 || value <= 0.0) return 0.0;
  if (log_scale) return std::log10(1.0 + value) / std::log10(1.0 + vmax);
  return value / vmax;
}

std::string render_bars(const RadarData& data, const RadarStyle& style) {
  const int width = style.size;
  const int height = style.size * 2 / 3;
  const int margin_left = 70;
  const int margin_bottom = 70;
  const int margin_top = 60;
  const int plot_w = width - margin_left - 30;
  const int plot_h = height - margin_top - margin_bottom;

  double vmax = 0.0;
  for (const auto& axis : data.axes) {
    for (const auto& v : axis.values) {
      if (v && *v > vmax) vmax = *v;
    }
  }
  if (vmax <= 0.0) vmax = 1.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\" data-layout=\"bars\">\n";
  if (!style.title.empty()) {
    svg << "  <text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" "
        << "font-family=\"sans-serif\">" << xml_escape(style.title) << "</text>\n";
  }
  const size_t n_axes = data.axes.size();
  const size_t n_series = data.series.size();
  const double group_w = static_cast<double>(plot_w) / static_cast<double>(n_axes);
  const double bar_w = group_w / static_cast<double>(n_series + 1);
  for (size_t ai = 0; ai < n_axes; ++ai) {
    const auto& axis = data.axes[ai];
    const double group_x = margin_left + group_w * static_cast<double>(ai);
    for (size_t si = 0; si < n_series; ++si) {
      const double value = axis.values[si] ? *axis.values[si] : 0.0;
      const double frac = radial_fraction(value, vmax, style.log_scale);
      const double bar_h = frac * plot_h;
      svg << "  <rect class=\"bar\" x=\"" << fixed(group_x + bar_w * (si + 0.5), 1) << "\" y=\""
          << fixed(margin_top + plot_h - bar_h, 1) << "\" width=\"" << fixed(bar_w, 1)
          << "\" height=\"" << fixed(bar_h, 1) << "\" fill=\"" << series_color(style, si)
          << "\"/>\n";
    }
    std::string label = axis.factor;
    for (const auto& v : axis.values) {
      if (!v) {
        label += " (n/a)";
        break;
      }
    }
    svg << "  <text class=\"axis-label\" x=\"" << fixed(group_x + group_w / 2, 1) << "\" y=\""
        << height - margin_bottom + 24 << "\" text-anchor=\"middle\" font-size=\"13\" "
        << "font-family=\"sans-serif\">" << xml_escape(label) << "</text>\n";
  }
  svg << "  <text class=\"scale\" x=\"" << margin_left - 8 << "\" y=\"" << margin_top + 4
      << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">"
      << fixed(vmax, 1) << " " << xml_escape(data.unit) << "</text>\n";
  svg << "  <line x1=\"" << margin_left << "\" y1=\"" << margin_top + plot_h << "\" x2=\""
      << width - 30 << "\" y2=\"" << margin_top + plot_h
      << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  for (size_t si = 0; si < n_series; ++si) {
    const int y = margin_top + static_cast<int>(si) * 20;
    svg << "  <rect x=\"" << width - 150 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
        << series_color(style, si) << "\"/>\n";
    svg << "  <text x=\"" << width - 132 << "\" y=\"" << y + 10
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << xml_escape(data.series[si])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

std::string render_radar(const RadarData& data, const RadarStyle& style) {
  if (data.axes.empty()) fail(ErrorCode::EmptyAxes, "radar needs at least one axis");
  if (data.axes.size() < 3) return render_bars(data, style);

  const int size = style.size;
  const double cx = size / 2.0;
  const double cy = size / 2.0 + 10.0;
  const double radius = size / 2.0 - 110.0;

  double vmax = 0.0;
  for (const auto& axis : data.axes) {
    for (const auto& v : axis.values) {
      if (v && *v > vmax) vmax = *v;
    }
  }
  const bool degenerate = vmax <= 0.0;
  if (degenerate) vmax = 1.0;

  const size_t n_axes = data.axes.size();
  const double two_pi = 6.283185307179586476925286766559;
  auto point = [&](size_t axis_index, double frac) {
    const double angle = -two_pi / 4.0 + two_pi * static_cast<double>(axis_index) /
                                             static_cast<double>(n_axes);
    return std::pair<double, double>{cx + radius * frac * std::cos(angle),
                                     cy + radius * frac * std::sin(angle)};
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
  if (!style.title.empty()) {
    svg << "  <text x=\"" << size / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"16\" "
        << "font-family=\"sans-serif\">" << xml_escape(style.title) << "</text>\n";
  }
  for (int ring = 1; ring <= 4; ++ring) {
    svg << "  <circle class=\"ring\" cx=\"" << fixed(cx, 1) << "\" cy=\"" << fixed(cy, 1)
        << "\" r=\"" << fixed(radius * ring / 4.0, 1)
        << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
  }
  // Radial scale: annotate the outer and middle rings with their values.
  auto ring_value = [&](double frac) {
    if (!style.log_scale) return vmax * frac;
    return std::pow(10.0, frac * std::log10(1.0 + vmax)) - 1.0;
  };
  svg << "  <text class=\"scale\" x=\"" << fixed(cx + 6, 1) << "\" y=\""
      << fixed(cy - radius - 4, 1) << "\" font-size=\"11\" font-family=\"sans-serif\" "
      << "fill=\"#666666\">" << (degenerate ? std::string("0.0") : fixed(ring_value(1.0), 1))
      << " " << xml_escape(data.unit) << (style.log_scale ? " (log)" : "") << "</text>\n";
  svg << "  <text class=\"scale\" x=\"" << fixed(cx + 6, 1) << "\" y=\""
      << fixed(cy - radius / 2.0 - 4, 1) << "\" font-size=\"11\" font-family=\"sans-serif\" "
      << "fill=\"#666666\">" << (degenerate ? std::string("0.0") : fixed(ring_value(0.5), 1))
      << "</text>\n";

  for (size_t ai = 0; ai < n_axes; ++ai) {
    const auto [x, y] = point(ai, 1.0);
    svg << "  <line class=\"axis\" x1=\"" << fixed(cx, 1) << "\" y1=\"" << fixed(cy, 1)
        << "\" x2=\"" << fixed(x, 1) << "\" y2=\"" << fixed(y, 1)
        << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    const auto [lx, ly] = point(ai, 1.13);
    std::string anchor = "middle";
    if (lx > cx + radius * 0.25) anchor = "start";
    if (lx < cx - radius * 0.25) anchor = "end";
    std::string label = data.axes[ai].factor;
    for (const auto& v : data.axes[ai].values) {
      if (!v) {
        label += " (n/a)";
        break;
      }
    }
    svg << "  <text class=\"axis-label\" x=\"" << fixed(lx, 1) << "\" y=\"" << fixed(ly + 4, 1)
        << "\" text-anchor=\"" << anchor << "\" font-size=\"13\" font-family=\"sans-serif\">"
        << xml_escape(label) << "</text>\n";
  }

  for (size_t si = 0; si < data.series.size(); ++si) {
    std::ostringstream points;
    for (size_t ai = 0; ai < n_axes; ++ai) {
      const double value = data.axes[ai].values[si] ? *data.axes[ai].values[si] : 0.0;
      const double frac = degenerate ? 0.0 : radial_fraction(value, vmax, style.log_scale);
      const auto [x, y] = point(ai, frac);
      if (ai > 0) points << " ";
      points << fixed(x, 1) << "," << fixed(y, 1);
    }
    const std::string color = series_color(style, si);
    svg << "  <polygon class=\"series\" points=\"" << points.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }

  for (size_t si = 0; si < data.series.size(); ++si) {
    const int y = 50 + static_cast<int>(si) * 20;
    svg << "  <rect x=\"20\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
        << series_color(style, si) << "\"/>\n";
    svg << "  <text x=\"38\" y=\"" << y + 10 << "\" font-size=\"12\" font-family=\"sans-serif\">"
        << xml_escape(data.series[si]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_heatmap(const JointGrid& grid, const std::string& model) {
  if (grid.n_rows() == 0 || grid.n_cols() == 0) fail(ErrorCode::EmptyGrid, "grid has no cells");
  const auto mit = std::find(grid.models.begin(), grid.models.end(), model);
  if (mit == grid.models.end()) fail(ErrorCode::UnknownModel, "model '" + model + "' not in grid");
  const size_t mi = static_cast<size_t>(mit - grid.models.begin());

  const int cell_w = 120;
  const int cell_h = 76;
  const int margin_left = 150;
  const int margin_top = 96;
  const int margin_bottom = 88;
  const int margin_right = 40;
  const int width = margin_left + cell_w * static_cast<int>(grid.n_cols()) + margin_right;
  const int height = margin_top + cell_h * static_cast<int>(grid.n_rows()) + margin_bottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& row : grid.cells) {
    for (const auto& cell : row) {
      if (cell.n == 0) continue;
      lo = std::min(lo, cell.mre_pct[mi]);
      hi = std::max(hi, cell.mre_pct[mi]);
    }
  }
  const bool has_values = std::isfinite(lo);
  auto normalized = [&](double v) {
    if (!has_values || hi == lo) return 0.5;
    return (v - lo) / (hi - lo);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <defs>\n"
      << "    <pattern id=\"hatch\" width=\"8\" height=\"8\" patternTransform=\"rotate(45)\" "
      << "patternUnits=\"userSpaceOnUse\">\n"
      << "      <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"#ffffff\" "
      << "stroke-width=\"2\" stroke-opacity=\"0.7\"/>\n"
      << "    </pattern>\n"
      << "  </defs>\n";
  svg << "  <text x=\"" << width / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"16\" "
      << "font-family=\"sans-serif\">" << xml_escape(grid.row_binning.factor) << " by "
      << xml_escape(grid.col_binning.factor) << ", " << xml_escape(model) << " MRE</text>\n";

  for (size_t c = 0; c < grid.n_cols(); ++c) {
    svg << "  <text class=\"col-label\" x=\""
        << margin_left + cell_w * static_cast<int>(c) + cell_w / 2 << "\" y=\"" << margin_top - 12
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
        << xml_escape(grid.col_binning.labels[c]) << "</text>\n";
  }
  for (size_t r = 0; r < grid.n_rows(); ++r) {
    svg << "  <text class=\"row-label\" x=\"" << margin_left - 10 << "\" y=\""
        << margin_top + cell_h * static_cast<int>(r) + cell_h / 2 + 4
        << "\" text-anchor=\"end\" font-size=\"13\" font-family=\"sans-serif\">"
        << xml_escape(grid.row_binning.labels[r]) << "</text>\n";
  }

  for (size_t r = 0; r < grid.n_rows(); ++r) {
    for (size_t c = 0; c < grid.n_cols(); ++c) {
      const JointCell& cell = grid.cells[r][c];
      const int x = margin_left + cell_w * static_cast<int>(c);
      const int y = margin_top + cell_h * static_cast<int>(r);
      const std::string fill =
          cell.n == 0 ? std::string("#ffffff") : ramp_color(normalized(cell.mre_pct[mi]));
      svg << "  <rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
          << "\" height=\"" << cell_h << "\" fill=\"" << fill
          << "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
      if (cell.low_support) {
        svg << "  <rect class=\"low-support\" x=\"" << x << "\" y=\"" << y << "\" width=\""
            << cell_w << "\" height=\"" << cell_h << "\" fill=\"url(#hatch)\"/>\n";
      }
      const double t = cell.n == 0 ? 0.0 : normalized(cell.mre_pct[mi]);
      const std::string text_color = t > 0.55 ? "#ffffff" : "#1a1a1a";
      const std::string mre_text =
          cell.n == 0 ? std::string("n/a") : fixed(cell.mre_pct[mi], 1) + "%";
      svg << "  <text class=\"cell-mre\" x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 - 4
          << "\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\" fill=\""
          << text_color << "\">" << mre_text << "</text>\n";
      svg << "  <text class=\"cell-n\" x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 16
          << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" fill=\""
          << text_color << "\">n=" << cell.n << "</text>\n";
    }
  }

  const int legend_y = height - margin_bottom + 34;
  const int legend_w = cell_w * static_cast<int>(grid.n_cols());
  const int steps = 48;
  for (int s = 0; s < steps; ++s) {
    svg << "  <rect class=\"legend-step\" x=\""
        << fixed(margin_left + legend_w * static_cast<double>(s) / steps, 1) << "\" y=\""
        << legend_y << "\" width=\"" << fixed(static_cast<double>(legend_w) / steps + 0.5, 1)
        << "\" height=\"10\" fill=\"" << ramp_color(static_cast<double>(s) / (steps - 1))
        << "\"/>\n";
  }
  svg << "  <text x=\"" << margin_left << "\" y=\"" << legend_y + 24
      << "\" font-size=\"11\" font-family=\"sans-serif\">"
      << (has_values ? fixed(lo, 1) + "%" : std::string("n/a")) << "</text>\n";
  svg << "  <text x=\"" << margin_left + legend_w << "\" y=\"" << legend_y + 24
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
      << (has_values ? fixed(hi, 1) + "%" : std::string("n/a")) << "</text>\n";
  if (grid.min_n > 0) {
    svg << "  <text x=\"" << margin_left << "\" y=\"" << legend_y - 10
        << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#666666\">hatched: n &lt; "
        << grid.min_n << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

RadarData slice_share_radar(const SliceProfile& best, const SliceProfile& worst) {
  if (best.factors.size() != worst.factors.size()) {
    fail(ErrorCode::BinningMismatch, "profiles cover different factor sets");
  }
  RadarData data;
  data.series = {"best slice", "worst slice"};
  data.unit = "share of top bin";
  for (size_t fi = 0; fi < best.factors.size(); ++fi) {
    const auto& a = best.factors[fi];
    const auto& b = worst.factors[fi];
    if (a.factor != b.factor || a.bins != b.bins) {
      fail(ErrorCode::BinningMismatch, "profiles disagree on factor '" + a.factor + "'");
    }
    RadarAxis axis;
    axis.factor = a.factor;
    if (a.bins.empty()) {
      axis.values = {std::nullopt, std::nullopt};
      axis.reason = "factor has no bins";
    } else {
      axis.values = {a.share_in_slice.back(), b.share_in_slice.back()};
    }
    data.axes.push_back(std::move(axis));
  }
  return data;
}

std::string emit_summary(const nlohmann::json& summary) { return summary.dump(2) + "\n"; }

}  // namespace biaslens
