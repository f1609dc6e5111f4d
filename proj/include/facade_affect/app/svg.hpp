#pragma once

// Small deterministic SVG plotting: scatter plots with fitted curves and
// grouped horizontal bar charts. Coordinates are printed with fixed precision
// so the same data always yields the same bytes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace facade_affect::app::svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range of(const std::vector<double>& v, double pad = 0.05) {
    if (v.empty()) return {};
    auto [a, b] = std::minmax_element(v.begin(), v.end());
    double lo = *a, hi = *b;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double d = (hi - lo) * pad;
    return {lo - d, hi + d};
  }
};

struct Point {
  double x, y;
  double radius = 3.0;
  std::string colour = "#4c72b0";
};

struct Curve {
  std::function<double(double)> f;
  std::string colour = "#c44e52";
  bool dashed = false;
  std::string label;
};

class Document {
public:
  Document(int width, int height) : width_(width), height_(height) {}

  void add(std::string element) { body_ += element + "\n"; }

  void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "middle",
            double rotate = 0.0) {
    std::string transform = rotate != 0.0 ? fmt::format(" transform=\"rotate({:.0f} {:.2f} {:.2f})\"", rotate, x, y) : "";
    add(fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"{}\" text-anchor=\"{}\"{}>{}</text>", x, y, size,
                    anchor, transform, escape(s)));
  }

  void line(double x1, double y1, double x2, double y2, std::string_view colour, double width = 1.0,
            bool dashed = false) {
    add(fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"{:.1f}\"{}/>",
                    x1, y1, x2, y2, colour, width, dashed ? " stroke-dasharray=\"5,4\"" : ""));
  }

  std::string str() const {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n{2}</svg>\n",
        width_, height_, body_);
  }

  int width() const { return width_; }
  int height() const { return height_; }

private:
  int width_, height_;
  std::string body_;
};

struct ScatterSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Point> points;
  std::vector<Curve> curves;
  std::vector<std::pair<std::string, std::string>> legend;  // (colour, label)
  std::vector<std::string> notes;                           // printed top-left inside the frame
  std::optional<Range> x_range, y_range;
  std::optional<double> x_split, y_split;                   // reference lines, e.g. grand means
};

inline std::string scatter(const ScatterSpec& s) {
  constexpr int W = 520, H = 420, L = 64, R = 20, T = 40, B = 56;
  Document doc(W, H);
  std::vector<double> xs, ys;
  for (const auto& p : s.points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  const Range xr = s.x_range.value_or(Range::of(xs)), yr = s.y_range.value_or(Range::of(ys));
  auto px = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - yr.lo) / (yr.hi - yr.lo) * (H - T - B); };

  doc.add(fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>", L, T,
                      W - L - R, H - T - B));
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0, fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    doc.text(px(fx), H - B + 16, fmt::format("{:.2f}", fx), 10);
    doc.text(L - 6, py(fy) + 3, fmt::format("{:.2f}", fy), 10, "end");
  }
  doc.text(W / 2.0, 22, s.title, 14);
  doc.text((L + W - R) / 2.0, H - 16, s.x_label);
  doc.text(18, (T + H - B) / 2.0, s.y_label, 12, "middle", -90);
  if (s.x_split) doc.line(px(*s.x_split), T, px(*s.x_split), H - B, "#999", 1.0, true);
  if (s.y_split) doc.line(L, py(*s.y_split), W - R, py(*s.y_split), "#999", 1.0, true);

  for (const auto& p : s.points)
    doc.add(fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{:.2f}\" fill=\"{}\" fill-opacity=\"0.7\"/>", px(p.x),
                        py(p.y), p.radius, p.colour));

  constexpr int kSteps = 60;
  for (const auto& c : s.curves) {
    std::string pts;
    for (int i = 0; i <= kSteps; ++i) {
      const double x = xr.lo + (xr.hi - xr.lo) * i / kSteps;
      const double y = std::clamp(c.f(x), yr.lo, yr.hi);
      pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(x), py(y));
    }
    doc.add(fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{}/>", pts, c.colour,
                        c.dashed ? " stroke-dasharray=\"6,4\"" : ""));
  }

  double ly = T + 14;
  for (const auto& n : s.notes) {
    doc.text(L + 8, ly, n, 11, "start");
    ly += 14;
  }
  for (const auto& [colour, label] : s.legend) {
    doc.add(fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>", L + 8.0, ly - 9,
                        colour));
    doc.text(L + 22, ly, label, 11, "start");
    ly += 14;
  }
  return doc.str();
}

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;  // half-width of the interval, 0 for none
  std::string colour = "#4c72b0";
};

// Horizontal bars around a zero line.
inline std::string bar_chart(std::string_view title, std::string_view value_label, const std::vector<Bar>& bars) {
  constexpr int W = 560, L = 200, R = 30, T = 40, B = 50, row = 24;
  const int H = T + B + row * static_cast<int>(std::max<std::size_t>(bars.size(), 1));
  Document doc(W, H);
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value - b.error);
    hi = std::max(hi, b.value + b.error);
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = (hi - lo) * 0.05;
  lo -= pad;
  hi += pad;
  auto px = [&](double v) { return L + (v - lo) / (hi - lo) * (W - L - R); };

  doc.text(W / 2.0, 22, title, 14);
  doc.line(px(0), T - 4, px(0), H - B + 4, "#333");
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = T + row * static_cast<double>(i);
    const double x0 = std::min(px(0), px(b.value)), x1 = std::max(px(0), px(b.value));
    doc.add(fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{}\" fill=\"{}\"/>", x0, y + 4,
                        x1 - x0, row - 8, b.colour));
    if (b.error > 0) doc.line(px(b.value - b.error), y + row / 2.0, px(b.value + b.error), y + row / 2.0, "#222", 1.2);
    doc.text(L - 8, y + row / 2.0 + 4, b.label, 11, "end");
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    doc.text(px(v), H - B + 16, fmt::format("{:.2f}", v), 10);
  }
  doc.text((L + W - R) / 2.0, H - 14, value_label);
  return doc.str();
}

}  // namespace facade_affect::app::svg
