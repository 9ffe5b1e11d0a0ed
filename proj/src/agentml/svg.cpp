#include "agentml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agentml/util.hpp"

namespace agentml {

namespace {

constexpr double kW = 640.0;
constexpr double kH = 480.0;
constexpr double kMargin = 60.0;

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                          "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
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

std::string num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

struct Doc {
  std::ostringstream ss;
  Doc(double w = kW, double h = kH) {
    ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
       << format_double(w) << "\" height=\"" << format_double(h)
       << "\" viewBox=\"0 0 " << format_double(w) << " " << format_double(h)
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void title(const std::string& t) {
    ss << "<text x=\"" << num(kW / 2)
       << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
          "text-anchor=\"middle\">"
       << esc(t) << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    ss << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
       << num(w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
       << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke = "#333") {
    ss << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
       << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
       << "\" stroke-width=\"1\"/>\n";
  }
  void text(double x, double y, const std::string& t, int size = 11,
            const std::string& anchor = "middle") {
    ss << "<text x=\"" << num(x) << "\" y=\"" << num(y)
       << "\" font-family=\"sans-serif\" font-size=\"" << size
       << "\" text-anchor=\"" << anchor << "\">" << esc(t) << "</text>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    ss << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\""
       << num(r) << "\" fill=\"" << fill << "\"/>\n";
  }
  std::string finish() {
    ss << "</svg>\n";
    return ss.str();
  }
};

void axes(Doc& d) {
  d.line(kMargin, kH - kMargin, kW - kMargin / 2, kH - kMargin);
  d.line(kMargin, kMargin / 2 + 20, kMargin, kH - kMargin);
}

}  // namespace

size_t default_histogram_bins(size_t n) {
  if (n == 0) return 1;
  size_t root = static_cast<size_t>(
      std::ceil(std::sqrt(static_cast<double>(n))));
  return std::min<size_t>(30, std::max<size_t>(1, root));
}

std::string svg_histogram(const std::string& title,
                          const std::vector<double>& values, size_t bins) {
  Doc d;
  d.title(title);
  axes(d);
  if (!values.empty()) {
    if (bins == 0) bins = default_histogram_bins(values.size());
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    double width = hi > lo ? (hi - lo) : 1.0;
    std::vector<size_t> counts(bins, 0);
    for (double v : values) {
      size_t b = static_cast<size_t>((v - lo) / width * static_cast<double>(bins));
      if (b >= bins) b = bins - 1;
      ++counts[b];
    }
    size_t max_count = *std::max_element(counts.begin(), counts.end());
    double plot_w = kW - kMargin * 1.5;
    double plot_h = kH - kMargin * 1.5 - 20;
    double bar_w = plot_w / static_cast<double>(bins);
    for (size_t b = 0; b < bins; ++b) {
      double h = max_count
                     ? plot_h * static_cast<double>(counts[b]) /
                           static_cast<double>(max_count)
                     : 0.0;
      d.rect(kMargin + bar_w * static_cast<double>(b), kH - kMargin - h, bar_w,
             h, kPalette[0]);
    }
    d.text(kMargin, kH - kMargin + 16, format_double(lo), 10, "start");
    d.text(kW - kMargin / 2, kH - kMargin + 16, format_double(hi), 10, "end");
  }
  return d.finish();
}

std::string svg_box(const std::string& title,
                    const std::vector<double>& values) {
  Doc d;
  d.title(title);
  axes(d);
  if (!values.empty()) {
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front(), hi = sorted.back();
    double span = hi > lo ? hi - lo : 1.0;
    auto x_of = [&](double v) {
      return kMargin + (v - lo) / span * (kW - kMargin * 1.5);
    };
    double q1 = sorted[(sorted.size() - 1) / 4];
    double q3 = sorted[(sorted.size() - 1) * 3 / 4];
    double med = sorted[(sorted.size() - 1) / 2];
    double cy = kH / 2;
    d.line(x_of(lo), cy, x_of(q1), cy);
    d.line(x_of(q3), cy, x_of(hi), cy);
    d.rect(x_of(q1), cy - 40, std::max(1.0, x_of(q3) - x_of(q1)), 80,
           "#cfe0f0");
    d.line(x_of(med), cy - 40, x_of(med), cy + 40, "#c44e52");
    d.text(kMargin, kH - kMargin + 16, format_double(lo), 10, "start");
    d.text(kW - kMargin / 2, kH - kMargin + 16, format_double(hi), 10, "end");
  }
  return d.finish();
}

std::string svg_bar(const std::string& title,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& heights) {
  Doc d;
  d.title(title);
  axes(d);
  if (!heights.empty()) {
    double max_h = *std::max_element(heights.begin(), heights.end());
    double plot_w = kW - kMargin * 1.5;
    double plot_h = kH - kMargin * 1.5 - 20;
    double slot = plot_w / static_cast<double>(heights.size());
    for (size_t i = 0; i < heights.size(); ++i) {
      double h = max_h > 0 ? plot_h * heights[i] / max_h : 0.0;
      double x = kMargin + slot * static_cast<double>(i) + slot * 0.1;
      d.rect(x, kH - kMargin - h, slot * 0.8, h,
             kPalette[i % 8]);
      if (i < labels.size()) {
        d.text(x + slot * 0.4, kH - kMargin + 16, labels[i], 9);
      }
    }
  }
  return d.finish();
}

std::string svg_pie(const std::string& title,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& weights) {
  Doc d;
  d.title(title);
  double total = 0.0;
  for (double w : weights) total += w;
  double cx = kW / 2, cy = kH / 2 + 10, r = 150.0;
  if (total > 0) {
    double angle = -M_PI / 2;  // start at 12 o'clock
    for (size_t i = 0; i < weights.size(); ++i) {
      double frac = weights[i] / total;
      double next = angle + frac * 2.0 * M_PI;
      double x1 = cx + r * std::cos(angle), y1 = cy + r * std::sin(angle);
      double x2 = cx + r * std::cos(next), y2 = cy + r * std::sin(next);
      int large = frac > 0.5 ? 1 : 0;
      if (frac >= 1.0 - 1e-12) {
        d.circle(cx, cy, r, kPalette[i % 8]);
      } else {
        d.ss << "<path d=\"M " << num(cx) << " " << num(cy) << " L " << num(x1)
             << " " << num(y1) << " A " << num(r) << " " << num(r) << " 0 "
             << large << " 1 " << num(x2) << " " << num(y2)
             << " Z\" fill=\"" << kPalette[i % 8]
             << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
      }
      double mid = (angle + next) / 2;
      if (i < labels.size()) {
        d.text(cx + (r + 24) * std::cos(mid), cy + (r + 24) * std::sin(mid),
               labels[i], 10);
      }
      angle = next;
    }
  }
  return d.finish();
}

std::string svg_heatmap(
    const std::string& title, const std::vector<std::string>& names,
    const std::vector<std::vector<std::optional<double>>>& m) {
  Doc d;
  d.title(title);
  size_t n = m.size();
  if (n > 0) {
    double plot = std::min(kW, kH) - kMargin * 2;
    double cell = plot / static_cast<double>(n);
    double x0 = kMargin + 40, y0 = kMargin;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < m[i].size(); ++j) {
        std::string fill = "#eeeeee";
        if (m[i][j]) {
          double v = std::clamp(*m[i][j], -1.0, 1.0);
          // blue (-1) .. white (0) .. red (+1)
          int rch = static_cast<int>(std::round(255 * (v > 0 ? 1.0 : 1.0 + v)));
          int bch = static_cast<int>(std::round(255 * (v < 0 ? 1.0 : 1.0 - v)));
          int gch = static_cast<int>(std::round(255 * (1.0 - std::abs(v))));
          char buf[8];
          std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rch, gch, bch);
          fill = buf;
        }
        d.rect(x0 + cell * static_cast<double>(j),
               y0 + cell * static_cast<double>(i), cell, cell, fill);
      }
      if (i < names.size()) {
        d.text(x0 - 4, y0 + cell * static_cast<double>(i) + cell / 2 + 4,
               names[i], 9, "end");
      }
    }
  }
  return d.finish();
}

std::string svg_line(const std::string& title, const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  Doc d;
  d.title(title);
  axes(d);
  size_t n = std::min(xs.size(), ys.size());
  if (n >= 2) {
    double xlo = *std::min_element(xs.begin(), xs.begin() + n);
    double xhi = *std::max_element(xs.begin(), xs.begin() + n);
    double ylo = *std::min_element(ys.begin(), ys.begin() + n);
    double yhi = *std::max_element(ys.begin(), ys.begin() + n);
    double xs_span = xhi > xlo ? xhi - xlo : 1.0;
    double ys_span = yhi > ylo ? yhi - ylo : 1.0;
    std::ostringstream pts;
    for (size_t i = 0; i < n; ++i) {
      double px = kMargin + (xs[i] - xlo) / xs_span * (kW - kMargin * 1.5);
      double py = kH - kMargin - (ys[i] - ylo) / ys_span * (kH - kMargin * 2);
      if (i) pts << " ";
      pts << num(px) << "," << num(py);
    }
    d.ss << "<polyline points=\"" << pts.str()
         << "\" fill=\"none\" stroke=\"" << kPalette[0]
         << "\" stroke-width=\"1.5\"/>\n";
  }
  return d.finish();
}

std::string svg_scatter(const std::string& title, const std::vector<double>& xs,
                        const std::vector<double>& ys,
                        const std::vector<int>& color_class) {
  Doc d;
  d.title(title);
  axes(d);
  size_t n = std::min(xs.size(), ys.size());
  if (n > 0) {
    double xlo = *std::min_element(xs.begin(), xs.begin() + n);
    double xhi = *std::max_element(xs.begin(), xs.begin() + n);
    double ylo = *std::min_element(ys.begin(), ys.begin() + n);
    double yhi = *std::max_element(ys.begin(), ys.begin() + n);
    double xs_span = xhi > xlo ? xhi - xlo : 1.0;
    double ys_span = yhi > ylo ? yhi - ylo : 1.0;
    for (size_t i = 0; i < n; ++i) {
      double px = kMargin + (xs[i] - xlo) / xs_span * (kW - kMargin * 1.5);
      double py = kH - kMargin - (ys[i] - ylo) / ys_span * (kH - kMargin * 2);
      int cls = i < color_class.size() ? color_class[i] : 0;
      d.circle(px, py, 3, kPalette[((cls % 8) + 8) % 8]);
    }
  }
  return d.finish();
}

std::string svg_scatter_grid(const std::vector<std::string>& names,
                             const std::vector<std::vector<double>>& columns) {
  size_t k = columns.size();
  Doc d(kW, kW);
  d.title("pairplot");
  if (k > 0) {
    double cell = (kW - kMargin) / static_cast<double>(k);
    for (size_t i = 0; i < k; ++i) {
      for (size_t j = 0; j < k; ++j) {
        double x0 = kMargin / 2 + cell * static_cast<double>(j);
        double y0 = 40 + cell * static_cast<double>(i);
        d.rect(x0, y0, cell, cell, "white");
        const auto& xv = columns[j];
        const auto& yv = columns[i];
        size_t n = std::min(xv.size(), yv.size());
        if (n == 0) continue;
        double xlo = *std::min_element(xv.begin(), xv.end());
        double xhi = *std::max_element(xv.begin(), xv.end());
        double ylo = *std::min_element(yv.begin(), yv.end());
        double yhi = *std::max_element(yv.begin(), yv.end());
        double sx = xhi > xlo ? xhi - xlo : 1.0;
        double sy = yhi > ylo ? yhi - ylo : 1.0;
        for (size_t r = 0; r < n; ++r) {
          d.circle(x0 + (xv[r] - xlo) / sx * cell,
                   y0 + cell - (yv[r] - ylo) / sy * cell, 1.2, kPalette[0]);
        }
        if (i == 0 && j < names.size()) {
          d.text(x0 + cell / 2, 36, names[j], 8);
        }
      }
    }
  }
  return d.finish();
}

}  // namespace agentml
