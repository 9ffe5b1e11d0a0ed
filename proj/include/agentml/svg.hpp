#pragma once

#include <optional>
#include <string>
#include <vector>

namespace agentml {

// Minimal deterministic SVG 1.1 plot rendering. Every function is a pure
// function of its inputs; numbers are formatted with format_double so the
// bytes are stable across runs and platforms.

size_t default_histogram_bins(size_t n);  // min(30, ceil(sqrt(n)))

std::string svg_histogram(const std::string& title,
                          const std::vector<double>& values,
                          size_t bins = 0 /* 0 = default rule */);
std::string svg_box(const std::string& title, const std::vector<double>& values);
std::string svg_bar(const std::string& title,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& heights);
std::string svg_pie(const std::string& title,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& weights);
std::string svg_heatmap(const std::string& title,
                        const std::vector<std::string>& names,
                        const std::vector<std::vector<std::optional<double>>>& m);
std::string svg_line(const std::string& title, const std::vector<double>& xs,
                     const std::vector<double>& ys);
std::string svg_scatter(const std::string& title, const std::vector<double>& xs,
                        const std::vector<double>& ys,
                        const std::vector<int>& color_class);
// Pairwise scatter grid of up to 8 numeric columns.
std::string svg_scatter_grid(const std::vector<std::string>& names,
                             const std::vector<std::vector<double>>& columns);

}  // namespace agentml
