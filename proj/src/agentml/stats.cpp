#include "agentml/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace agentml {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  size_t n = v.size();
  if (n < 2) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double population_variance(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size());
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::runtime_error("quantile of empty input");
  if (p < 0.0 || p > 1.0) throw std::runtime_error("quantile p outside [0,1]");
  double h = static_cast<double>(sorted.size() - 1) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = static_cast<size_t>(std::ceil(h));
  if (lo == hi) return sorted[lo];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

double adjusted_skewness(const std::vector<double>& v) {
  size_t n = v.size();
  if (n < 3) return 0.0;
  double m = mean_of(v);
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  if (m2 <= 0.0) return 0.0;
  double g1 = m3 / std::pow(m2, 1.5);
  double nd = static_cast<double>(n);
  return std::sqrt(nd * (nd - 1.0)) / (nd - 2.0) * g1;
}

double adjusted_excess_kurtosis(const std::vector<double>& v) {
  size_t n = v.size();
  if (n < 4) return 0.0;
  double m = mean_of(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 <= 0.0) return 0.0;
  double g2 = m4 / (m2 * m2) - 3.0;
  double nd = static_cast<double>(n);
  return ((nd - 1.0) / ((nd - 2.0) * (nd - 3.0))) * ((nd + 1.0) * g2 + 6.0);
}

std::vector<size_t> iqr_outliers(
    const std::vector<std::optional<double>>& values) {
  std::vector<double> present;
  for (const auto& v : values) {
    if (v) present.push_back(*v);
  }
  if (present.size() < 4) return {};
  std::sort(present.begin(), present.end());
  double q1 = quantile_sorted(present, 0.25);
  double q3 = quantile_sorted(present, 0.75);
  double iqr = q3 - q1;
  double lo = q1 - 1.5 * iqr;
  double hi = q3 + 1.5 * iqr;
  std::vector<size_t> out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] && (*values[i] < lo || *values[i] > hi)) out.push_back(i);
  }
  return out;
}

namespace {

struct Pairs {
  std::vector<double> x, y;
};

Pairs complete_pairs(const std::vector<std::optional<double>>& x,
                     const std::vector<std::optional<double>>& y) {
  Pairs p;
  size_t n = std::min(x.size(), y.size());
  for (size_t i = 0; i < n; ++i) {
    if (x[i] && y[i]) {
      p.x.push_back(*x[i]);
      p.y.push_back(*y[i]);
    }
  }
  return p;
}

std::optional<double> pearson_vec(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> pearson(const std::vector<std::optional<double>>& x,
                              const std::vector<std::optional<double>>& y) {
  Pairs p = complete_pairs(x, y);
  return pearson_vec(p.x, p.y);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<std::optional<double>>& x,
                               const std::vector<std::optional<double>>& y) {
  Pairs p = complete_pairs(x, y);
  if (p.x.size() < 2) return std::nullopt;
  return pearson_vec(average_ranks(p.x), average_ranks(p.y));
}

}  // namespace agentml
