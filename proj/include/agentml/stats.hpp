#pragma once

#include <optional>
#include <string>
#include <vector>

namespace agentml {

double mean_of(const std::vector<double>& v);
// sample standard deviation (n-1); 0 for n < 2
double sample_sd(const std::vector<double>& v);
double population_variance(const std::vector<double>& v);

// Linear interpolation at rank h = (n-1)*p. Input must be sorted, non-empty.
double quantile_sorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> values, double p);

// Adjusted Fisher-Pearson (bias-corrected) estimators; kurtosis is excess.
// 0 for degenerate inputs (n too small or zero variance).
double adjusted_skewness(const std::vector<double>& v);
double adjusted_excess_kurtosis(const std::vector<double>& v);

// Indices with value outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; empty when fewer
// than 4 values present. `values` may contain missing entries, which are
// never flagged; returned indices refer to the input vector.
std::vector<size_t> iqr_outliers(const std::vector<std::optional<double>>& values);

// Pairwise-complete correlation of two columns; nullopt when fewer than 2
// complete pairs or either side has zero variance.
std::optional<double> pearson(const std::vector<std::optional<double>>& x,
                              const std::vector<std::optional<double>>& y);
std::optional<double> spearman(const std::vector<std::optional<double>>& x,
                               const std::vector<std::optional<double>>& y);

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace agentml
