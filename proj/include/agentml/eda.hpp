#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentml/table.hpp"

namespace agentml {

enum class CorrelationMethod { Pearson, Spearman };

struct EdaOptions {
  CorrelationMethod correlation_method = CorrelationMethod::Pearson;
  size_t sample_cap = kDefaultSampleCap;
  bool make_plots = true;
  std::optional<std::string> target_column;
};

struct NumericSummary {
  size_t count = 0;
  size_t missing = 0;
  double mean = 0, sd = 0, min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double skewness = 0, kurtosis = 0;
};

struct ColumnSummary {
  std::string name;
  ColumnKind kind;
  size_t count = 0;
  size_t missing = 0;
  size_t n_distinct = 0;
  std::optional<NumericSummary> numeric;
  // top-5 (value, count), count desc then value asc
  std::vector<std::pair<std::string, size_t>> top_values;
};

struct OutlierEntry {
  std::string column;
  size_t row_index;
  double value;
};

struct EdaReport {
  std::vector<ColumnSummary> columns;
  std::vector<OutlierEntry> outliers;
  std::vector<std::string> correlation_columns;
  std::vector<std::vector<std::optional<double>>> correlation;
  CorrelationMethod correlation_method = CorrelationMethod::Pearson;
  std::vector<std::string> notes;
  std::vector<std::string> artifacts;
};

// Writes summary_stats.csv, missing_report.csv, outliers.csv,
// correlations.csv and report.md into output_dir; SVG plots when requested.
EdaReport run_eda(const std::string& input_path, const std::string& output_dir,
                  const EdaOptions& options = {});

// Correlation over numeric columns of a table; pairwise-complete, diagonal 1,
// zero-variance columns yield missing entries.
std::pair<std::vector<std::string>,
          std::vector<std::vector<std::optional<double>>>>
correlation_matrix(const FeatureTable& table, CorrelationMethod method,
                   std::vector<std::string>* notes = nullptr);

}  // namespace agentml
