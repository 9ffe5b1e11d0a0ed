#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentml/csv.hpp"

namespace agentml {

enum class ColumnKind { Numeric, Categorical, Boolean, Text, Datetime };

std::string column_kind_name(ColumnKind k);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Text;
};

// In-memory tabular dataset. Cells are stored as raw strings with an explicit
// missing marker; numeric access parses on demand. Tables are treated as
// immutable after load: every transform returns a new table.
class FeatureTable {
 public:
  std::vector<Column> columns;
  // rows[r][c]: nullopt = missing
  std::vector<std::vector<std::optional<std::string>>> rows;
  std::optional<std::string> source_path;

  size_t n_rows() const { return rows.size(); }
  size_t n_cols() const { return columns.size(); }
  int column_index(const std::string& name) const;  // -1 when absent

  // Numeric view of one column: nullopt for missing or unparseable cells.
  std::vector<std::optional<double>> numeric_column(size_t col) const;
  // Boolean columns map {true,yes,1} -> 1, {false,no,0} -> 0.
  std::vector<std::optional<double>> boolean_column(size_t col) const;
};

struct CsvOptions {
  // nothing configurable yet; reserved for delimiter/locale knobs
};

bool is_missing_marker(const std::string& raw);
std::optional<double> parse_number(const std::string& raw);

FeatureTable read_table(const std::string& path, const CsvOptions& opts = {});
FeatureTable table_from_csv(const CsvDocument& doc,
                            const std::string& origin = "<memory>");
CsvDocument table_to_csv(const FeatureTable& table);
void write_table(const std::string& path, const FeatureTable& table);

enum class TaskType { Classification, Regression };

// Classification when the target is categorical/boolean, or numeric with at
// most 10 distinct values, all integral. Constant targets are rejected.
TaskType infer_task_type(const FeatureTable& table, const std::string& target);

struct ImputeStats {
  // per column: fill value (numeric columns hold the formatted median)
  std::map<std::string, std::string> fill;
  std::vector<std::string> dropped_columns;  // all-missing
  std::vector<std::string> warnings;
};

ImputeStats fit_impute(const FeatureTable& table);
FeatureTable apply_impute(const FeatureTable& table, const ImputeStats& stats);
FeatureTable impute(const FeatureTable& table, std::vector<std::string>* warnings = nullptr);

enum class EncodingAction { Passthrough, OneHot, Ordinal, Drop };

struct ColumnEncoding {
  EncodingAction action = EncodingAction::Drop;
  // OneHot: sorted categories; Ordinal: sorted categories (index = code).
  std::vector<std::string> categories;
};

struct EncodingPlan {
  // per source column, in table column order (target excluded)
  std::vector<std::pair<std::string, ColumnEncoding>> columns;
  size_t width() const;
  std::vector<std::string> feature_names() const;
};

struct EncodedMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // n_rows x width
  int unseen_category_warnings = 0;
};

EncodingPlan fit_encoding(const FeatureTable& table, const std::string& target,
                          size_t cardinality_threshold = 15);
EncodedMatrix apply_encoding(const FeatureTable& table,
                             const EncodingPlan& plan);

// Uniform sample without replacement preserving row order; identity when the
// table fits the cap.
FeatureTable sample_rows(const FeatureTable& table, size_t cap, uint64_t seed);

constexpr size_t kDefaultSampleCap = 50000;

}  // namespace agentml
