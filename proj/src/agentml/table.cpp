#include "agentml/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "agentml/util.hpp"

namespace agentml {

std::string column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Boolean: return "boolean";
    case ColumnKind::Text: return "text";
    case ColumnKind::Datetime: return "datetime";
  }
  return "unknown";
}

int FeatureTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::optional<double>> FeatureTable::numeric_column(
    size_t col) const {
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row[col]) {
      out.push_back(std::nullopt);
    } else {
      out.push_back(parse_number(*row[col]));
    }
  }
  return out;
}

std::vector<std::optional<double>> FeatureTable::boolean_column(
    size_t col) const {
  std::vector<std::optional<double>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row[col]) {
      out.push_back(std::nullopt);
      continue;
    }
    std::string v = to_lower(trim(*row[col]));
    if (v == "true" || v == "yes" || v == "1") {
      out.push_back(1.0);
    } else if (v == "false" || v == "no" || v == "0") {
      out.push_back(0.0);
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

bool is_missing_marker(const std::string& raw) {
  std::string v = to_lower(trim(raw));
  return v.empty() || v == "na" || v == "nan" || v == "null";
}

std::optional<double> parse_number(const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  double value = 0;
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
  return value;
}

namespace {

bool is_bool_token(const std::string& v) {
  std::string t = to_lower(v);
  return t == "true" || t == "false" || t == "0" || t == "1" || t == "yes" ||
         t == "no";
}

bool digits(std::string_view s, size_t from, size_t n) {
  if (from + n > s.size()) return false;
  for (size_t i = from; i < from + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

// ISO-8601 date or date-time: YYYY-MM-DD[Thh:mm[:ss]]
bool is_iso_datetime(const std::string& raw) {
  std::string s = trim(raw);
  if (s.size() < 10) return false;
  if (!digits(s, 0, 4) || s[4] != '-' || !digits(s, 5, 2) || s[7] != '-' ||
      !digits(s, 8, 2)) {
    return false;
  }
  if (s.size() == 10) return true;
  if (s[10] != 'T' && s[10] != ' ') return false;
  if (s.size() < 16 || !digits(s, 11, 2) || s[13] != ':' || !digits(s, 14, 2)) {
    return false;
  }
  if (s.size() == 16) return true;
  if (s.size() >= 19 && s[16] == ':' && digits(s, 17, 2)) return true;
  return false;
}

ColumnKind infer_kind(const std::vector<std::optional<std::string>>& cells,
                      size_t n_rows) {
  std::set<std::string> distinct;
  size_t present = 0;
  bool all_bool = true, all_num = true, all_dt = true;
  for (const auto& cell : cells) {
    if (!cell) continue;
    ++present;
    const std::string& v = *cell;
    distinct.insert(v);
    if (all_bool && !is_bool_token(v)) all_bool = false;
    if (all_num && !parse_number(v)) all_num = false;
    if (all_dt && !is_iso_datetime(v)) all_dt = false;
  }
  if (present == 0) return ColumnKind::Text;
  if (all_bool && distinct.size() <= 2) return ColumnKind::Boolean;
  if (all_num) return ColumnKind::Numeric;
  if (all_dt) return ColumnKind::Datetime;
  size_t cat_limit = std::max<size_t>(30, n_rows / 20);
  if (distinct.size() <= cat_limit) return ColumnKind::Categorical;
  return ColumnKind::Text;
}

}  // namespace

FeatureTable table_from_csv(const CsvDocument& doc, const std::string& origin) {
  (void)origin;
  FeatureTable t;
  t.columns.reserve(doc.header.size());
  for (const auto& h : doc.header) t.columns.push_back({h, ColumnKind::Text});
  t.rows.reserve(doc.rows.size());
  for (const auto& row : doc.rows) {
    std::vector<std::optional<std::string>> out;
    out.reserve(row.size());
    for (const auto& cell : row) {
      if (is_missing_marker(cell)) {
        out.push_back(std::nullopt);
      } else {
        out.push_back(cell);
      }
    }
    t.rows.push_back(std::move(out));
  }
  for (size_t c = 0; c < t.n_cols(); ++c) {
    std::vector<std::optional<std::string>> cells;
    cells.reserve(t.n_rows());
    for (const auto& row : t.rows) cells.push_back(row[c]);
    t.columns[c].kind = infer_kind(cells, t.n_rows());
  }
  return t;
}

FeatureTable read_table(const std::string& path, const CsvOptions&) {
  FeatureTable t = table_from_csv(read_csv_file(path), path);
  t.source_path = path;
  return t;
}

CsvDocument table_to_csv(const FeatureTable& table) {
  CsvDocument doc;
  for (const auto& col : table.columns) doc.header.push_back(col.name);
  for (const auto& row : table.rows) {
    std::vector<std::string> out;
    out.reserve(row.size());
    for (const auto& cell : row) out.push_back(cell ? *cell : "");
    doc.rows.push_back(std::move(out));
  }
  return doc;
}

void write_table(const std::string& path, const FeatureTable& table) {
  write_csv_file(path, table_to_csv(table));
}

TaskType infer_task_type(const FeatureTable& table, const std::string& target) {
  int c = table.column_index(target);
  if (c < 0) throw std::runtime_error("target column not found: " + target);
  std::set<std::string> distinct;
  for (const auto& row : table.rows) {
    if (row[c]) distinct.insert(*row[c]);
  }
  if (distinct.size() <= 1) {
    throw std::runtime_error("constant target: " + target);
  }
  ColumnKind kind = table.columns[c].kind;
  if (kind == ColumnKind::Categorical || kind == ColumnKind::Boolean ||
      kind == ColumnKind::Text || kind == ColumnKind::Datetime) {
    return TaskType::Classification;
  }
  if (distinct.size() <= 10) {
    bool all_integral = true;
    for (const auto& v : distinct) {
      auto num = parse_number(v);
      if (!num || *num != std::floor(*num)) {
        all_integral = false;
        break;
      }
    }
    if (all_integral) return TaskType::Classification;
  }
  return TaskType::Regression;
}

namespace {

// Arithmetic mean of the two middles for even counts.
double numeric_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::string mode_value(const std::vector<std::optional<std::string>>& cells) {
  std::map<std::string, size_t> counts;
  for (const auto& c : cells) {
    if (c) ++counts[*c];
  }
  std::string best;
  size_t best_count = 0;
  for (const auto& [value, count] : counts) {
    if (count > best_count) {  // map iteration is sorted: ties keep smallest
      best = value;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

ImputeStats fit_impute(const FeatureTable& table) {
  ImputeStats stats;
  for (size_t c = 0; c < table.n_cols(); ++c) {
    const auto& col = table.columns[c];
    size_t present = 0;
    for (const auto& row : table.rows) {
      if (row[c]) ++present;
    }
    if (present == 0) {
      stats.dropped_columns.push_back(col.name);
      stats.warnings.push_back("column \"" + col.name +
                               "\" is entirely missing and was dropped");
      continue;
    }
    if (col.kind == ColumnKind::Numeric) {
      std::vector<double> vals;
      for (const auto& v : table.numeric_column(c)) {
        if (v) vals.push_back(*v);
      }
      stats.fill[col.name] = format_double(numeric_median(vals));
    } else {
      std::vector<std::optional<std::string>> cells;
      for (const auto& row : table.rows) cells.push_back(row[c]);
      stats.fill[col.name] = mode_value(cells);
    }
  }
  return stats;
}

FeatureTable apply_impute(const FeatureTable& table, const ImputeStats& stats) {
  FeatureTable out;
  out.source_path = table.source_path;
  std::vector<size_t> keep;
  for (size_t c = 0; c < table.n_cols(); ++c) {
    const std::string& name = table.columns[c].name;
    if (std::find(stats.dropped_columns.begin(), stats.dropped_columns.end(),
                  name) != stats.dropped_columns.end()) {
      continue;
    }
    keep.push_back(c);
    out.columns.push_back(table.columns[c]);
  }
  out.rows.reserve(table.n_rows());
  for (const auto& row : table.rows) {
    std::vector<std::optional<std::string>> new_row;
    new_row.reserve(keep.size());
    for (size_t i = 0; i < keep.size(); ++i) {
      size_t c = keep[i];
      if (row[c]) {
        new_row.push_back(row[c]);
      } else {
        auto it = stats.fill.find(table.columns[c].name);
        new_row.push_back(it != stats.fill.end() ? std::optional(it->second)
                                                 : std::nullopt);
      }
    }
    out.rows.push_back(std::move(new_row));
  }
  return out;
}

FeatureTable impute(const FeatureTable& table,
                    std::vector<std::string>* warnings) {
  ImputeStats stats = fit_impute(table);
  if (warnings) {
    warnings->insert(warnings->end(), stats.warnings.begin(),
                     stats.warnings.end());
  }
  return apply_impute(table, stats);
}

size_t EncodingPlan::width() const {
  size_t w = 0;
  for (const auto& [name, enc] : columns) {
    switch (enc.action) {
      case EncodingAction::Passthrough:
      case EncodingAction::Ordinal:
        w += 1;
        break;
      case EncodingAction::OneHot:
        w += enc.categories.size();
        break;
      case EncodingAction::Drop:
        break;
    }
  }
  return w;
}

std::vector<std::string> EncodingPlan::feature_names() const {
  std::vector<std::string> names;
  for (const auto& [name, enc] : columns) {
    switch (enc.action) {
      case EncodingAction::Passthrough:
      case EncodingAction::Ordinal:
        names.push_back(name);
        break;
      case EncodingAction::OneHot:
        for (const auto& cat : enc.categories) {
          names.push_back(name + "=" + cat);
        }
        break;
      case EncodingAction::Drop:
        break;
    }
  }
  return names;
}

EncodingPlan fit_encoding(const FeatureTable& table, const std::string& target,
                          size_t cardinality_threshold) {
  EncodingPlan plan;
  for (size_t c = 0; c < table.n_cols(); ++c) {
    const auto& col = table.columns[c];
    if (col.name == target) continue;
    ColumnEncoding enc;
    switch (col.kind) {
      case ColumnKind::Numeric:
      case ColumnKind::Boolean:
        enc.action = EncodingAction::Passthrough;
        break;
      case ColumnKind::Categorical: {
        std::set<std::string> cats;
        for (const auto& row : table.rows) {
          if (row[c]) cats.insert(*row[c]);
        }
        enc.categories.assign(cats.begin(), cats.end());
        enc.action = cats.size() < cardinality_threshold
                         ? EncodingAction::OneHot
                         : EncodingAction::Ordinal;
        break;
      }
      case ColumnKind::Text:
      case ColumnKind::Datetime:
        enc.action = EncodingAction::Drop;
        break;
    }
    plan.columns.emplace_back(col.name, std::move(enc));
  }
  return plan;
}

EncodedMatrix apply_encoding(const FeatureTable& table,
                             const EncodingPlan& plan) {
  EncodedMatrix out;
  out.names = plan.feature_names();
  out.values.assign(table.n_rows(), std::vector<double>(plan.width(), 0.0));
  size_t offset = 0;
  for (const auto& [name, enc] : plan.columns) {
    if (enc.action == EncodingAction::Drop) continue;
    int c = table.column_index(name);
    if (c < 0) {
      throw std::runtime_error("encoding plan column missing from table: " +
                               name);
    }
    if (enc.action == EncodingAction::Passthrough) {
      bool boolean = table.columns[c].kind == ColumnKind::Boolean;
      auto vals = boolean ? table.boolean_column(c) : table.numeric_column(c);
      for (size_t r = 0; r < table.n_rows(); ++r) {
        out.values[r][offset] = vals[r].value_or(0.0);
      }
      offset += 1;
    } else if (enc.action == EncodingAction::OneHot) {
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (!table.rows[r][c]) continue;
        auto it = std::lower_bound(enc.categories.begin(),
                                   enc.categories.end(), *table.rows[r][c]);
        if (it != enc.categories.end() && *it == *table.rows[r][c]) {
          size_t k = static_cast<size_t>(it - enc.categories.begin());
          out.values[r][offset + k] = 1.0;
        } else {
          // unseen category: all-zero row for this block
          ++out.unseen_category_warnings;
        }
      }
      offset += enc.categories.size();
    } else {  // Ordinal: alphabetical code, unseen -> reserved index = size
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (!table.rows[r][c]) continue;
        auto it = std::lower_bound(enc.categories.begin(),
                                   enc.categories.end(), *table.rows[r][c]);
        if (it != enc.categories.end() && *it == *table.rows[r][c]) {
          out.values[r][offset] =
              static_cast<double>(it - enc.categories.begin());
        } else {
          out.values[r][offset] = static_cast<double>(enc.categories.size());
          ++out.unseen_category_warnings;
        }
      }
      offset += 1;
    }
  }
  return out;
}

FeatureTable sample_rows(const FeatureTable& table, size_t cap, uint64_t seed) {
  if (cap < 1) throw std::runtime_error("sample cap must be >= 1");
  if (table.n_rows() <= cap) return table;
  std::vector<size_t> indices(table.n_rows());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(seed);
  rng.shuffle(indices);
  indices.resize(cap);
  std::sort(indices.begin(), indices.end());
  FeatureTable out;
  out.columns = table.columns;
  out.source_path = table.source_path;
  out.rows.reserve(cap);
  for (size_t i : indices) out.rows.push_back(table.rows[i]);
  return out;
}

}  // namespace agentml
