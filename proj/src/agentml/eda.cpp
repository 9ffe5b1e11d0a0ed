#include "agentml/eda.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "agentml/stats.hpp"
#include "agentml/svg.hpp"
#include "agentml/util.hpp"

namespace fs = std::filesystem;

namespace agentml {

namespace {

std::string method_name(CorrelationMethod m) {
  return m == CorrelationMethod::Pearson ? "pearson" : "spearman";
}

ColumnSummary summarize_column(const FeatureTable& t, size_t c) {
  ColumnSummary s;
  s.name = t.columns[c].name;
  s.kind = t.columns[c].kind;
  std::map<std::string, size_t> counts;
  for (const auto& row : t.rows) {
    if (!row[c]) {
      ++s.missing;
    } else {
      ++s.count;
      ++counts[*row[c]];
    }
  }
  s.n_distinct = counts.size();
  std::vector<std::pair<std::string, size_t>> top(counts.begin(), counts.end());
  std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (top.size() > 5) top.resize(5);
  s.top_values = std::move(top);

  if (s.kind == ColumnKind::Numeric && s.count > 0) {
    std::vector<double> vals;
    for (const auto& v : t.numeric_column(c)) {
      if (v) vals.push_back(*v);
    }
    std::sort(vals.begin(), vals.end());
    NumericSummary n;
    n.count = s.count;
    n.missing = s.missing;
    n.mean = mean_of(vals);
    n.sd = sample_sd(vals);
    n.min = vals.front();
    n.q1 = quantile_sorted(vals, 0.25);
    n.median = quantile_sorted(vals, 0.5);
    n.q3 = quantile_sorted(vals, 0.75);
    n.max = vals.back();
    n.skewness = adjusted_skewness(vals);
    n.kurtosis = adjusted_excess_kurtosis(vals);
    s.numeric = n;
  }
  return s;
}

std::string blank_or(const std::optional<double>& v) {
  return v ? format_double(*v) : "";
}

}  // namespace

std::pair<std::vector<std::string>,
          std::vector<std::vector<std::optional<double>>>>
correlation_matrix(const FeatureTable& table, CorrelationMethod method,
                   std::vector<std::string>* notes) {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> cols;
  for (size_t c = 0; c < table.n_cols(); ++c) {
    if (table.columns[c].kind != ColumnKind::Numeric) continue;
    names.push_back(table.columns[c].name);
    cols.push_back(table.numeric_column(c));
  }
  size_t n = names.size();
  std::vector<std::vector<std::optional<double>>> m(
      n, std::vector<std::optional<double>>(n));
  for (size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    for (size_t j = i + 1; j < n; ++j) {
      std::optional<double> r = method == CorrelationMethod::Pearson
                                    ? pearson(cols[i], cols[j])
                                    : spearman(cols[i], cols[j]);
      m[i][j] = r;
      m[j][i] = r;
      if (!r && notes) {
        notes->push_back("correlation between \"" + names[i] + "\" and \"" +
                         names[j] +
                         "\" is undefined (zero variance or too few pairs)");
      }
    }
  }
  return {names, m};
}

EdaReport run_eda(const std::string& input_path, const std::string& output_dir,
                  const EdaOptions& options) {
  FeatureTable full = read_table(input_path);
  FeatureTable t = sample_rows(full, std::max<size_t>(1, options.sample_cap), 0);
  if (full.n_rows() > t.n_rows()) {
    // note is recorded below once the report exists
  }
  if (options.target_column &&
      full.column_index(*options.target_column) < 0) {
    throw std::runtime_error("unknown target column: " +
                             *options.target_column);
  }
  fs::create_directories(output_dir);

  EdaReport report;
  report.correlation_method = options.correlation_method;
  if (full.n_rows() > t.n_rows()) {
    report.notes.push_back("analysis ran on a deterministic sample of " +
                           std::to_string(t.n_rows()) + " of " +
                           std::to_string(full.n_rows()) + " rows");
  }

  for (size_t c = 0; c < t.n_cols(); ++c) {
    report.columns.push_back(summarize_column(t, c));
  }

  for (size_t c = 0; c < t.n_cols(); ++c) {
    if (t.columns[c].kind != ColumnKind::Numeric) continue;
    auto vals = t.numeric_column(c);
    for (size_t idx : iqr_outliers(vals)) {
      report.outliers.push_back({t.columns[c].name, idx, *vals[idx]});
    }
  }

  size_t numeric_count = 0;
  for (const auto& col : t.columns) {
    if (col.kind == ColumnKind::Numeric) ++numeric_count;
  }
  if (numeric_count >= 2) {
    auto [names, matrix] =
        correlation_matrix(t, options.correlation_method, &report.notes);
    report.correlation_columns = names;
    report.correlation = matrix;
  } else {
    report.notes.push_back(
        "correlation matrix skipped: fewer than 2 numeric columns");
  }

  auto artifact = [&](const std::string& rel) {
    std::string path = (fs::path(output_dir) / rel).string();
    report.artifacts.push_back(path);
    return path;
  };

  // summary_stats.csv
  {
    CsvDocument doc;
    doc.header = {"column", "kind", "count", "missing", "mean", "sd",
                  "min", "q1", "median", "q3", "max", "skewness",
                  "kurtosis", "n_distinct", "top_values"};
    for (const auto& s : report.columns) {
      std::string top;
      for (const auto& [v, n] : s.top_values) {
        if (!top.empty()) top += ";";
        top += v + ":" + std::to_string(n);
      }
      std::vector<std::string> row = {
          s.name, column_kind_name(s.kind), std::to_string(s.count),
          std::to_string(s.missing)};
      if (s.numeric) {
        const auto& n = *s.numeric;
        for (double v : {n.mean, n.sd, n.min, n.q1, n.median, n.q3, n.max,
                         n.skewness, n.kurtosis}) {
          row.push_back(format_double(v));
        }
      } else {
        for (int i = 0; i < 9; ++i) row.push_back("");
      }
      row.push_back(std::to_string(s.n_distinct));
      row.push_back(top);
      doc.rows.push_back(std::move(row));
    }
    write_csv_file(artifact("summary_stats.csv"), doc);
  }

  // missing_report.csv
  {
    CsvDocument doc;
    doc.header = {"column", "missing_count", "missing_pct"};
    for (const auto& s : report.columns) {
      double pct = t.n_rows()
                       ? 100.0 * static_cast<double>(s.missing) /
                             static_cast<double>(t.n_rows())
                       : 0.0;
      doc.rows.push_back({s.name, std::to_string(s.missing),
                          format_double(pct)});
    }
    write_csv_file(artifact("missing_report.csv"), doc);
  }

  // outliers.csv
  {
    CsvDocument doc;
    doc.header = {"column", "row_index", "value"};
    for (const auto& o : report.outliers) {
      doc.rows.push_back(
          {o.column, std::to_string(o.row_index), format_double(o.value)});
    }
    write_csv_file(artifact("outliers.csv"), doc);
  }

  // correlations.csv
  {
    CsvDocument doc;
    doc.header = {"column"};
    for (const auto& n : report.correlation_columns) doc.header.push_back(n);
    for (size_t i = 0; i < report.correlation_columns.size(); ++i) {
      std::vector<std::string> row = {report.correlation_columns[i]};
      for (size_t j = 0; j < report.correlation_columns.size(); ++j) {
        row.push_back(blank_or(report.correlation[i][j]));
      }
      doc.rows.push_back(std::move(row));
    }
    write_csv_file(artifact("correlations.csv"), doc);
  }

  // plots
  if (options.make_plots) {
    std::vector<std::string> numeric_names;
    std::vector<std::vector<double>> numeric_cols;
    for (size_t c = 0; c < t.n_cols(); ++c) {
      const auto& col = t.columns[c];
      std::string safe = sanitize_filename(col.name);
      if (col.kind == ColumnKind::Numeric) {
        std::vector<double> vals;
        for (const auto& v : t.numeric_column(c)) {
          if (v) vals.push_back(*v);
        }
        write_file(artifact("hist_" + safe + ".svg"),
                   svg_histogram("Histogram: " + col.name, vals));
        write_file(artifact("box_" + safe + ".svg"),
                   svg_box("Boxplot: " + col.name, vals));
        numeric_names.push_back(col.name);
        numeric_cols.push_back(std::move(vals));
      } else if (col.kind == ColumnKind::Categorical ||
                 col.kind == ColumnKind::Boolean) {
        std::map<std::string, size_t> counts;
        for (const auto& row : t.rows) {
          if (row[c]) ++counts[*row[c]];
        }
        std::vector<std::string> labels;
        std::vector<double> weights;
        for (const auto& [v, n] : counts) {
          labels.push_back(v);
          weights.push_back(static_cast<double>(n));
        }
        write_file(artifact("bar_" + safe + ".svg"),
                   svg_bar("Counts: " + col.name, labels, weights));
        write_file(artifact("pie_" + safe + ".svg"),
                   svg_pie("Share: " + col.name, labels, weights));
      }
    }
    if (!report.correlation_columns.empty()) {
      write_file(artifact("correlation_heatmap.svg"),
                 svg_heatmap("Correlation (" +
                                 method_name(options.correlation_method) + ")",
                             report.correlation_columns, report.correlation));
    }
    if (numeric_cols.size() >= 2 && numeric_cols.size() <= 8) {
      write_file(artifact("pairplot.svg"),
                 svg_scatter_grid(numeric_names, numeric_cols));
    } else if (numeric_cols.size() > 8) {
      report.notes.push_back(
          "pairplot skipped: more than 8 numeric columns");
    }
    // one line plot per (datetime, numeric) pair
    for (size_t dc = 0; dc < t.n_cols(); ++dc) {
      if (t.columns[dc].kind != ColumnKind::Datetime) continue;
      std::vector<double> xs(t.n_rows());
      for (size_t r = 0; r < t.n_rows(); ++r) xs[r] = static_cast<double>(r);
      for (size_t c = 0; c < t.n_cols(); ++c) {
        if (t.columns[c].kind != ColumnKind::Numeric) continue;
        std::vector<double> ys;
        std::vector<double> xs2;
        auto vals = t.numeric_column(c);
        for (size_t r = 0; r < t.n_rows(); ++r) {
          if (vals[r]) {
            xs2.push_back(static_cast<double>(r));
            ys.push_back(*vals[r]);
          }
        }
        write_file(artifact("timeseries_" + sanitize_filename(t.columns[dc].name) +
                            "_" + sanitize_filename(t.columns[c].name) + ".svg"),
                   svg_line(t.columns[c].name + " over " + t.columns[dc].name,
                            xs2, ys));
      }
    }
  }

  // report.md — fixed section order
  {
    std::ostringstream md;
    md << "# EDA Report\n\n";
    md << "## Overview\n\n";
    md << "- Source: " << input_path << "\n";
    md << "- Rows: " << t.n_rows() << "\n";
    md << "- Columns: " << t.n_cols() << "\n";
    for (const auto& n : report.notes) md << "- Note: " << n << "\n";
    md << "\n## Columns\n\n";
    for (const auto& s : report.columns) {
      md << "### " << s.name << " (" << column_kind_name(s.kind) << ")\n\n";
      md << "- count: " << s.count << ", missing: " << s.missing
         << ", distinct: " << s.n_distinct << "\n";
      if (s.numeric) {
        const auto& n = *s.numeric;
        md << "- mean " << format_double(n.mean) << ", sd "
           << format_double(n.sd) << ", min " << format_double(n.min)
           << ", median " << format_double(n.median) << ", max "
           << format_double(n.max) << "\n";
      }
      if (!s.top_values.empty()) {
        md << "- top values:";
        for (const auto& [v, n] : s.top_values) md << " " << v << " (" << n << ")";
        md << "\n";
      }
      md << "\n";
    }
    md << "## Missing Data\n\n";
    size_t total_missing = 0;
    for (const auto& s : report.columns) total_missing += s.missing;
    md << "Total missing cells: " << total_missing << "\n\n";
    md << "## Outliers\n\n";
    md << report.outliers.size() << " flagged values (IQR rule); see outliers.csv\n\n";
    md << "## Correlations\n\n";
    md << "Method: " << method_name(options.correlation_method)
       << "; see correlations.csv\n\n";
    md << "## Target Relationships\n\n";
    if (options.target_column) {
      int tc = t.column_index(*options.target_column);
      md << "Grouped numeric means per class of \"" << *options.target_column
         << "\":\n\n";
      std::set<std::string> classes;
      for (const auto& row : t.rows) {
        if (row[tc]) classes.insert(*row[tc]);
      }
      for (const auto& cls : classes) {
        md << "- " << cls << ":";
        for (size_t c = 0; c < t.n_cols(); ++c) {
          if (t.columns[c].kind != ColumnKind::Numeric ||
              static_cast<int>(c) == tc) {
            continue;
          }
          std::vector<double> vals;
          auto num = t.numeric_column(c);
          for (size_t r = 0; r < t.n_rows(); ++r) {
            if (t.rows[r][tc] && *t.rows[r][tc] == cls && num[r]) {
              vals.push_back(*num[r]);
            }
          }
          md << " " << t.columns[c].name << "=" << format_double(mean_of(vals));
        }
        md << "\n";
      }
    } else {
      md << "No target column provided.\n";
    }
    write_file(artifact("report.md"), md.str());
  }

  return report;
}

}  // namespace agentml
