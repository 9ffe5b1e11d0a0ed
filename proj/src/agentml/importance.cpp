#include "agentml/importance.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>

#include "agentml/models.hpp"
#include "agentml/stats.hpp"
#include "agentml/svg.hpp"
#include "agentml/util.hpp"

namespace fs = std::filesystem;

namespace agentml {

ImportanceMethod importance_method_from_name(const std::string& name) {
  std::string n = to_lower(name);
  if (n == "random_forest" || n == "rf") return ImportanceMethod::RandomForest;
  if (n == "anova_f" || n == "anova") return ImportanceMethod::AnovaF;
  if (n == "mutual_information" || n == "mi") {
    return ImportanceMethod::MutualInformation;
  }
  if (n == "rfe") return ImportanceMethod::Rfe;
  throw std::runtime_error("unknown importance method: " + name);
}

std::string importance_method_name(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::RandomForest: return "random_forest";
    case ImportanceMethod::AnovaF: return "anova_f";
    case ImportanceMethod::MutualInformation: return "mutual_information";
    case ImportanceMethod::Rfe: return "rfe";
  }
  return "unknown";
}

double anova_f_classification(const std::vector<double>& feature,
                              const std::vector<size_t>& classes) {
  size_t n = feature.size();
  std::map<size_t, std::vector<double>> groups;
  for (size_t i = 0; i < n; ++i) groups[classes[i]].push_back(feature[i]);
  size_t k = groups.size();
  if (k < 2) throw std::runtime_error("anova_f requires at least 2 classes");
  double grand = mean_of(feature);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& [cls, vals] : groups) {
    double m = mean_of(vals);
    ssb += static_cast<double>(vals.size()) * (m - grand) * (m - grand);
    for (double v : vals) ssw += (v - m) * (v - m);
  }
  if (ssb <= 1e-300) return 0.0;
  if (ssw <= 1e-300) return 1e12;
  double df_b = static_cast<double>(k - 1);
  double df_w = static_cast<double>(n - k);
  if (df_w <= 0) return 1e12;
  return (ssb / df_b) / (ssw / df_w);
}

double anova_f_regression(const std::vector<double>& feature,
                          const std::vector<double>& target) {
  size_t n = feature.size();
  if (n < 3) return 0.0;
  double mx = mean_of(feature), my = mean_of(target);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (feature[i] - mx) * (target[i] - my);
    sxx += (feature[i] - mx) * (feature[i] - mx);
    syy += (target[i] - my) * (target[i] - my);
  }
  if (sxx <= 1e-300 || syy <= 1e-300) return 0.0;
  double ss_reg = sxy * sxy / sxx;
  double ss_res = syy - ss_reg;
  if (ss_reg <= 1e-300) return 0.0;
  if (ss_res <= 1e-300) return 1e12;
  return ss_reg / (ss_res / static_cast<double>(n - 2));
}

namespace {

std::vector<size_t> equal_width_bins(const std::vector<double>& v,
                                     size_t bins) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  std::vector<size_t> out(v.size(), 0);
  if (hi <= lo) return out;
  double width = (hi - lo) / static_cast<double>(bins);
  for (size_t i = 0; i < v.size(); ++i) {
    size_t b = static_cast<size_t>((v[i] - lo) / width);
    if (b >= bins) b = bins - 1;
    out[i] = b;
  }
  return out;
}

}  // namespace

double mutual_information(const std::vector<double>& feature,
                          const std::vector<double>& target, size_t bins) {
  size_t n = feature.size();
  if (n < 2 || target.size() != n) {
    throw std::runtime_error("mutual_information needs n >= 2 equal-length inputs");
  }
  auto fx = equal_width_bins(feature, bins);
  auto fy = equal_width_bins(target, bins);
  std::map<std::pair<size_t, size_t>, double> joint;
  std::map<size_t, double> px, py;
  double inv_n = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    joint[{fx[i], fy[i]}] += inv_n;
    px[fx[i]] += inv_n;
    py[fy[i]] += inv_n;
  }
  double mi = 0.0;
  for (const auto& [cell, p] : joint) {
    if (p <= 0) continue;
    mi += p * std::log(p / (px[cell.first] * py[cell.second]));
  }
  return std::max(0.0, mi);  // clamp rounding negatives
}

namespace {

struct EncodedProblem {
  EncodedMatrix matrix;
  TaskType task;
  std::vector<size_t> classes;        // classification
  std::vector<std::string> class_labels;
  std::vector<double> target_values;  // regression (and MI)
};

EncodedProblem encode_problem(const FeatureTable& raw,
                              const std::string& target,
                              std::vector<std::string>* warnings) {
  if (raw.column_index(target) < 0) {
    throw std::runtime_error("target column not found: " + target);
  }
  EncodedProblem p;
  p.task = infer_task_type(raw, target);
  FeatureTable t = impute(raw, warnings);
  int tc = t.column_index(target);
  if (tc < 0) throw std::runtime_error("target column dropped (all missing)");
  EncodingPlan plan = fit_encoding(t, target);
  p.matrix = apply_encoding(t, plan);
  if (p.task == TaskType::Classification) {
    std::set<std::string> labels;
    for (const auto& row : t.rows) {
      if (row[tc]) labels.insert(*row[tc]);
    }
    p.class_labels.assign(labels.begin(), labels.end());
    for (const auto& row : t.rows) {
      auto it = std::lower_bound(p.class_labels.begin(), p.class_labels.end(),
                                 *row[tc]);
      size_t cls = static_cast<size_t>(it - p.class_labels.begin());
      p.classes.push_back(cls);
      p.target_values.push_back(static_cast<double>(cls));
    }
  } else {
    auto vals = t.numeric_column(static_cast<size_t>(tc));
    for (const auto& v : vals) p.target_values.push_back(v.value_or(0.0));
  }
  return p;
}

std::map<std::string, double> scores_for(const EncodedProblem& p,
                                         ImportanceMethod method,
                                         uint64_t seed) {
  std::map<std::string, double> scores;
  size_t d = p.matrix.names.size();
  auto column = [&](size_t f) {
    std::vector<double> col(p.matrix.values.size());
    for (size_t r = 0; r < col.size(); ++r) col[r] = p.matrix.values[r][f];
    return col;
  };
  switch (method) {
    case ImportanceMethod::RandomForest: {
      std::vector<double> y;
      bool cls = p.task == TaskType::Classification;
      size_t n_classes = cls ? p.class_labels.size() : 0;
      y = p.target_values;
      auto imp = forest_importance(p.matrix.values, y, cls, n_classes, 200, seed);
      for (size_t f = 0; f < d; ++f) scores[p.matrix.names[f]] = imp[f];
      break;
    }
    case ImportanceMethod::AnovaF: {
      for (size_t f = 0; f < d; ++f) {
        auto col = column(f);
        scores[p.matrix.names[f]] =
            p.task == TaskType::Classification
                ? anova_f_classification(col, p.classes)
                : anova_f_regression(col, p.target_values);
      }
      break;
    }
    case ImportanceMethod::MutualInformation: {
      for (size_t f = 0; f < d; ++f) {
        auto col = column(f);
        bool constant = std::all_of(col.begin(), col.end(),
                                    [&](double v) { return v == col[0]; });
        scores[p.matrix.names[f]] =
            constant ? 0.0 : mutual_information(col, p.target_values);
      }
      break;
    }
    case ImportanceMethod::Rfe: {
      // full elimination ranking: features removed earlier score lower
      std::vector<size_t> active(d);
      for (size_t i = 0; i < d; ++i) active[i] = i;
      size_t removed_rank = 0;
      std::vector<double> final_scores(d, 0.0);
      bool cls = p.task == TaskType::Classification;
      size_t n_classes = cls ? p.class_labels.size() : 0;
      while (active.size() > 1) {
        Matrix sub(p.matrix.values.size());
        for (size_t r = 0; r < sub.size(); ++r) {
          for (size_t f : active) sub[r].push_back(p.matrix.values[r][f]);
        }
        auto imp = forest_importance(sub, p.target_values, cls, n_classes, 100,
                                     seed);
        size_t drop = static_cast<size_t>(
            std::ceil(0.2 * static_cast<double>(active.size())));
        drop = std::min(drop, active.size() - 1);
        std::vector<size_t> order(active.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
          if (imp[a] != imp[b]) return imp[a] < imp[b];
          return p.matrix.names[active[a]] > p.matrix.names[active[b]];
        });
        std::set<size_t> to_drop(order.begin(), order.begin() + static_cast<long>(drop));
        std::vector<size_t> next;
        for (size_t i = 0; i < active.size(); ++i) {
          if (to_drop.count(i)) {
            final_scores[active[i]] = static_cast<double>(removed_rank);
          } else {
            next.push_back(active[i]);
          }
        }
        ++removed_rank;
        active = std::move(next);
      }
      final_scores[active[0]] = static_cast<double>(removed_rank);
      double denom = std::max(1.0, static_cast<double>(removed_rank));
      for (size_t f = 0; f < d; ++f) {
        scores[p.matrix.names[f]] = final_scores[f] / denom;
      }
      break;
    }
  }
  return scores;
}

std::vector<std::string> rank_names(const std::map<std::string, double>& scores) {
  std::vector<std::string> names;
  for (const auto& [name, score] : scores) names.push_back(name);
  std::sort(names.begin(), names.end(), [&](const auto& a, const auto& b) {
    double sa = scores.at(a), sb = scores.at(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return names;
}

// top-2 principal components by power iteration with deflation
std::pair<std::vector<double>, std::vector<double>> pca2(
    const Matrix& X) {
  size_t n = X.size();
  size_t d = n ? X[0].size() : 0;
  std::vector<double> means(d, 0.0), sds(d, 0.0);
  for (const auto& row : X) {
    for (size_t f = 0; f < d; ++f) means[f] += row[f];
  }
  for (double& m : means) m /= static_cast<double>(n);
  for (const auto& row : X) {
    for (size_t f = 0; f < d; ++f) {
      sds[f] += (row[f] - means[f]) * (row[f] - means[f]);
    }
  }
  for (double& s : sds) s = std::sqrt(s / static_cast<double>(n));
  Matrix Z(n, std::vector<double>(d, 0.0));
  for (size_t r = 0; r < n; ++r) {
    for (size_t f = 0; f < d; ++f) {
      Z[r][f] = sds[f] > 1e-12 ? (X[r][f] - means[f]) / sds[f] : 0.0;
    }
  }
  Matrix cov(d, std::vector<double>(d, 0.0));
  for (size_t r = 0; r < n; ++r) {
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = i; j < d; ++j) cov[i][j] += Z[r][i] * Z[r][j];
    }
  }
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n);
      cov[j][i] = cov[i][j];
    }
  }
  auto power = [&](const Matrix& M) {
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
    for (int it = 0; it < 200; ++it) {
      std::vector<double> w(d, 0.0);
      for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < d; ++j) w[i] += M[i][j] * v[j];
      }
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-12) break;
      for (size_t i = 0; i < d; ++i) v[i] = w[i] / norm;
    }
    return v;
  };
  auto v1 = power(cov);
  double l1 = 0.0;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) l1 += v1[i] * cov[i][j] * v1[j];
  }
  Matrix deflated = cov;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) deflated[i][j] -= l1 * v1[i] * v1[j];
  }
  auto v2 = power(deflated);
  std::vector<double> c1(n, 0.0), c2(n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    for (size_t f = 0; f < d; ++f) {
      c1[r] += Z[r][f] * v1[f];
      c2[r] += Z[r][f] * v2[f];
    }
  }
  return {c1, c2};
}

}  // namespace

std::map<std::string, double> rf_importance(const FeatureTable& table,
                                            const std::string& target,
                                            size_t n_trees, uint64_t seed) {
  std::vector<std::string> warnings;
  EncodedProblem p = encode_problem(table, target, &warnings);
  bool cls = p.task == TaskType::Classification;
  auto imp = forest_importance(p.matrix.values, p.target_values, cls,
                               cls ? p.class_labels.size() : 0, n_trees, seed);
  std::map<std::string, double> out;
  for (size_t f = 0; f < p.matrix.names.size(); ++f) {
    out[p.matrix.names[f]] = imp[f];
  }
  return out;
}

std::vector<std::string> rfe_select(const FeatureTable& table,
                                    const std::string& target, size_t n_keep,
                                    double step_fraction, uint64_t seed) {
  std::vector<std::string> warnings;
  EncodedProblem p = encode_problem(table, target, &warnings);
  size_t d = p.matrix.names.size();
  if (n_keep < 1 || n_keep > d) {
    throw std::runtime_error("rfe n_keep out of range [1, " +
                             std::to_string(d) + "]");
  }
  bool cls = p.task == TaskType::Classification;
  size_t n_classes = cls ? p.class_labels.size() : 0;
  std::vector<size_t> active(d);
  for (size_t i = 0; i < d; ++i) active[i] = i;
  while (active.size() > n_keep) {
    Matrix sub(p.matrix.values.size());
    for (size_t r = 0; r < sub.size(); ++r) {
      for (size_t f : active) sub[r].push_back(p.matrix.values[r][f]);
    }
    auto imp = forest_importance(sub, p.target_values, cls, n_classes, 100, seed);
    size_t drop = static_cast<size_t>(
        std::ceil(step_fraction * static_cast<double>(active.size())));
    drop = std::min(drop, active.size() - n_keep);
    drop = std::max<size_t>(drop, 1);
    std::vector<size_t> order(active.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (imp[a] != imp[b]) return imp[a] < imp[b];
      return p.matrix.names[active[a]] > p.matrix.names[active[b]];
    });
    std::set<size_t> to_drop(order.begin(), order.begin() + static_cast<long>(drop));
    std::vector<size_t> next;
    for (size_t i = 0; i < active.size(); ++i) {
      if (!to_drop.count(i)) next.push_back(active[i]);
    }
    active = std::move(next);
  }
  std::vector<std::string> kept;
  for (size_t f : active) kept.push_back(p.matrix.names[f]);
  return kept;
}

ImportanceResult run_feature_importance(const std::string& input_path,
                                        const std::string& target,
                                        const std::string& output_dir,
                                        const ImportanceOptions& options) {
  FeatureTable raw = read_table(input_path);
  ImportanceResult result;
  result.method = options.method;
  EncodedProblem p = encode_problem(raw, target, &result.warnings);
  result.task_type = p.task;
  result.scores = scores_for(p, options.method, options.seed);
  result.ranking = rank_names(result.scores);

  fs::create_directories(output_dir);
  auto artifact = [&](const std::string& rel) {
    std::string path = (fs::path(output_dir) / rel).string();
    result.exported_files.push_back(path);
    return path;
  };

  {
    CsvDocument doc;
    doc.header = {"feature", "score", "rank", "method"};
    for (size_t i = 0; i < result.ranking.size(); ++i) {
      doc.rows.push_back({result.ranking[i],
                          format_double(result.scores.at(result.ranking[i])),
                          std::to_string(i + 1),
                          importance_method_name(options.method)});
    }
    write_csv_file(artifact("importance_scores.csv"), doc);
  }

  // top-k exports: encoded feature columns in ranking order + target last
  int tc_raw = raw.column_index(target);
  for (size_t k : options.top_ks) {
    size_t effective = k;
    if (effective > result.ranking.size()) {
      effective = result.ranking.size();
      result.warnings.push_back(
          "requested top " + std::to_string(k) + " but only " +
          std::to_string(effective) + " features exist; clamped");
    }
    CsvDocument doc;
    std::vector<size_t> feature_cols;
    for (size_t i = 0; i < effective; ++i) {
      doc.header.push_back(result.ranking[i]);
      auto it = std::find(p.matrix.names.begin(), p.matrix.names.end(),
                          result.ranking[i]);
      feature_cols.push_back(
          static_cast<size_t>(it - p.matrix.names.begin()));
    }
    doc.header.push_back(target);
    for (size_t r = 0; r < p.matrix.values.size(); ++r) {
      std::vector<std::string> row;
      for (size_t f : feature_cols) {
        row.push_back(format_double(p.matrix.values[r][f]));
      }
      row.push_back(tc_raw >= 0 && raw.rows[r][tc_raw] ? *raw.rows[r][tc_raw]
                                                       : "");
      doc.rows.push_back(std::move(row));
    }
    write_csv_file(artifact("top_" + std::to_string(k) + "_features.csv"), doc);
  }

  if (options.make_plots) {
    size_t shown = std::min<size_t>(20, result.ranking.size());
    std::vector<std::string> labels(result.ranking.begin(),
                                    result.ranking.begin() + static_cast<long>(shown));
    std::vector<double> heights;
    for (const auto& name : labels) heights.push_back(result.scores.at(name));
    write_file(artifact("importance_bars.svg"),
               svg_bar("Feature importance (" +
                           importance_method_name(options.method) + ")",
                       labels, heights));
    // cumulative curve over the full ranking
    std::vector<double> xs, ys;
    double total = 0.0;
    for (const auto& name : result.ranking) total += std::max(0.0, result.scores.at(name));
    double acc = 0.0;
    for (size_t i = 0; i < result.ranking.size(); ++i) {
      acc += std::max(0.0, result.scores.at(result.ranking[i]));
      xs.push_back(static_cast<double>(i + 1));
      ys.push_back(total > 0 ? acc / total : 0.0);
    }
    write_file(artifact("cumulative_importance.svg"),
               svg_line("Cumulative importance", xs, ys));
    auto [c1, c2] = pca2(p.matrix.values);
    std::vector<int> colors;
    if (p.task == TaskType::Classification) {
      for (size_t cls : p.classes) colors.push_back(static_cast<int>(cls));
    } else {
      colors.assign(c1.size(), 0);
    }
    write_file(artifact("pca_scatter.svg"),
               svg_scatter("PCA (2 components)", c1, c2, colors));
    // feature correlation heatmap over encoded features
    size_t d = p.matrix.names.size();
    std::vector<std::vector<std::optional<double>>> corr(
        d, std::vector<std::optional<double>>(d));
    std::vector<std::vector<std::optional<double>>> cols(d);
    for (size_t f = 0; f < d; ++f) {
      for (const auto& row : p.matrix.values) cols[f].push_back(row[f]);
    }
    for (size_t i = 0; i < d; ++i) {
      corr[i][i] = 1.0;
      for (size_t j = i + 1; j < d; ++j) {
        auto r = pearson(cols[i], cols[j]);
        corr[i][j] = r;
        corr[j][i] = r;
      }
    }
    write_file(artifact("feature_correlation.svg"),
               svg_heatmap("Feature correlation", p.matrix.names, corr));
  }

  return result;
}

}  // namespace agentml
