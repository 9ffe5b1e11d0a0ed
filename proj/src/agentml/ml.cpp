#include "agentml/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "agentml/metrics.hpp"
#include "agentml/svg.hpp"
#include "agentml/util.hpp"

namespace fs = std::filesystem;

namespace agentml {

namespace {

FeatureTable subtable(const FeatureTable& table,
                      const std::vector<size_t>& indices) {
  FeatureTable out;
  out.columns = table.columns;
  out.source_path = table.source_path;
  out.rows.reserve(indices.size());
  for (size_t i : indices) out.rows.push_back(table.rows[i]);
  return out;
}

std::vector<std::string> class_labels_of(const FeatureTable& table,
                                         const std::string& target) {
  int tc = table.column_index(target);
  std::set<std::string> labels;
  for (const auto& row : table.rows) {
    if (row[tc]) labels.insert(*row[tc]);
  }
  return {labels.begin(), labels.end()};
}

std::vector<double> target_vector(const FeatureTable& table,
                                  const std::string& target, TaskType task,
                                  const std::vector<std::string>& labels) {
  int tc = table.column_index(target);
  std::vector<double> y;
  y.reserve(table.n_rows());
  for (const auto& row : table.rows) {
    if (!row[tc]) throw std::runtime_error("missing target value");
    if (task == TaskType::Classification) {
      auto it = std::lower_bound(labels.begin(), labels.end(), *row[tc]);
      if (it == labels.end() || *it != *row[tc]) {
        throw std::runtime_error("unknown class label: " + *row[tc]);
      }
      y.push_back(static_cast<double>(it - labels.begin()));
    } else {
      auto v = parse_number(*row[tc]);
      if (!v) throw std::runtime_error("non-numeric regression target: " + *row[tc]);
      y.push_back(*v);
    }
  }
  return y;
}

struct Pipeline {
  ImputeStats impute_stats;
  EncodingPlan plan;
  bool normalize = true;
  std::vector<double> means, sds;
};

Matrix normalize_matrix(const Pipeline& p, Matrix m) {
  if (!p.normalize) return m;
  for (auto& row : m) {
    for (size_t f = 0; f < row.size() && f < p.means.size(); ++f) {
      double sd = p.sds[f] > 1e-12 ? p.sds[f] : 1.0;
      row[f] = (row[f] - p.means[f]) / sd;
    }
  }
  return m;
}

Pipeline fit_pipeline(const FeatureTable& train, const std::string& target,
                      bool normalize) {
  Pipeline p;
  p.normalize = normalize;
  p.impute_stats = fit_impute(train);
  FeatureTable imputed = apply_impute(train, p.impute_stats);
  p.plan = fit_encoding(imputed, target);
  EncodedMatrix m = apply_encoding(imputed, p.plan);
  size_t d = m.names.size();
  p.means.assign(d, 0.0);
  p.sds.assign(d, 0.0);
  size_t n = m.values.size();
  if (n > 0) {
    for (const auto& row : m.values) {
      for (size_t f = 0; f < d; ++f) p.means[f] += row[f];
    }
    for (double& v : p.means) v /= static_cast<double>(n);
    for (const auto& row : m.values) {
      for (size_t f = 0; f < d; ++f) {
        p.sds[f] += (row[f] - p.means[f]) * (row[f] - p.means[f]);
      }
    }
    for (double& v : p.sds) v = std::sqrt(v / static_cast<double>(n));
  }
  return p;
}

Matrix pipeline_transform(const Pipeline& p, const FeatureTable& table) {
  FeatureTable imputed = apply_impute(table, p.impute_stats);
  EncodedMatrix m = apply_encoding(imputed, p.plan);
  return normalize_matrix(p, std::move(m.values));
}

// Oversample minority classes to parity with the largest class.
std::vector<size_t> oversampled_indices(const std::vector<size_t>& train_idx,
                                        const std::vector<double>& y_all,
                                        size_t n_classes, uint64_t seed) {
  std::vector<std::vector<size_t>> per_class(n_classes);
  for (size_t i : train_idx) {
    per_class[static_cast<size_t>(y_all[i])].push_back(i);
  }
  size_t target_count = 0;
  for (const auto& g : per_class) target_count = std::max(target_count, g.size());
  Rng rng(seed);
  std::vector<size_t> out = train_idx;
  for (const auto& g : per_class) {
    if (g.empty()) continue;
    for (size_t c = g.size(); c < target_count; ++c) {
      out.push_back(g[rng.uniform_int(g.size())]);
    }
  }
  return out;
}

struct OofPool {
  std::vector<size_t> y_true;
  std::vector<size_t> y_pred;
  std::vector<std::vector<double>> probs;
  std::vector<double> reg_true, reg_pred;
};

// One CV sweep for an ensemble of member specs (1 member = a plain model,
// 3 = the blend). Every candidate in a run shares fold_ids, so comparisons
// are paired.
CvResult evaluate_cv(const std::vector<ModelSpec>& members,
                     const FeatureTable& table, const std::string& target,
                     const std::vector<size_t>& fold_ids, size_t folds,
                     TaskType task, const std::vector<std::string>& labels,
                     bool normalize, bool oversample, OofPool* pool) {
  bool classification = task == TaskType::Classification;
  size_t n_classes = labels.size();
  std::vector<double> y_all = target_vector(table, target, task, labels);
  CvResult result;
  result.fold_count = folds;
  result.stratified = classification;
  for (size_t f = 0; f < folds; ++f) {
    std::vector<size_t> train_idx, test_idx;
    for (size_t i = 0; i < table.n_rows(); ++i) {
      (fold_ids[i] == f ? test_idx : train_idx).push_back(i);
    }
    std::vector<size_t> fit_idx = train_idx;
    if (classification && oversample) {
      fit_idx = oversampled_indices(train_idx, y_all, n_classes,
                                    members[0].seed * 7919 + f);
    }
    FeatureTable train = subtable(table, fit_idx);
    FeatureTable test = subtable(table, test_idx);
    Pipeline pipe = fit_pipeline(train, target, normalize);
    Matrix x_train = pipeline_transform(pipe, train);
    Matrix x_test = pipeline_transform(pipe, test);
    std::vector<double> y_train;
    for (size_t i : fit_idx) y_train.push_back(y_all[i]);

    if (classification) {
      std::vector<std::unique_ptr<Classifier>> fitted;
      for (const auto& m : members) {
        auto clf = make_classifier(m.algorithm, m.hyperparams, m.seed);
        clf->fit(x_train, y_train, n_classes);
        fitted.push_back(std::move(clf));
      }
      std::vector<size_t> yt, yp;
      std::vector<std::vector<double>> probs;
      for (size_t r = 0; r < x_test.size(); ++r) {
        std::vector<double> mean_p(n_classes, 0.0);
        for (const auto& clf : fitted) {
          auto p = clf->predict_proba(x_test[r]);
          for (size_t c = 0; c < n_classes; ++c) mean_p[c] += p[c];
        }
        for (double& v : mean_p) v /= static_cast<double>(fitted.size());
        size_t pred = 0;
        for (size_t c = 1; c < n_classes; ++c) {
          if (mean_p[c] > mean_p[pred]) pred = c;
        }
        yt.push_back(static_cast<size_t>(y_all[test_idx[r]]));
        yp.push_back(pred);
        probs.push_back(mean_p);
      }
      result.folds.push_back(
          compute_classification_metrics(yt, yp, probs, n_classes));
      if (pool) {
        pool->y_true.insert(pool->y_true.end(), yt.begin(), yt.end());
        pool->y_pred.insert(pool->y_pred.end(), yp.begin(), yp.end());
        pool->probs.insert(pool->probs.end(), probs.begin(), probs.end());
      }
    } else {
      std::vector<std::unique_ptr<Regressor>> fitted;
      for (const auto& m : members) {
        auto reg = make_regressor(m.algorithm, m.hyperparams, m.seed);
        reg->fit(x_train, y_train);
        fitted.push_back(std::move(reg));
      }
      std::vector<double> yt, yp;
      for (size_t r = 0; r < x_test.size(); ++r) {
        double s = 0.0;
        for (const auto& reg : fitted) s += reg->predict(x_test[r]);
        yt.push_back(y_all[test_idx[r]]);
        yp.push_back(s / static_cast<double>(fitted.size()));
      }
      result.folds.push_back(compute_regression_metrics(yt, yp));
      if (pool) {
        pool->reg_true.insert(pool->reg_true.end(), yt.begin(), yt.end());
        pool->reg_pred.insert(pool->reg_pred.end(), yp.begin(), yp.end());
      }
    }
  }
  for (const auto& fold : result.folds) {
    for (const auto& [k, v] : fold) result.mean[k] += v;
  }
  for (auto& [k, v] : result.mean) v /= static_cast<double>(result.folds.size());
  for (const auto& [k, m] : result.mean) {
    double acc = 0.0;
    for (const auto& fold : result.folds) {
      double d = fold.at(k) - m;
      acc += d * d;
    }
    result.sd[k] = result.folds.size() > 1
                       ? std::sqrt(acc / static_cast<double>(result.folds.size() - 1))
                       : 0.0;
  }
  return result;
}

std::string ranking_metric(TaskType task) {
  return task == TaskType::Classification ? "accuracy" : "r2";
}

std::string b64_string(const std::string& s) {
  return base64_encode(reinterpret_cast<const unsigned char*>(s.data()),
                       s.size());
}

std::string b64_doubles(const std::vector<double>& v) {
  return base64_encode(reinterpret_cast<const unsigned char*>(v.data()),
                       v.size() * sizeof(double));
}

std::vector<double> doubles_b64(const std::string& s) {
  std::vector<unsigned char> bytes = base64_decode(s);
  if (bytes.size() % sizeof(double) != 0) {
    throw std::runtime_error("corrupted model bundle: bad parameter block");
  }
  std::vector<double> v(bytes.size() / sizeof(double));
  if (!v.empty()) std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

std::string encoding_action_name(EncodingAction a) {
  switch (a) {
    case EncodingAction::Passthrough: return "passthrough";
    case EncodingAction::OneHot: return "onehot";
    case EncodingAction::Ordinal: return "ordinal";
    case EncodingAction::Drop: return "drop";
  }
  return "drop";
}

EncodingAction encoding_action_from_name(const std::string& n) {
  if (n == "passthrough") return EncodingAction::Passthrough;
  if (n == "onehot") return EncodingAction::OneHot;
  if (n == "ordinal") return EncodingAction::Ordinal;
  if (n == "drop") return EncodingAction::Drop;
  throw std::runtime_error("corrupted model bundle: bad encoding action " + n);
}

nlohmann::json bundle_to_json(const ModelBundle& b) {
  nlohmann::json j;
  j["format_version"] = ModelBundle::kFormatVersion;
  j["task_type"] =
      b.task == TaskType::Classification ? "classification" : "regression";
  j["blended"] = b.blended;
  j["input_columns"] = b.input_columns;
  j["feature_names"] = b.feature_names;
  j["class_labels"] = b.class_labels;
  j["normalize"] = b.normalize;
  j["norm_means"] = b64_doubles(b.norm_means);
  j["norm_sds"] = b64_doubles(b.norm_sds);
  j["impute"] = {{"fill", b.impute_stats.fill},
                 {"dropped", b.impute_stats.dropped_columns}};
  nlohmann::json enc = nlohmann::json::array();
  for (const auto& [name, ce] : b.encoding.columns) {
    enc.push_back({{"column", name},
                   {"action", encoding_action_name(ce.action)},
                   {"categories", ce.categories}});
  }
  j["encoding"] = enc;
  j["training_metrics"] = b.training_metrics;
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : b.members) {
    nlohmann::json mj;
    mj["algorithm"] = m.algorithm;
    mj["hyperparams"] = m.hyperparams;
    mj["seed"] = m.seed;
    mj["params_blob"] = b64_string(m.params.dump());
    members.push_back(std::move(mj));
  }
  j["members"] = members;
  return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw std::runtime_error("corrupted model bundle: missing format_version");
  }
  int version = j["format_version"].get<int>();
  if (version != ModelBundle::kFormatVersion) {
    throw std::runtime_error("unsupported bundle format_version " +
                             std::to_string(version));
  }
  ModelBundle b;
  b.task = j.at("task_type").get<std::string>() == "classification"
               ? TaskType::Classification
               : TaskType::Regression;
  b.blended = j.at("blended").get<bool>();
  b.input_columns = j.at("input_columns").get<std::vector<std::string>>();
  b.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  if (b.feature_names.empty()) {
    throw std::runtime_error("corrupted model bundle: empty feature list");
  }
  b.class_labels = j.at("class_labels").get<std::vector<std::string>>();
  b.normalize = j.at("normalize").get<bool>();
  b.norm_means = doubles_b64(j.at("norm_means").get<std::string>());
  b.norm_sds = doubles_b64(j.at("norm_sds").get<std::string>());
  b.impute_stats.fill =
      j.at("impute").at("fill").get<std::map<std::string, std::string>>();
  b.impute_stats.dropped_columns =
      j.at("impute").at("dropped").get<std::vector<std::string>>();
  for (const auto& e : j.at("encoding")) {
    ColumnEncoding ce;
    ce.action = encoding_action_from_name(e.at("action").get<std::string>());
    ce.categories = e.at("categories").get<std::vector<std::string>>();
    b.encoding.columns.emplace_back(e.at("column").get<std::string>(), ce);
  }
  b.training_metrics =
      j.at("training_metrics").get<std::map<std::string, double>>();
  for (const auto& m : j.at("members")) {
    ModelBundle::Member member;
    member.algorithm = m.at("algorithm").get<std::string>();
    member.hyperparams = m.at("hyperparams").get<HyperParams>();
    member.seed = m.at("seed").get<uint64_t>();
    member.params = nlohmann::json::parse(
        base64_decode(m.at("params_blob").get<std::string>()));
    b.members.push_back(std::move(member));
  }
  if (b.members.empty()) {
    throw std::runtime_error("corrupted model bundle: no model parameters");
  }
  return b;
}

std::vector<std::string> metric_order(TaskType task) {
  if (task == TaskType::Classification) {
    return {"accuracy", "auc", "f1", "kappa", "mcc", "precision", "recall"};
  }
  return {"r2", "mae", "mape", "mse", "rmse", "rmsle"};
}

void write_leaderboard_csv(const std::string& path,
                           const std::vector<LeaderboardEntry>& entries,
                           TaskType task) {
  CsvDocument doc;
  doc.header = {"rank", "algorithm"};
  auto metrics = metric_order(task);
  for (const auto& m : metrics) {
    doc.header.push_back(m + "_mean");
    doc.header.push_back(m + "_sd");
  }
  for (size_t i = 0; i < entries.size(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1),
                                 entries[i].spec.algorithm};
    for (const auto& m : metrics) {
      row.push_back(format_double(entries[i].cv.mean.at(m)));
      row.push_back(format_double(entries[i].cv.sd.at(m)));
    }
    doc.rows.push_back(std::move(row));
  }
  write_csv_file(path, doc);
}

void write_roc_svg(const std::string& path, const OofPool& pool,
                   size_t n_classes) {
  // pooled one-vs-rest points over sorted score thresholds
  std::vector<std::pair<double, int>> scored;  // (score, is_positive)
  for (size_t i = 0; i < pool.y_true.size(); ++i) {
    for (size_t c = 0; c < n_classes; ++c) {
      if (n_classes == 2 && c != 1) continue;
      scored.push_back({pool.probs[i][c], pool.y_true[i] == c ? 1 : 0});
    }
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double n_pos = 0, n_neg = 0;
  for (const auto& [s, p] : scored) (p ? n_pos : n_neg) += 1.0;
  std::vector<double> xs{0.0}, ys{0.0};
  double tp = 0, fp = 0;
  for (size_t i = 0; i < scored.size(); ++i) {
    (scored[i].second ? tp : fp) += 1.0;
    if (i + 1 == scored.size() || scored[i + 1].first != scored[i].first) {
      xs.push_back(n_neg > 0 ? fp / n_neg : 0.0);
      ys.push_back(n_pos > 0 ? tp / n_pos : 0.0);
    }
  }
  write_file(path, svg_line("ROC (pooled CV)", xs, ys));
}

void write_confusion_svg(const std::string& path, const OofPool& pool,
                         const std::vector<std::string>& labels) {
  size_t k = labels.size();
  std::vector<std::vector<std::optional<double>>> m(
      k, std::vector<std::optional<double>>(k, 0.0));
  for (size_t i = 0; i < pool.y_true.size(); ++i) {
    *m[pool.y_true[i]][pool.y_pred[i]] += 1.0;
  }
  write_file(path, svg_heatmap("Confusion matrix (pooled CV)", labels, m));
}

ModelBundle build_bundle(const FeatureTable& table, const std::string& target,
                         TaskType task, const std::vector<std::string>& labels,
                         const std::vector<ModelSpec>& members, bool normalize,
                         const std::map<std::string, double>& metrics) {
  Pipeline pipe = fit_pipeline(table, target, normalize);
  Matrix X = pipeline_transform(pipe, table);
  std::vector<double> y = target_vector(table, target, task, labels);
  ModelBundle b;
  b.task = task;
  b.blended = members.size() > 1;
  b.impute_stats = pipe.impute_stats;
  b.encoding = pipe.plan;
  b.normalize = normalize;
  b.norm_means = pipe.means;
  b.norm_sds = pipe.sds;
  b.feature_names = pipe.plan.feature_names();
  b.class_labels = labels;
  b.training_metrics = metrics;
  for (const auto& [name, ce] : pipe.plan.columns) {
    if (ce.action != EncodingAction::Drop) b.input_columns.push_back(name);
  }
  for (const auto& spec : members) {
    ModelBundle::Member m;
    m.algorithm = spec.algorithm;
    m.hyperparams = spec.hyperparams;
    m.seed = spec.seed;
    if (task == TaskType::Classification) {
      auto clf = make_classifier(spec.algorithm, spec.hyperparams, spec.seed);
      clf->fit(X, y, labels.size());
      m.params = clf->to_json();
    } else {
      auto reg = make_regressor(spec.algorithm, spec.hyperparams, spec.seed);
      reg->fit(X, y);
      m.params = reg->to_json();
    }
    b.members.push_back(std::move(m));
  }
  return b;
}

TrainingReport train_impl(const std::string& input_path,
                          const std::string& target,
                          const std::string& output_dir,
                          const TrainOptions& options, TaskType expected_task) {
  FeatureTable table = read_table(input_path);
  if (table.n_rows() < 2) {
    throw std::runtime_error("dataset has fewer than 2 rows");
  }
  TaskType task = infer_task_type(table, target);
  if (task != expected_task) {
    // honor the caller's intent when the heuristic disagrees but the data
    // allows it (e.g. numeric labels trained as regression)
    if (expected_task == TaskType::Regression) {
      int tc = table.column_index(target);
      if (table.columns[tc].kind != ColumnKind::Numeric) {
        throw std::runtime_error("target is not numeric; cannot train a regressor");
      }
      task = TaskType::Regression;
    } else {
      task = TaskType::Classification;
    }
  }
  TrainingReport report;
  report.task = task;
  if (options.transformation) {
    report.warnings.push_back(
        "power transformation is not supported; flag accepted as a no-op");
  }

  std::vector<std::string> labels;
  size_t folds = options.folds;
  if (folds < 2) throw std::runtime_error("folds must be >= 2");
  if (folds > table.n_rows()) {
    folds = std::max<size_t>(2, table.n_rows() / 2);
    report.warnings.push_back("folds reduced to " + std::to_string(folds) +
                              " for a dataset of " +
                              std::to_string(table.n_rows()) + " rows");
  }
  if (task == TaskType::Classification) {
    labels = class_labels_of(table, target);
    std::map<std::string, size_t> counts;
    int tc = table.column_index(target);
    for (const auto& row : table.rows) {
      if (row[tc]) counts[*row[tc]]++;
    }
    size_t min_count = table.n_rows();
    for (const auto& [l, c] : counts) min_count = std::min(min_count, c);
    if (min_count < folds) {
      size_t reduced = std::max<size_t>(2, min_count);
      report.warnings.push_back(
          "folds reduced from " + std::to_string(folds) + " to " +
          std::to_string(reduced) + " (smallest class has " +
          std::to_string(min_count) + " rows)");
      folds = reduced;
    }
  }
  report.folds_used = folds;

  std::vector<std::string> zoo =
      task == TaskType::Classification ? classifier_zoo() : regressor_zoo();
  for (const auto& name : options.exclude) {
    auto it = std::find(zoo.begin(), zoo.end(), to_lower(name));
    if (it != zoo.end()) {
      zoo.erase(it);
    } else {
      report.warnings.push_back("unknown model name ignored: " + name);
    }
  }
  if (zoo.empty()) throw std::runtime_error("every model was excluded");

  auto fold_ids = fold_assignment(table, target, task, folds, options.seed);
  std::string rank_metric = ranking_metric(task);

  for (const auto& algo : zoo) {
    ModelSpec spec{algo, {}, options.seed};
    LeaderboardEntry entry;
    entry.spec = spec;
    entry.cv = evaluate_cv({spec}, table, target, fold_ids, folds, task, labels,
                           options.normalize, options.oversample, nullptr);
    report.leaderboard.push_back(std::move(entry));
  }
  std::stable_sort(report.leaderboard.begin(), report.leaderboard.end(),
                   [&](const auto& a, const auto& b) {
                     double ma = a.cv.mean.at(rank_metric);
                     double mb = b.cv.mean.at(rank_metric);
                     if (ma != mb) return ma > mb;
                     return a.spec.algorithm < b.spec.algorithm;
                   });

  size_t top_n = std::min<size_t>(3, report.leaderboard.size());
  for (size_t i = 0; i < top_n; ++i) {
    const ModelSpec& base = report.leaderboard[i].spec;
    auto grid = tuning_grid(base.algorithm, task == TaskType::Classification);
    Rng rng(options.seed * 1000003 + i + 1);
    ModelSpec best = base;
    CvResult best_cv = report.leaderboard[i].cv;
    bool has_best = false;
    for (size_t it = 0; it < options.tune_iters; ++it) {
      ModelSpec candidate = base;
      for (const auto& [param, values] : grid) {
        candidate.hyperparams[param] = values[rng.uniform_int(values.size())];
      }
      CvResult cv = evaluate_cv({candidate}, table, target, fold_ids, folds,
                                task, labels, options.normalize,
                                options.oversample, nullptr);
      if (!has_best ||
          cv.mean.at(rank_metric) > best_cv.mean.at(rank_metric)) {
        best = candidate;
        best_cv = cv;
        has_best = true;
      }
    }
    report.tuned.push_back({best, best_cv});
  }

  std::vector<ModelSpec> blend_specs;
  for (const auto& t : report.tuned) blend_specs.push_back(t.spec);
  OofPool pool;
  report.blended =
      evaluate_cv(blend_specs, table, target, fold_ids, folds, task, labels,
                  options.normalize, options.oversample, &pool);

  fs::create_directories(fs::path(output_dir) / "models");
  auto artifact = [&](const std::string& rel) {
    std::string path = (fs::path(output_dir) / rel).string();
    report.artifacts.push_back(path);
    return path;
  };

  write_leaderboard_csv(artifact("leaderboard.csv"), report.leaderboard, task);
  {
    CsvDocument doc;
    doc.header = {"metric", "value"};
    for (const auto& [k, v] : report.blended.mean) {
      doc.rows.push_back({k, format_double(v)});
    }
    write_csv_file(artifact("metrics.csv"), doc);
  }

  for (size_t i = 0; i < report.tuned.size(); ++i) {
    std::string dir =
        (fs::path(output_dir) / "models" / ("tuned_model_" + std::to_string(i + 1)))
            .string();
    ModelBundle b = build_bundle(table, target, task, labels,
                                 {report.tuned[i].spec}, options.normalize,
                                 report.tuned[i].cv.mean);
    report.artifacts.push_back(save_bundle(b, dir, "model"));
  }
  {
    std::string dir = (fs::path(output_dir) / "models" / "blended_model").string();
    ModelBundle b = build_bundle(table, target, task, labels, blend_specs,
                                 options.normalize, report.blended.mean);
    report.artifacts.push_back(save_bundle(b, dir, "model"));
  }

  if (options.make_plots) {
    if (task == TaskType::Classification) {
      write_roc_svg(artifact("roc.svg"), pool, labels.size());
      write_confusion_svg(artifact("confusion_matrix.svg"), pool, labels);
    } else {
      std::vector<int> colors(pool.reg_true.size(), 0);
      write_file(artifact("pred_vs_actual.svg"),
                 svg_scatter("Predicted vs actual (pooled CV)", pool.reg_true,
                             pool.reg_pred, colors));
      std::vector<double> residuals;
      for (size_t i = 0; i < pool.reg_true.size(); ++i) {
        residuals.push_back(pool.reg_pred[i] - pool.reg_true[i]);
      }
      write_file(artifact("residuals.svg"),
                 svg_histogram("CV residuals", residuals));
    }
    // learning curve of the best tuned model: metric on a held-out fold as
    // the training fraction grows
    std::vector<size_t> train_idx, test_idx;
    for (size_t i = 0; i < table.n_rows(); ++i) {
      (fold_ids[i] == 0 ? test_idx : train_idx).push_back(i);
    }
    Rng rng(options.seed + 17);
    rng.shuffle(train_idx);
    std::vector<double> xs, ys;
    std::vector<double> y_all = target_vector(table, target, task, labels);
    for (double frac : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      size_t take = std::max<size_t>(
          folds, static_cast<size_t>(frac * static_cast<double>(train_idx.size())));
      take = std::min(take, train_idx.size());
      std::vector<size_t> part(train_idx.begin(), train_idx.begin() + static_cast<long>(take));
      std::sort(part.begin(), part.end());
      FeatureTable train = subtable(table, part);
      if (task == TaskType::Classification &&
          class_labels_of(train, target).size() < labels.size()) {
        continue;  // a class is missing at this fraction; skip the point
      }
      FeatureTable test = subtable(table, test_idx);
      Pipeline pipe = fit_pipeline(train, target, options.normalize);
      Matrix x_train = pipeline_transform(pipe, train);
      Matrix x_test = pipeline_transform(pipe, test);
      std::vector<double> y_train;
      for (size_t i : part) y_train.push_back(y_all[i]);
      double score;
      const ModelSpec& spec = report.tuned.front().spec;
      if (task == TaskType::Classification) {
        auto clf = make_classifier(spec.algorithm, spec.hyperparams, spec.seed);
        clf->fit(x_train, y_train, labels.size());
        size_t correct = 0;
        for (size_t r = 0; r < x_test.size(); ++r) {
          if (clf->predict_class(x_test[r]) ==
              static_cast<size_t>(y_all[test_idx[r]])) {
            ++correct;
          }
        }
        score = x_test.empty() ? 0.0
                               : static_cast<double>(correct) /
                                     static_cast<double>(x_test.size());
      } else {
        auto reg = make_regressor(spec.algorithm, spec.hyperparams, spec.seed);
        reg->fit(x_train, y_train);
        std::vector<double> yt, yp;
        for (size_t r = 0; r < x_test.size(); ++r) {
          yt.push_back(y_all[test_idx[r]]);
          yp.push_back(reg->predict(x_test[r]));
        }
        score = compute_regression_metrics(yt, yp).at("r2");
      }
      xs.push_back(frac);
      ys.push_back(score);
    }
    write_file(artifact("learning_curve.svg"),
               svg_line("Learning curve (" + rank_metric + ")", xs, ys));
  }

  return report;
}

}  // namespace

std::vector<size_t> fold_assignment(const FeatureTable& table,
                                    const std::string& target, TaskType task,
                                    size_t folds, uint64_t seed) {
  size_t n = table.n_rows();
  if (folds < 2) throw std::runtime_error("folds must be >= 2");
  if (folds > n) {
    throw std::runtime_error("folds (" + std::to_string(folds) +
                             ") exceed row count (" + std::to_string(n) + ")");
  }
  std::vector<size_t> ids(n, 0);
  Rng rng(seed);
  if (task == TaskType::Classification) {
    auto labels = class_labels_of(table, target);
    int tc = table.column_index(target);
    for (const auto& label : labels) {
      std::vector<size_t> members;
      for (size_t i = 0; i < n; ++i) {
        if (table.rows[i][tc] && *table.rows[i][tc] == label) {
          members.push_back(i);
        }
      }
      rng.shuffle(members);
      for (size_t pos = 0; pos < members.size(); ++pos) {
        ids[members[pos]] = pos % folds;
      }
    }
  } else {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (size_t pos = 0; pos < n; ++pos) ids[order[pos]] = pos % folds;
  }
  return ids;
}

CvResult cross_validate(const ModelSpec& spec, const FeatureTable& table,
                        const std::string& target, size_t folds,
                        bool stratified, uint64_t seed) {
  TaskType task = stratified ? TaskType::Classification : TaskType::Regression;
  std::vector<std::string> labels =
      stratified ? class_labels_of(table, target) : std::vector<std::string>{};
  auto fold_ids = fold_assignment(table, target, task, folds, seed);
  return evaluate_cv({spec}, table, target, fold_ids, folds, task, labels,
                     true, false, nullptr);
}

std::pair<ModelSpec, CvResult> tune(
    const ModelSpec& spec, const FeatureTable& table, const std::string& target,
    const std::map<std::string, std::vector<double>>& grid, size_t iters,
    uint64_t seed) {
  if (grid.empty()) throw std::runtime_error("tuning grid is empty");
  TaskType task = infer_task_type(table, target);
  std::vector<std::string> labels = task == TaskType::Classification
                                        ? class_labels_of(table, target)
                                        : std::vector<std::string>{};
  size_t folds = std::min<size_t>(10, table.n_rows());
  auto fold_ids = fold_assignment(table, target, task, folds, seed);
  std::string metric = ranking_metric(task);
  Rng rng(seed);
  std::optional<std::pair<ModelSpec, CvResult>> best;
  for (size_t it = 0; it < iters; ++it) {
    ModelSpec candidate = spec;
    for (const auto& [param, values] : grid) {
      candidate.hyperparams[param] = values[rng.uniform_int(values.size())];
    }
    CvResult cv = evaluate_cv({candidate}, table, target, fold_ids, folds,
                              task, labels, true, false, nullptr);
    if (!best || cv.mean.at(metric) > best->second.mean.at(metric)) {
      best = {candidate, cv};
    }
  }
  return *best;
}

std::string save_bundle(const ModelBundle& bundle, const std::string& dir,
                        const std::string& name) {
  fs::create_directories(dir);
  std::string path = (fs::path(dir) / (name + ".mbundle")).string();
  write_file(path, bundle_to_json(bundle).dump(2) + "\n");
  return path;
}

ModelBundle load_bundle(const std::string& path) {
  std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception&) {
    throw std::runtime_error("corrupted model bundle: " + path);
  }
  return bundle_from_json(j);
}

BundlePredictions bundle_predict(const ModelBundle& bundle,
                                 const FeatureTable& data) {
  std::vector<std::string> missing;
  for (const auto& col : bundle.input_columns) {
    if (data.column_index(col) < 0) missing.push_back(col);
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) {
      if (!joined.empty()) joined += ", ";
      joined += m;
    }
    throw std::runtime_error("input is missing feature columns: " + joined);
  }
  Pipeline pipe;
  pipe.impute_stats = bundle.impute_stats;
  pipe.plan = bundle.encoding;
  pipe.normalize = bundle.normalize;
  pipe.means = bundle.norm_means;
  pipe.sds = bundle.norm_sds;
  Matrix X = pipeline_transform(pipe, data);

  BundlePredictions out;
  if (bundle.task == TaskType::Classification) {
    size_t n_classes = bundle.class_labels.size();
    std::vector<std::unique_ptr<Classifier>> models;
    for (const auto& m : bundle.members) {
      auto clf = make_classifier(m.algorithm, m.hyperparams, m.seed);
      clf->from_json(m.params);
      models.push_back(std::move(clf));
    }
    for (const auto& x : X) {
      std::vector<double> mean_p(n_classes, 0.0);
      for (const auto& clf : models) {
        auto p = clf->predict_proba(x);
        for (size_t c = 0; c < n_classes; ++c) mean_p[c] += p[c];
      }
      for (double& v : mean_p) v /= static_cast<double>(models.size());
      size_t pred = 0;
      for (size_t c = 1; c < n_classes; ++c) {
        if (mean_p[c] > mean_p[pred]) pred = c;
      }
      out.classes.push_back(pred);
      out.probs.push_back(std::move(mean_p));
    }
  } else {
    std::vector<std::unique_ptr<Regressor>> models;
    for (const auto& m : bundle.members) {
      auto reg = make_regressor(m.algorithm, m.hyperparams, m.seed);
      reg->from_json(m.params);
      models.push_back(std::move(reg));
    }
    for (const auto& x : X) {
      double s = 0.0;
      for (const auto& reg : models) s += reg->predict(x);
      out.values.push_back(s / static_cast<double>(models.size()));
    }
  }
  return out;
}

TrainingReport train_classifier(const std::string& input_path,
                                const std::string& target,
                                const std::string& output_dir,
                                const TrainOptions& options) {
  return train_impl(input_path, target, output_dir, options,
                    TaskType::Classification);
}

TrainingReport train_regressor(const std::string& input_path,
                               const std::string& target,
                               const std::string& output_dir,
                               const TrainOptions& options) {
  return train_impl(input_path, target, output_dir, options,
                    TaskType::Regression);
}

InferenceResult infer_tabular(const std::string& bundle_path,
                              const std::string& data_path,
                              const std::string& output_dir,
                              const std::optional<std::string>& gt_column) {
  ModelBundle bundle = load_bundle(bundle_path);
  FeatureTable data = read_table(data_path);
  if (gt_column && data.column_index(*gt_column) < 0) {
    throw std::runtime_error("ground-truth column not found: " + *gt_column);
  }
  BundlePredictions preds = bundle_predict(bundle, data);

  fs::create_directories(output_dir);
  InferenceResult result;
  CsvDocument doc = table_to_csv(data);
  doc.header.push_back("prediction");
  if (bundle.task == TaskType::Classification) {
    for (const auto& label : bundle.class_labels) {
      doc.header.push_back("prob_" + label);
    }
    for (size_t r = 0; r < doc.rows.size(); ++r) {
      doc.rows[r].push_back(bundle.class_labels[preds.classes[r]]);
      for (double p : preds.probs[r]) doc.rows[r].push_back(format_double(p));
    }
  } else {
    for (size_t r = 0; r < doc.rows.size(); ++r) {
      doc.rows[r].push_back(format_double(preds.values[r]));
    }
  }
  result.predictions_path = (fs::path(output_dir) / "predictions.csv").string();
  write_csv_file(result.predictions_path, doc);

  if (gt_column) {
    int gc = data.column_index(*gt_column);
    if (bundle.task == TaskType::Classification) {
      std::vector<size_t> y_true;
      for (const auto& row : data.rows) {
        if (!row[gc]) throw std::runtime_error("missing ground-truth value");
        auto it = std::lower_bound(bundle.class_labels.begin(),
                                   bundle.class_labels.end(), *row[gc]);
        if (it == bundle.class_labels.end() || *it != *row[gc]) {
          throw std::runtime_error("ground-truth label not seen in training: " +
                                   *row[gc]);
        }
        y_true.push_back(static_cast<size_t>(it - bundle.class_labels.begin()));
      }
      result.metrics = compute_classification_metrics(
          y_true, preds.classes, preds.probs, bundle.class_labels.size());
    } else {
      std::vector<double> y_true;
      for (const auto& row : data.rows) {
        auto v = row[gc] ? parse_number(*row[gc]) : std::nullopt;
        if (!v) throw std::runtime_error("non-numeric ground-truth value");
        y_true.push_back(*v);
      }
      result.metrics = compute_regression_metrics(y_true, preds.values);
    }
    CsvDocument mdoc;
    mdoc.header = {"metric", "value"};
    for (const auto& [k, v] : result.metrics) {
      mdoc.rows.push_back({k, format_double(v)});
    }
    result.metrics_path = (fs::path(output_dir) / "metrics.csv").string();
    write_csv_file(*result.metrics_path, mdoc);
  }
  return result;
}

}  // namespace agentml
