#include "agentml/native_tools.hpp"

#include <sstream>

#include "agentml/eda.hpp"
#include "agentml/importance.hpp"
#include "agentml/ml.hpp"
#include "agentml/radiomics.hpp"
#include "agentml/util.hpp"
#include "agentml/workspace.hpp"

namespace agentml {

namespace {

ParamSpec make_param(std::string name, ParamKind kind, bool required,
                     std::string description,
                     std::optional<nlohmann::json> def = {}) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = kind;
  p.required = required;
  p.default_value = std::move(def);
  p.description = std::move(description);
  return p;
}

ParamSpec make_enum(std::string name, std::vector<std::string> values,
                    std::string description, nlohmann::json def) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::Enum;
  p.enum_values = std::move(values);
  p.default_value = std::move(def);
  p.description = std::move(description);
  return p;
}

ParamSpec make_list(std::string name, ParamKind element,
                    std::string description) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::List;
  p.element_kind = element;
  p.description = std::move(description);
  return p;
}

std::string resolve_output_dir(const nlohmann::json& args, RunWorkspace& ws,
                               const std::string& fallback) {
  if (args.contains("output_dir")) {
    std::string dir = args["output_dir"].get<std::string>();
    std::filesystem::create_directories(dir);
    return dir;
  }
  return ws.subdir(fallback);
}

void append_warnings(std::ostringstream& out,
                     const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) out << "warning: " << w << "\n";
}

void register_eda_tool(ToolRegistry& registry) {
  ToolDescriptor d;
  d.name = "eda_report";
  d.description =
      "Profiles a CSV dataset: per-column statistics, missing values, IQR "
      "outliers, pairwise correlations, and distribution plots.";
  d.params = {
      make_param("input_path", ParamKind::Path, true, "CSV file to analyze"),
      make_param("output_dir", ParamKind::Path, false,
                 "where to write the report (default: a fresh run subdirectory)"),
      make_enum("correlation_method", {"pearson", "spearman"},
                "correlation coefficient to use", "pearson"),
      make_param("target_column", ParamKind::String, false,
                 "column to highlight in plots"),
      make_param("make_plots", ParamKind::Boolean, false,
                 "emit SVG figures alongside the CSV reports", true)};
  d.output_description =
      "summary_stats.csv, missing_report.csv, outliers.csv, correlations.csv, "
      "report.md, and optional SVG plots";
  registry.register_tool(d, [](const nlohmann::json& args, RunWorkspace& ws) {
    EdaOptions options;
    options.correlation_method =
        args["correlation_method"] == "spearman" ? CorrelationMethod::Spearman
                                                 : CorrelationMethod::Pearson;
    options.make_plots = args["make_plots"].get<bool>();
    if (args.contains("target_column")) {
      options.target_column = args["target_column"].get<std::string>();
    }
    std::string out_dir = resolve_output_dir(args, ws, "eda");
    EdaReport report =
        run_eda(args["input_path"].get<std::string>(), out_dir, options);
    ToolResult result;
    std::ostringstream summary;
    summary << "analyzed " << report.columns.size() << " columns, found "
            << report.outliers.size() << " outlier values\n";
    append_warnings(summary, report.notes);
    summary << "files:";
    for (const auto& a : report.artifacts) summary << "\n  " << a;
    result.summary = summary.str();
    result.artifacts = report.artifacts;
    result.metrics["n_columns"] = static_cast<double>(report.columns.size());
    result.metrics["n_outliers"] = static_cast<double>(report.outliers.size());
    return result;
  });
}

void register_importance_tool(ToolRegistry& registry) {
  ToolDescriptor d;
  d.name = "feature_importance";
  d.description =
      "Ranks the features of a CSV dataset against a target column and can "
      "export reduced datasets keeping only the strongest features.";
  d.params = {
      make_param("input_path", ParamKind::Path, true, "CSV file to analyze"),
      make_param("target", ParamKind::String, true, "target column name"),
      make_enum("method",
                {"random_forest", "anova_f", "mutual_information", "rfe"},
                "scoring method", "random_forest"),
      make_list("top_ks", ParamKind::Integer,
                "export datasets restricted to the top k features, one per k"),
      make_param("output_dir", ParamKind::Path, false,
                 "where to write results (default: a fresh run subdirectory)"),
      make_param("make_plots", ParamKind::Boolean, false,
                 "emit SVG figures", true),
      make_param("seed", ParamKind::Integer, false, "random seed", 0)};
  d.output_description =
      "importance_scores.csv, top_<k>_features.csv exports, and SVG plots";
  registry.register_tool(d, [](const nlohmann::json& args, RunWorkspace& ws) {
    ImportanceOptions options;
    options.method =
        importance_method_from_name(args["method"].get<std::string>());
    if (args.contains("top_ks")) {
      for (const auto& k : args["top_ks"]) {
        options.top_ks.push_back(k.get<size_t>());
      }
    }
    options.make_plots = args["make_plots"].get<bool>();
    options.seed = args["seed"].get<uint64_t>();
    std::string out_dir = resolve_output_dir(args, ws, "importance");
    ImportanceResult res =
        run_feature_importance(args["input_path"].get<std::string>(),
                               args["target"].get<std::string>(), out_dir,
                               options);
    ToolResult result;
    std::ostringstream summary;
    summary << "ranked " << res.ranking.size() << " features with "
            << importance_method_name(res.method) << "; top features:";
    for (size_t i = 0; i < res.ranking.size() && i < 5; ++i) {
      summary << (i ? ", " : " ") << res.ranking[i];
    }
    summary << "\n";
    append_warnings(summary, res.warnings);
    summary << "files:";
    for (const auto& a : res.exported_files) summary << "\n  " << a;
    result.summary = summary.str();
    result.artifacts = res.exported_files;
    return result;
  });
}

std::vector<ParamSpec> training_params(const std::string& zoo_hint) {
  return {
      make_param("input_path", ParamKind::Path, true, "training CSV file"),
      make_param("target", ParamKind::String, true, "target column name"),
      make_param("folds", ParamKind::Integer, false,
                 "cross-validation folds", 10),
      make_list("exclude", ParamKind::String,
                "algorithms to leave out (" + zoo_hint + ")"),
      make_param("normalize", ParamKind::Boolean, false,
                 "standardize numeric features", true),
      make_param("transformation", ParamKind::Boolean, false,
                 "request a target transformation (currently a no-op)", false),
      make_param("oversample", ParamKind::Boolean, false,
                 "oversample minority classes inside training folds", false),
      make_param("seed", ParamKind::Integer, false, "random seed", 0),
      make_param("tune_iters", ParamKind::Integer, false,
                 "random-search draws per tuned model", 20),
      make_param("make_plots", ParamKind::Boolean, false,
                 "emit SVG figures", true),
      make_param("output_dir", ParamKind::Path, false,
                 "where to write results (default: a fresh run subdirectory)")};
}

TrainOptions options_from_args(const nlohmann::json& args) {
  TrainOptions options;
  options.folds = args["folds"].get<size_t>();
  if (args.contains("exclude")) {
    for (const auto& e : args["exclude"]) {
      options.exclude.push_back(e.get<std::string>());
    }
  }
  options.normalize = args["normalize"].get<bool>();
  options.transformation = args["transformation"].get<bool>();
  options.oversample = args["oversample"].get<bool>();
  options.seed = args["seed"].get<uint64_t>();
  options.tune_iters = args["tune_iters"].get<size_t>();
  options.make_plots = args["make_plots"].get<bool>();
  return options;
}

ToolResult training_result(const TrainingReport& report,
                           const std::string& metric) {
  ToolResult result;
  std::ostringstream summary;
  summary << "evaluated " << report.leaderboard.size() << " algorithms over "
          << report.folds_used << " folds; leaderboard:\n";
  for (size_t i = 0; i < report.leaderboard.size(); ++i) {
    const auto& entry = report.leaderboard[i];
    summary << "  " << (i + 1) << ". " << entry.spec.algorithm << " "
            << metric << "=" << format_double(entry.cv.mean.at(metric))
            << "\n";
  }
  summary << "blended model " << metric << "="
          << format_double(report.blended.mean.at(metric)) << "\n";
  append_warnings(summary, report.warnings);
  summary << "files:";
  for (const auto& a : report.artifacts) summary << "\n  " << a;
  result.summary = summary.str();
  result.artifacts = report.artifacts;
  result.metrics["blended_" + metric] = report.blended.mean.at(metric);
  return result;
}

void register_training_tools(ToolRegistry& registry) {
  ToolDescriptor cls;
  cls.name = "train_classifier";
  cls.description =
      "Benchmarks a zoo of classifiers with stratified cross-validation, "
      "tunes the top three, and saves them plus a blended ensemble.";
  cls.params = training_params(
      "logreg, decision_tree, random_forest, knn, naive_bayes");
  cls.output_description =
      "leaderboard.csv, metrics.csv, saved model bundles, and evaluation "
      "plots";
  registry.register_tool(cls, [](const nlohmann::json& args, RunWorkspace& ws) {
    TrainingReport report = train_classifier(
        args["input_path"].get<std::string>(),
        args["target"].get<std::string>(),
        resolve_output_dir(args, ws, "train_classifier"),
        options_from_args(args));
    return training_result(report, "accuracy");
  });

  ToolDescriptor reg;
  reg.name = "train_regressor";
  reg.description =
      "Benchmarks a zoo of regressors with cross-validation, tunes the top "
      "three, and saves them plus a blended ensemble.";
  reg.params =
      training_params("linear, ridge, decision_tree, random_forest, knn");
  reg.output_description =
      "leaderboard.csv, metrics.csv, saved model bundles, and evaluation "
      "plots";
  registry.register_tool(reg, [](const nlohmann::json& args, RunWorkspace& ws) {
    TrainingReport report = train_regressor(
        args["input_path"].get<std::string>(),
        args["target"].get<std::string>(),
        resolve_output_dir(args, ws, "train_regressor"),
        options_from_args(args));
    return training_result(report, "r2");
  });
}

void register_infer_tool(ToolRegistry& registry) {
  ToolDescriptor d;
  d.name = "tabular_infer";
  d.description =
      "Applies a saved model bundle to a CSV file; columns are matched by "
      "name, and metrics are computed when a ground-truth column is named.";
  d.params = {
      make_param("bundle_path", ParamKind::Path, true, "saved .mbundle file"),
      make_param("data_path", ParamKind::Path, true, "CSV file to score"),
      make_param("gt_column", ParamKind::String, false,
                 "ground-truth column for evaluation metrics"),
      make_param("output_dir", ParamKind::Path, false,
                 "where to write results (default: a fresh run subdirectory)")};
  d.output_description = "predictions.csv and, with ground truth, metrics.csv";
  registry.register_tool(d, [](const nlohmann::json& args, RunWorkspace& ws) {
    std::optional<std::string> gt;
    if (args.contains("gt_column")) gt = args["gt_column"].get<std::string>();
    InferenceResult res = infer_tabular(
        args["bundle_path"].get<std::string>(),
        args["data_path"].get<std::string>(),
        resolve_output_dir(args, ws, "infer"), gt);
    ToolResult result;
    std::ostringstream summary;
    summary << "wrote predictions to " << res.predictions_path << "\n";
    if (res.metrics_path) {
      summary << "metrics:";
      for (const auto& [k, v] : res.metrics) {
        summary << " " << k << "=" << format_double(v);
      }
      summary << "\nfiles:\n  " << res.predictions_path << "\n  "
              << *res.metrics_path;
      result.artifacts = {res.predictions_path, *res.metrics_path};
    } else {
      summary << "files:\n  " << res.predictions_path;
      result.artifacts = {res.predictions_path};
    }
    result.summary = summary.str();
    result.metrics = res.metrics;
    return result;
  });
}

void register_radiomics_tools(ToolRegistry& registry) {
  ToolDescriptor d;
  d.name = "radiomics_extract";
  d.description =
      "Extracts quantitative imaging features (intensity, shape, texture) "
      "from paired image and mask volumes, one CSV per mask label.";
  d.params = {
      make_param("image_dir", ParamKind::Path, true,
                 "directory of image volumes (.nii or .nii.gz)"),
      make_param("mask_dir", ParamKind::Path, true,
                 "directory of segmentation masks named after the cases"),
      make_param("output_dir", ParamKind::Path, false,
                 "where to write results (default: a fresh run subdirectory)"),
      make_param("bin_width", ParamKind::Float, false,
                 "intensity discretization bin width", 25.0),
      make_list("filters", ParamKind::String,
                "derived images to process: original, gradient, squareroot, "
                "exponential, log, wavelet (default original)"),
      make_list("log_sigmas", ParamKind::Float,
                "Gaussian sigmas in mm for the log filter"),
      make_list("feature_classes", ParamKind::String,
                "feature families: firstorder, shape, glcm, glrlm, glszm, "
                "gldm, ngtdm (default all)"),
      make_param("resample_spacing", ParamKind::Float, false,
                 "isotropic voxel spacing in mm to resample to"),
      make_enum("mode", {"3d", "2d_slicewise"},
                "aggregate texture in 3D or per axial slice", "3d"),
      make_list("labels", ParamKind::Integer,
                "mask labels to extract (default: every present label)"),
      make_param("workers", ParamKind::Integer, false,
                 "parallel worker threads", 1),
      make_param("targets_csv", ParamKind::Path, false,
                 "targets table to merge into the feature CSVs"),
      make_param("id_column", ParamKind::String, false,
                 "id column of the targets table", "subject_id")};
  d.output_description =
      "features_label_<L>.csv per label, extraction_params.json, report.md, "
      "and merged *_with_targets.csv when targets are given";
  registry.register_tool(d, [](const nlohmann::json& args, RunWorkspace& ws) {
    ExtractionConfig config;
    if (args.contains("filters")) {
      config.filters.clear();
      for (const auto& f : args["filters"]) {
        config.filters.push_back(f.get<std::string>());
      }
    }
    if (args.contains("log_sigmas")) {
      for (const auto& s : args["log_sigmas"]) {
        config.log_sigmas.push_back(s.get<double>());
      }
    }
    if (args.contains("feature_classes")) {
      config.feature_classes.clear();
      for (const auto& c : args["feature_classes"]) {
        config.feature_classes.push_back(c.get<std::string>());
      }
    }
    config.bin_width = args["bin_width"].get<double>();
    if (args.contains("resample_spacing")) {
      config.resample_spacing = args["resample_spacing"].get<double>();
    }
    config.mode = args["mode"].get<std::string>();
    if (args.contains("labels")) {
      for (const auto& l : args["labels"]) {
        config.labels.push_back(l.get<int>());
      }
    }
    config.workers = args["workers"].get<size_t>();
    if (args.contains("targets_csv")) {
      config.targets_csv = args["targets_csv"].get<std::string>();
    }
    config.id_column = args["id_column"].get<std::string>();
    BatchResult batch = extract_batch(
        args["image_dir"].get<std::string>(),
        args["mask_dir"].get<std::string>(), config,
        resolve_output_dir(args, ws, "radiomics"));
    ToolResult result;
    std::ostringstream summary;
    summary << "extracted features into " << batch.csv_paths.size()
            << " per-label CSVs";
    if (!batch.failures.empty()) {
      summary << "; " << batch.failures.size() << " cases failed";
    }
    summary << "\n";
    for (const auto& [subject, reason] : batch.failures) {
      summary << "failed: " << subject << " (" << reason << ")\n";
    }
    append_warnings(summary, batch.warnings);
    summary << "files:";
    result.artifacts = batch.csv_paths;
    result.artifacts.insert(result.artifacts.end(), batch.merged_paths.begin(),
                            batch.merged_paths.end());
    result.artifacts.push_back(batch.params_path);
    result.artifacts.push_back(batch.report_path);
    for (const auto& a : result.artifacts) summary << "\n  " << a;
    result.summary = summary.str();
    result.metrics["n_failures"] = static_cast<double>(batch.failures.size());
    if (batch.csv_paths.empty()) result.status = ToolResult::Status::Failed;
    return result;
  });

  ToolDescriptor merge;
  merge.name = "merge_targets";
  merge.description =
      "Left-joins a feature CSV with a targets CSV on an id column, keeping "
      "the feature rows in place.";
  merge.params = {
      make_param("features_csv", ParamKind::Path, true,
                 "feature table whose first column holds the subject id"),
      make_param("targets_csv", ParamKind::Path, true,
                 "table of target values keyed by subject id"),
      make_param("id_column", ParamKind::String, false,
                 "join column of the targets table", "subject_id"),
      make_param("output_path", ParamKind::Path, true, "merged CSV to write")};
  merge.output_description = "the merged CSV path and the unmatched-row count";
  registry.register_tool(merge, [](const nlohmann::json& args,
                                   RunWorkspace&) {
    MergeResult res = merge_targets(args["features_csv"].get<std::string>(),
                                    args["targets_csv"].get<std::string>(),
                                    args["id_column"].get<std::string>(),
                                    args["output_path"].get<std::string>());
    ToolResult result;
    result.summary = "merged targets into " + res.output_path + " (" +
                     std::to_string(res.unmatched_rows) +
                     " feature rows had no target)";
    result.artifacts = {res.output_path};
    result.metrics["unmatched_rows"] = static_cast<double>(res.unmatched_rows);
    return result;
  });
}

}  // namespace

void register_native_tools(ToolRegistry& registry) {
  register_eda_tool(registry);
  register_importance_tool(registry);
  register_training_tools(registry);
  register_infer_tool(registry);
  register_radiomics_tools(registry);
}

}  // namespace agentml
