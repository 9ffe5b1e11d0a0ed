#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "agentml/eda.hpp"
#include "agentml/importance.hpp"
#include "agentml/metrics.hpp"
#include "agentml/ml.hpp"
#include "agentml/stats.hpp"
#include "agentml/table.hpp"
#include "agentml/util.hpp"
#include "doctest.h"

using namespace agentml;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("agentml_tab_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Two well-separated gaussian blobs with a categorical passenger column.
std::string write_separable_classification(const fs::path& path, size_t n,
                                           uint64_t seed) {
  Rng rng(seed);
  CsvDocument doc;
  doc.header = {"f1", "f2", "site", "label"};
  for (size_t i = 0; i < n; ++i) {
    int cls = static_cast<int>(i % 2);
    double cx = cls == 0 ? -4.0 : 4.0;
    doc.rows.push_back({format_double(cx + rng.normal() * 0.5),
                        format_double(-cx + rng.normal() * 0.5),
                        i % 3 == 0 ? "A" : "B",
                        cls == 0 ? "healthy" : "sick"});
  }
  write_csv_file(path.string(), doc);
  return path.string();
}

// y = 3*x1 - 2*x2 + 5, noiseless.
std::string write_linear_regression(const fs::path& path, size_t n,
                                    uint64_t seed) {
  Rng rng(seed);
  CsvDocument doc;
  doc.header = {"x1", "x2", "y"};
  for (size_t i = 0; i < n; ++i) {
    double x1 = rng.uniform_double() * 10;
    double x2 = rng.uniform_double() * 10;
    doc.rows.push_back({format_double(x1), format_double(x2),
                        format_double(3 * x1 - 2 * x2 + 5)});
  }
  write_csv_file(path.string(), doc);
  return path.string();
}

}  // namespace

// ---------------------------------------------------------------------------
// stats

TEST_CASE("quantiles interpolate linearly") {
  std::vector<double> v = {1, 2, 3, 4};
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
}

TEST_CASE("iqr outliers flag the classic 100-in-small-list case") {
  std::vector<std::optional<double>> v = {1, 2, 3, 4, 100};
  std::vector<size_t> out = iqr_outliers(v);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 4);
  CHECK(*v[out[0]] == 100.0);
  // missing values are never flagged
  std::vector<std::optional<double>> with_gap = {1, std::nullopt, 2, 3, 4, 100};
  out = iqr_outliers(with_gap);
  REQUIRE(out.size() == 1);
  CHECK(*with_gap[out[0]] == 100.0);
}

TEST_CASE("spearman is 1 for any monotone map, pearson for affine only") {
  std::vector<std::optional<double>> x = {1, 2, 3, 4, 5};
  std::vector<std::optional<double>> cubed = {1, 8, 27, 64, 125};
  CHECK(*spearman(x, cubed) == doctest::Approx(1.0));
  CHECK(*pearson(x, cubed) < 1.0);
  std::vector<std::optional<double>> affine = {3, 5, 7, 9, 11};
  CHECK(*pearson(x, affine) == doctest::Approx(1.0));
  std::vector<std::optional<double>> flat = {2, 2, 2, 2, 2};
  CHECK_FALSE(pearson(x, flat).has_value());
}

TEST_CASE("adjusted moments match hand-computed values") {
  // for {2, 4, 4, 4, 5, 5, 7, 9}: mean 5, sample sd ~2.1381
  std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean_of(v) == doctest::Approx(5.0));
  CHECK(sample_sd(v) == doctest::Approx(2.13809).epsilon(1e-4));
  // symmetric inputs have zero skew
  CHECK(adjusted_skewness({1, 2, 3, 4, 5}) == doctest::Approx(0.0));
}

// ---------------------------------------------------------------------------
// metrics

TEST_CASE("binary auc matches the hand-counted pair fraction") {
  // scores: positives {0.8, 0.6}, negatives {0.7, 0.2}
  // concordant pairs: (0.8>0.7),(0.8>0.2),(0.6>0.2) = 3 of 4 -> 0.75
  std::vector<size_t> y = {1, 1, 0, 0};
  std::vector<double> s = {0.8, 0.6, 0.7, 0.2};
  CHECK(binary_auc(y, s) == 0.75);
  // ties earn half credit
  CHECK(binary_auc({1, 0}, {0.5, 0.5}) == 0.5);
  // degenerate single-class input
  CHECK(binary_auc({1, 1}, {0.1, 0.9}) == 0.5);
}

TEST_CASE("classification metrics on a worked 2-class confusion") {
  // TP=2 FN=1 FP=1 TN=2: acc 4/6, prec/rec 2/3, f1 2/3
  std::vector<size_t> y_true = {1, 1, 1, 0, 0, 0};
  std::vector<size_t> y_pred = {1, 1, 0, 1, 0, 0};
  std::vector<std::vector<double>> probs;
  for (size_t p : y_pred) {
    probs.push_back({p == 0 ? 0.9 : 0.1, p == 0 ? 0.1 : 0.9});
  }
  auto m = compute_classification_metrics(y_true, y_pred, probs, 2);
  CHECK(m["accuracy"] == doctest::Approx(4.0 / 6.0));
  CHECK(m["recall"] == doctest::Approx(2.0 / 3.0));
  CHECK(m["precision"] == doctest::Approx(2.0 / 3.0));
  CHECK(m["f1"] == doctest::Approx(2.0 / 3.0));
  // kappa = (po - pe) / (1 - pe), po = 2/3, pe = 1/2
  CHECK(m["kappa"] == doctest::Approx((2.0 / 3.0 - 0.5) / 0.5));
  // MCC for symmetric confusion = kappa here
  CHECK(m["mcc"] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("regression metrics on exact and known-offset predictions") {
  std::vector<double> y = {1, 2, 3, 4};
  auto perfect = compute_regression_metrics(y, y);
  CHECK(perfect["mae"] == 0.0);
  CHECK(perfect["rmse"] == 0.0);
  CHECK(perfect["r2"] == 1.0);
  auto off = compute_regression_metrics(y, {2, 3, 4, 5});
  CHECK(off["mae"] == doctest::Approx(1.0));
  CHECK(off["mse"] == doctest::Approx(1.0));
  // sum sq err 4, total 5 -> r2 = 1 - 4/5
  CHECK(off["r2"] == doctest::Approx(1.0 - 4.0 / 5.0));
  // negative targets fall out of rmsle/mape with a counter, not a crash
  auto neg = compute_regression_metrics({-1, 2}, {-1, 2});
  CHECK(neg["rmsle_excluded"] >= 1.0);
}

// ---------------------------------------------------------------------------
// eda

TEST_CASE("eda writes its report files and finds planted outliers") {
  auto dir = fresh_dir("eda");
  CsvDocument doc;
  doc.header = {"val", "group"};
  for (int i = 1; i <= 20; ++i) {
    doc.rows.push_back({std::to_string(i % 5 + 1), i % 2 ? "x" : "y"});
  }
  doc.rows.push_back({"1000", "x"});
  std::string input = (dir / "data.csv").string();
  write_csv_file(input, doc);
  EdaReport report = run_eda(input, (dir / "out").string());
  CHECK(fs::exists(dir / "out" / "summary_stats.csv"));
  CHECK(fs::exists(dir / "out" / "missing_report.csv"));
  CHECK(fs::exists(dir / "out" / "outliers.csv"));
  CHECK(fs::exists(dir / "out" / "correlations.csv"));
  CHECK(fs::exists(dir / "out" / "report.md"));
  bool found_outlier = false;
  for (const auto& o : report.outliers) {
    if (o.value == 1000.0) found_outlier = true;
  }
  CHECK(found_outlier);
}

TEST_CASE("eda summary values match a two-pass reference") {
  auto dir = fresh_dir("eda_vals");
  CsvDocument doc;
  doc.header = {"v"};
  std::vector<double> data = {1.5, 2.25, 3.0, 4.75, 8.125};
  for (double d : data) doc.rows.push_back({format_double(d)});
  std::string input = (dir / "nums.csv").string();
  write_csv_file(input, doc);
  EdaReport report = run_eda(input, (dir / "out").string());
  REQUIRE(report.columns.size() == 1);
  REQUIRE(report.columns[0].numeric.has_value());
  const NumericSummary& s = *report.columns[0].numeric;
  double mean = 0;
  for (double d : data) mean += d;
  mean /= data.size();
  double ss = 0;
  for (double d : data) ss += (d - mean) * (d - mean);
  CHECK(std::abs(s.mean - mean) <= 1e-12 * std::abs(mean));
  CHECK(std::abs(s.sd - std::sqrt(ss / (data.size() - 1))) <= 1e-12);
  CHECK(s.min == 1.5);
  CHECK(s.max == 8.125);
  CHECK(s.median == 3.0);
}

// ---------------------------------------------------------------------------
// feature importance

TEST_CASE("anova F separates informative from noise features") {
  std::vector<size_t> classes;
  std::vector<double> informative, noise;
  Rng rng(11);
  for (int i = 0; i < 60; ++i) {
    size_t c = i % 2;
    classes.push_back(c);
    informative.push_back((c ? 10.0 : -10.0) + rng.normal());
    noise.push_back(rng.normal());
  }
  CHECK(anova_f_classification(informative, classes) >
        100 * anova_f_classification(noise, classes));
  // constant feature: SSB = 0
  CHECK(anova_f_classification(std::vector<double>(60, 2.0), classes) == 0.0);
}

TEST_CASE("mutual information ranks a copy above independent noise") {
  Rng rng(5);
  std::vector<double> target, copy, indep;
  for (int i = 0; i < 200; ++i) {
    double t = rng.normal();
    target.push_back(t);
    copy.push_back(t);
    indep.push_back(rng.normal());
  }
  CHECK(mutual_information(copy, target) > mutual_information(indep, target));
  CHECK(mutual_information(indep, target) >= 0.0);
}

TEST_CASE("rfe keeps the signal feature") {
  auto dir = fresh_dir("rfe");
  std::string input =
      write_separable_classification(dir / "sep.csv", 40, 3);
  FeatureTable t = read_table(input);
  std::vector<std::string> kept = rfe_select(t, "label", 1);
  REQUIRE(kept.size() == 1);
  CHECK((kept[0] == "f1" || kept[0] == "f2"));
  CHECK_THROWS(rfe_select(t, "label", 0));
}

TEST_CASE("run_feature_importance exports scores and top-k datasets") {
  auto dir = fresh_dir("importance");
  std::string input =
      write_separable_classification(dir / "sep.csv", 40, 9);
  ImportanceOptions options;
  options.method = ImportanceMethod::AnovaF;
  options.top_ks = {2};
  ImportanceResult res =
      run_feature_importance(input, "label", (dir / "out").string(), options);
  CHECK(fs::exists(dir / "out" / "importance_scores.csv"));
  CHECK(fs::exists(dir / "out" / "top_2_features.csv"));
  CHECK((res.ranking[0] == "f1" || res.ranking[0] == "f2"));

  CsvDocument top = read_csv_file((dir / "out" / "top_2_features.csv").string());
  REQUIRE(top.header.size() == 3);  // 2 features + target
  CHECK(top.header.back() == "label");
  CHECK(top.rows.size() == 40);
}

// ---------------------------------------------------------------------------
// tabular ml

TEST_CASE("stratified folds balance both classes") {
  auto dir = fresh_dir("folds");
  std::string input =
      write_separable_classification(dir / "sep.csv", 30, 21);
  FeatureTable t = read_table(input);
  std::vector<size_t> folds =
      fold_assignment(t, "label", TaskType::Classification, 3, 0);
  REQUIRE(folds.size() == 30);
  std::map<size_t, std::map<std::string, int>> per_fold;
  int label_col = t.column_index("label");
  for (size_t i = 0; i < folds.size(); ++i) {
    per_fold[folds[i]][*t.rows[i][label_col]]++;
  }
  REQUIRE(per_fold.size() == 3);
  for (const auto& [fold, counts] : per_fold) {
    CHECK(counts.at("healthy") == 5);
    CHECK(counts.at("sick") == 5);
  }
  CHECK_THROWS(fold_assignment(t, "label", TaskType::Classification, 1, 0));
  CHECK_THROWS(fold_assignment(t, "label", TaskType::Classification, 31, 0));
}

TEST_CASE("classifier training produces a leaderboard, bundles, and plots") {
  auto dir = fresh_dir("train_cls");
  std::string input =
      write_separable_classification(dir / "train.csv", 60, 17);
  TrainOptions options;
  options.folds = 3;
  options.tune_iters = 3;
  TrainingReport report =
      train_classifier(input, "label", (dir / "out").string(), options);
  CHECK(report.task == TaskType::Classification);
  CHECK(report.leaderboard.size() == 5);
  CHECK(report.tuned.size() == 3);
  CHECK(report.blended.mean.at("accuracy") > 0.9);
  CHECK(fs::exists(dir / "out" / "leaderboard.csv"));
  CHECK(fs::exists(dir / "out" / "metrics.csv"));
  CHECK(fs::exists(dir / "out" / "models" / "blended_model" / "model.mbundle"));
  CHECK(fs::exists(dir / "out" / "models" / "tuned_model_1" / "model.mbundle"));
  CHECK(fs::exists(dir / "out" / "roc.svg"));
  CHECK(fs::exists(dir / "out" / "confusion_matrix.svg"));
  CHECK(fs::exists(dir / "out" / "learning_curve.svg"));

  CsvDocument lb = read_csv_file((dir / "out" / "leaderboard.csv").string());
  CHECK(lb.header[0] == "rank");
  CHECK(lb.header[1] == "algorithm");
  CHECK(lb.header[2] == "accuracy_mean");
  CHECK(lb.rows.size() == 5);
  // leaderboard sorted by the ranking metric, best first
  double prev = 2.0;
  for (const auto& row : lb.rows) {
    double acc = std::stod(row[2]);
    CHECK(acc <= prev + 1e-12);
    prev = acc;
  }
}

TEST_CASE("unknown excluded model warns, excessive folds are reduced") {
  auto dir = fresh_dir("train_warn");
  std::string input =
      write_separable_classification(dir / "small.csv", 8, 2);
  TrainOptions options;
  options.folds = 10;  // only 4 per class available
  options.tune_iters = 2;
  options.exclude = {"decision_tree", "quantum_forest"};
  options.make_plots = false;
  TrainingReport report =
      train_classifier(input, "label", (dir / "out").string(), options);
  CHECK(report.leaderboard.size() == 4);
  CHECK(report.folds_used < 10);
  bool warned_unknown = false, warned_folds = false;
  for (const auto& w : report.warnings) {
    if (w.find("unknown model name ignored") != std::string::npos) {
      warned_unknown = true;
    }
    if (w.find("fold") != std::string::npos) warned_folds = true;
  }
  CHECK(warned_unknown);
  CHECK(warned_folds);
}

TEST_CASE("regressor recovers a noiseless linear law") {
  auto dir = fresh_dir("train_reg");
  std::string input = write_linear_regression(dir / "lin.csv", 50, 31);
  TrainOptions options;
  options.folds = 3;
  options.tune_iters = 2;
  options.make_plots = false;
  TrainingReport report =
      train_regressor(input, "y", (dir / "out").string(), options);
  CHECK(report.task == TaskType::Regression);
  // the linear member must top a noiseless linear problem
  CHECK(report.leaderboard[0].spec.algorithm == "linear");
  CHECK(report.leaderboard[0].cv.mean.at("r2") > 0.999);
}

TEST_CASE("training output bytes are seed-deterministic") {
  auto dir = fresh_dir("determinism");
  std::string input =
      write_separable_classification(dir / "train.csv", 40, 77);
  TrainOptions options;
  options.folds = 3;
  options.tune_iters = 2;
  options.make_plots = false;
  train_classifier(input, "label", (dir / "a").string(), options);
  train_classifier(input, "label", (dir / "b").string(), options);
  CHECK(read_file((dir / "a" / "leaderboard.csv").string()) ==
        read_file((dir / "b" / "leaderboard.csv").string()));
  CHECK(read_file((dir / "a" / "metrics.csv").string()) ==
        read_file((dir / "b" / "metrics.csv").string()));
  CHECK(
      read_file((dir / "a" / "models" / "blended_model" / "model.mbundle")
                    .string()) ==
      read_file((dir / "b" / "models" / "blended_model" / "model.mbundle")
                    .string()));
}

TEST_CASE("bundle inference realigns columns by name") {
  auto dir = fresh_dir("infer");
  std::string input =
      write_separable_classification(dir / "train.csv", 40, 51);
  TrainOptions options;
  options.folds = 3;
  options.tune_iters = 2;
  options.make_plots = false;
  train_classifier(input, "label", (dir / "out").string(), options);
  std::string bundle =
      (dir / "out" / "models" / "blended_model" / "model.mbundle").string();

  // reorder columns, add an extra, rename the target away
  CsvDocument original = read_csv_file(input);
  CsvDocument shuffled;
  shuffled.header = {"extra", "site", "f2", "f1", "label"};
  for (const auto& row : original.rows) {
    shuffled.rows.push_back({"ignored", row[2], row[1], row[0], row[3]});
  }
  std::string data = (dir / "scored.csv").string();
  write_csv_file(data, shuffled);

  InferenceResult res =
      infer_tabular(bundle, data, (dir / "pred").string(), "label");
  CHECK(res.metrics.at("accuracy") > 0.9);
  CsvDocument preds = read_csv_file(res.predictions_path);
  CHECK(preds.header.front() == "extra");
  bool has_prediction = false, has_prob = false;
  for (const auto& h : preds.header) {
    if (h == "prediction") has_prediction = true;
    if (h.rfind("prob_", 0) == 0) has_prob = true;
  }
  CHECK(has_prediction);
  CHECK(has_prob);

  // missing feature column -> error naming it
  CsvDocument missing;
  missing.header = {"f1", "site"};
  missing.rows = {{"1.0", "A"}};
  std::string missing_path = (dir / "missing.csv").string();
  write_csv_file(missing_path, missing);
  CHECK_THROWS_WITH_AS(
      infer_tabular(bundle, missing_path, (dir / "pred2").string()),
      doctest::Contains("missing feature columns"), std::runtime_error);
}

TEST_CASE("bundle files reject corruption and foreign versions") {
  auto dir = fresh_dir("bundle_guard");
  write_file((dir / "junk.mbundle").string(), "{not json");
  CHECK_THROWS_WITH_AS(load_bundle((dir / "junk.mbundle").string()),
                       doctest::Contains("corrupted"), std::runtime_error);
  nlohmann::json j;
  j["format_version"] = 9;
  write_file((dir / "future.mbundle").string(), j.dump());
  CHECK_THROWS_WITH_AS(load_bundle((dir / "future.mbundle").string()),
                       doctest::Contains("format_version 9"),
                       std::runtime_error);
}
