#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentml/models.hpp"
#include "agentml/table.hpp"
#include "json.hpp"

namespace agentml {

struct ModelSpec {
  std::string algorithm;
  HyperParams hyperparams;
  uint64_t seed = 0;
};

struct CvResult {
  std::vector<std::map<std::string, double>> folds;
  std::map<std::string, double> mean;
  std::map<std::string, double> sd;  // sample sd over folds
  size_t fold_count = 0;
  bool stratified = false;
};

struct TrainOptions {
  size_t folds = 10;
  std::vector<std::string> exclude;
  bool normalize = true;
  bool transformation = false;  // accepted but unsupported; warns when set
  bool oversample = false;
  uint64_t seed = 0;
  size_t tune_iters = 20;
  bool make_plots = true;
};

struct LeaderboardEntry {
  ModelSpec spec;
  CvResult cv;
};

struct TrainingReport {
  TaskType task = TaskType::Classification;
  size_t folds_used = 0;
  std::vector<LeaderboardEntry> leaderboard;  // rank order
  std::vector<LeaderboardEntry> tuned;        // top-3 after tuning
  CvResult blended;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
};

// Per-row fold index. Classification uses per-class round-robin after a
// seeded shuffle (stratified); regression a plain seeded shuffle.
std::vector<size_t> fold_assignment(const FeatureTable& table,
                                    const std::string& target, TaskType task,
                                    size_t folds, uint64_t seed);

CvResult cross_validate(const ModelSpec& spec, const FeatureTable& table,
                        const std::string& target, size_t folds,
                        bool stratified, uint64_t seed);

// Seeded random search over the declared grid; best by the ranking metric
// (accuracy / r2), ties broken by first draw.
std::pair<ModelSpec, CvResult> tune(const ModelSpec& spec,
                                    const FeatureTable& table,
                                    const std::string& target,
                                    const std::map<std::string, std::vector<double>>& grid,
                                    size_t iters, uint64_t seed);

// Single-file model archive: JSON metadata with base64-embedded parameter
// blocks. A blended bundle carries the three member models.
struct ModelBundle {
  static constexpr int kFormatVersion = 1;
  TaskType task = TaskType::Classification;
  bool blended = false;
  std::vector<std::string> input_columns;  // raw columns the pipeline consumes
  ImputeStats impute_stats;
  EncodingPlan encoding;
  bool normalize = true;
  std::vector<double> norm_means, norm_sds;
  std::vector<std::string> feature_names;  // encoded, training order
  std::vector<std::string> class_labels;   // classification only
  std::map<std::string, double> training_metrics;

  struct Member {
    std::string algorithm;
    HyperParams hyperparams;
    uint64_t seed = 0;
    nlohmann::json params;
  };
  std::vector<Member> members;  // 1 plain, 3 blended
};

std::string save_bundle(const ModelBundle& bundle, const std::string& dir,
                        const std::string& name);
ModelBundle load_bundle(const std::string& path);

struct BundlePredictions {
  std::vector<size_t> classes;              // classification
  std::vector<std::vector<double>> probs;   // classification
  std::vector<double> values;               // regression
};
BundlePredictions bundle_predict(const ModelBundle& bundle,
                                 const FeatureTable& data);

TrainingReport train_classifier(const std::string& input_path,
                                const std::string& target,
                                const std::string& output_dir,
                                const TrainOptions& options = {});
TrainingReport train_regressor(const std::string& input_path,
                               const std::string& target,
                               const std::string& output_dir,
                               const TrainOptions& options = {});

struct InferenceResult {
  std::string predictions_path;
  std::optional<std::string> metrics_path;
  std::map<std::string, double> metrics;
};

// Realigns data columns to the bundle by name; extra columns are ignored and
// missing features are an error listing them. metrics are produced only when
// gt_column is given.
InferenceResult infer_tabular(const std::string& bundle_path,
                              const std::string& data_path,
                              const std::string& output_dir,
                              const std::optional<std::string>& gt_column = {});

}  // namespace agentml
