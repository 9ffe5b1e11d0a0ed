#pragma once

#include <map>
#include <string>
#include <vector>

#include "agentml/table.hpp"

namespace agentml {

enum class ImportanceMethod { RandomForest, AnovaF, MutualInformation, Rfe };

ImportanceMethod importance_method_from_name(const std::string& name);
std::string importance_method_name(ImportanceMethod m);

struct ImportanceOptions {
  ImportanceMethod method = ImportanceMethod::RandomForest;
  std::vector<size_t> top_ks;
  bool make_plots = true;
  uint64_t seed = 0;
};

struct ImportanceResult {
  ImportanceMethod method;
  TaskType task_type;
  std::map<std::string, double> scores;
  std::vector<std::string> ranking;  // score desc, ties name asc
  std::vector<std::string> exported_files;
  std::vector<std::string> warnings;
};

// F statistic for a numeric feature against class labels; SSW=0 with SSB>0
// caps at 1e12, SSB=0 returns 0. Regression targets use the univariate
// linear-regression F with the same capping.
double anova_f_classification(const std::vector<double>& feature,
                              const std::vector<size_t>& classes);
double anova_f_regression(const std::vector<double>& feature,
                          const std::vector<double>& target);

// Plug-in MI estimator (nats); continuous sides discretized by equal-width
// bins over the observed range, max value clamped into the last bin.
double mutual_information(const std::vector<double>& feature,
                          const std::vector<double>& target, size_t bins = 10);

std::map<std::string, double> rf_importance(const FeatureTable& table,
                                            const std::string& target,
                                            size_t n_trees = 200,
                                            uint64_t seed = 0);

std::vector<std::string> rfe_select(const FeatureTable& table,
                                    const std::string& target, size_t n_keep,
                                    double step_fraction = 0.2,
                                    uint64_t seed = 0);

ImportanceResult run_feature_importance(const std::string& input_path,
                                        const std::string& target,
                                        const std::string& output_dir,
                                        const ImportanceOptions& options = {});

}  // namespace agentml
