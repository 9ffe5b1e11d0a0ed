#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace agentml {

using Matrix = std::vector<std::vector<double>>;
using HyperParams = std::map<std::string, double>;

// ---------------------------------------------------------------------------
// CART tree shared by classification (gini) and regression (variance).

struct TreeNode {
  int feature = -1;           // -1: leaf
  double threshold = 0.0;     // go left when x <= threshold
  int left = -1, right = -1;  // node indices
  std::vector<double> distribution;  // class probabilities (classification)
  double value = 0.0;                // mean (regression)
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  bool classification = false;
  size_t n_classes = 0;

  std::vector<double> predict_proba(const std::vector<double>& x) const;
  double predict_value(const std::vector<double>& x) const;
};

struct TreeOptions {
  size_t max_depth = 0;  // 0 = unbounded
  size_t min_leaf = 1;
  size_t max_features = 0;  // 0 = all
};

// Fits on the given sample indices; when `importance` is non-null, the
// weighted impurity decrease of every split is accumulated into it
// (one slot per feature).
DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y,
                      const std::vector<size_t>& sample_indices,
                      bool classification, size_t n_classes,
                      const TreeOptions& opts, uint64_t seed,
                      std::vector<double>* importance = nullptr);

// ---------------------------------------------------------------------------
// Model interfaces. y for classification is a class index in [0, n_classes).

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Matrix& X, const std::vector<double>& y,
                   size_t n_classes) = 0;
  virtual std::vector<double> predict_proba(
      const std::vector<double>& x) const = 0;
  size_t predict_class(const std::vector<double>& x) const;
  virtual nlohmann::json to_json() const = 0;
  virtual void from_json(const nlohmann::json& j) = 0;
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual void fit(const Matrix& X, const std::vector<double>& y) = 0;
  virtual double predict(const std::vector<double>& x) const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual void from_json(const nlohmann::json& j) = 0;
};

// Zoo membership.
std::vector<std::string> classifier_zoo();  // logreg, decision_tree, random_forest, knn, naive_bayes
std::vector<std::string> regressor_zoo();   // linear, ridge, decision_tree, random_forest, knn

std::unique_ptr<Classifier> make_classifier(const std::string& algorithm,
                                            const HyperParams& params,
                                            uint64_t seed);
std::unique_ptr<Regressor> make_regressor(const std::string& algorithm,
                                          const HyperParams& params,
                                          uint64_t seed);

// Random-forest impurity importance, normalized to sum 1 (uniform when all
// decreases are zero).
std::vector<double> forest_importance(const Matrix& X,
                                      const std::vector<double>& y,
                                      bool classification, size_t n_classes,
                                      size_t n_trees, uint64_t seed);

// Declared per-algorithm tuning grids (value lists per hyperparameter name).
std::map<std::string, std::vector<double>> tuning_grid(
    const std::string& algorithm, bool classification);

}  // namespace agentml
