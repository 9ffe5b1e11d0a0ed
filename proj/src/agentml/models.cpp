#include "agentml/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "agentml/util.hpp"

namespace agentml {

namespace {

double param_or(const HyperParams& p, const std::string& name, double fallback) {
  auto it = p.find(name);
  return it != p.end() ? it->second : fallback;
}

std::vector<double> normalize_counts(const std::vector<double>& counts) {
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> out(counts.size(), 0.0);
  if (total > 0) {
    for (size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / total;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// CART

std::vector<double> DecisionTree::predict_proba(
    const std::vector<double>& x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  }
  return nodes[i].distribution;
}

double DecisionTree::predict_value(const std::vector<double>& x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  }
  return nodes[i].value;
}

namespace {

struct TreeBuilder {
  const Matrix& X;
  const std::vector<double>& y;
  bool classification;
  size_t n_classes;
  const TreeOptions& opts;
  Rng rng;
  std::vector<double>* importance;
  double total_weight;
  DecisionTree tree;

  double node_impurity(const std::vector<size_t>& idx) const {
    if (classification) {
      std::vector<double> counts(n_classes, 0.0);
      for (size_t i : idx) counts[static_cast<size_t>(y[i])] += 1.0;
      double n = static_cast<double>(idx.size());
      double gini = 1.0;
      for (double c : counts) gini -= (c / n) * (c / n);
      return gini;
    }
    double m = 0.0;
    for (size_t i : idx) m += y[i];
    m /= static_cast<double>(idx.size());
    double v = 0.0;
    for (size_t i : idx) v += (y[i] - m) * (y[i] - m);
    return v / static_cast<double>(idx.size());
  }

  int make_leaf(const std::vector<size_t>& idx) {
    TreeNode node;
    if (classification) {
      std::vector<double> counts(n_classes, 0.0);
      for (size_t i : idx) counts[static_cast<size_t>(y[i])] += 1.0;
      node.distribution = normalize_counts(counts);
    } else {
      double m = 0.0;
      for (size_t i : idx) m += y[i];
      node.value = m / static_cast<double>(idx.size());
    }
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size() - 1);
  }

  // Best split on one feature; returns impurity-weighted gain and threshold.
  bool best_split_on(const std::vector<size_t>& idx, size_t feature,
                     double parent_impurity, double& best_gain,
                     double& best_threshold) const {
    size_t n = idx.size();
    std::vector<std::pair<double, double>> vals(n);  // (x, y)
    for (size_t k = 0; k < n; ++k) {
      vals[k] = {X[idx[k]][feature], y[idx[k]]};
    }
    std::sort(vals.begin(), vals.end());
    bool found = false;
    if (classification) {
      std::vector<double> left(n_classes, 0.0), total(n_classes, 0.0);
      for (const auto& [xv, yv] : vals) total[static_cast<size_t>(yv)] += 1.0;
      for (size_t k = 0; k + 1 < n; ++k) {
        left[static_cast<size_t>(vals[k].second)] += 1.0;
        if (vals[k].first == vals[k + 1].first) continue;
        size_t nl = k + 1, nr = n - nl;
        if (nl < opts.min_leaf || nr < opts.min_leaf) continue;
        double gl = 1.0, gr = 1.0;
        for (size_t c = 0; c < n_classes; ++c) {
          double l = left[c] / static_cast<double>(nl);
          double r = (total[c] - left[c]) / static_cast<double>(nr);
          gl -= l * l;
          gr -= r * r;
        }
        double child = (static_cast<double>(nl) * gl +
                        static_cast<double>(nr) * gr) /
                       static_cast<double>(n);
        double gain = parent_impurity - child;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_threshold = (vals[k].first + vals[k + 1].first) / 2.0;
          found = true;
        }
      }
    } else {
      double sum_l = 0.0, sq_l = 0.0, sum_t = 0.0, sq_t = 0.0;
      for (const auto& [xv, yv] : vals) {
        sum_t += yv;
        sq_t += yv * yv;
      }
      for (size_t k = 0; k + 1 < n; ++k) {
        sum_l += vals[k].second;
        sq_l += vals[k].second * vals[k].second;
        if (vals[k].first == vals[k + 1].first) continue;
        double nl = static_cast<double>(k + 1);
        double nr = static_cast<double>(n - k - 1);
        if (nl < static_cast<double>(opts.min_leaf) ||
            nr < static_cast<double>(opts.min_leaf)) {
          continue;
        }
        double var_l = sq_l / nl - (sum_l / nl) * (sum_l / nl);
        double sum_r = sum_t - sum_l, sq_r = sq_t - sq_l;
        double var_r = sq_r / nr - (sum_r / nr) * (sum_r / nr);
        double child = (nl * var_l + nr * var_r) / static_cast<double>(n);
        double gain = parent_impurity - child;
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_threshold = (vals[k].first + vals[k + 1].first) / 2.0;
          found = true;
        }
      }
    }
    return found;
  }

  int build(const std::vector<size_t>& idx, size_t depth) {
    double impurity = node_impurity(idx);
    bool stop = idx.size() < 2 * opts.min_leaf || impurity <= 1e-12 ||
                (opts.max_depth > 0 && depth >= opts.max_depth);
    if (!stop) {
      size_t d = X.empty() ? 0 : X[0].size();
      std::vector<size_t> features(d);
      std::iota(features.begin(), features.end(), 0);
      if (opts.max_features > 0 && opts.max_features < d) {
        // deterministic subset: shuffle then take prefix, restore order
        rng.shuffle(features);
        features.resize(opts.max_features);
        std::sort(features.begin(), features.end());
      }
      double best_gain = 0.0, best_threshold = 0.0;
      int best_feature = -1;
      for (size_t f : features) {
        double gain = best_gain, threshold = 0.0;
        if (best_split_on(idx, f, impurity, gain, threshold)) {
          best_gain = gain;
          best_threshold = threshold;
          best_feature = static_cast<int>(f);
        }
      }
      if (best_feature >= 0 && best_gain > 1e-12) {
        std::vector<size_t> left, right;
        for (size_t i : idx) {
          (X[i][static_cast<size_t>(best_feature)] <= best_threshold ? left
                                                                     : right)
              .push_back(i);
        }
        if (!left.empty() && !right.empty()) {
          if (importance) {
            (*importance)[static_cast<size_t>(best_feature)] +=
                best_gain * static_cast<double>(idx.size()) / total_weight;
          }
          TreeNode node;
          node.feature = best_feature;
          node.threshold = best_threshold;
          tree.nodes.push_back(node);
          int self = static_cast<int>(tree.nodes.size() - 1);
          int l = build(left, depth + 1);
          int r = build(right, depth + 1);
          tree.nodes[self].left = l;
          tree.nodes[self].right = r;
          return self;
        }
      }
    }
    return make_leaf(idx);
  }
};

}  // namespace

DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y,
                      const std::vector<size_t>& sample_indices,
                      bool classification, size_t n_classes,
                      const TreeOptions& opts, uint64_t seed,
                      std::vector<double>* importance) {
  if (sample_indices.empty()) {
    throw std::runtime_error("fit_tree: empty sample");
  }
  TreeBuilder b{X, y, classification, n_classes, opts, Rng(seed),
                importance, static_cast<double>(sample_indices.size()), {}};
  b.tree.classification = classification;
  b.tree.n_classes = n_classes;
  b.build(sample_indices, 0);  // root is always node 0
  return std::move(b.tree);
}

size_t Classifier::predict_class(const std::vector<double>& x) const {
  auto p = predict_proba(x);
  size_t best = 0;
  for (size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;  // ties keep the smaller index
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON helpers for tree serialization

namespace {

nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({{"f", n.feature},
                     {"t", n.threshold},
                     {"l", n.left},
                     {"r", n.right},
                     {"d", n.distribution},
                     {"v", n.value}});
  }
  return {{"classification", t.classification},
          {"n_classes", t.n_classes},
          {"nodes", nodes}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  t.classification = j.at("classification").get<bool>();
  t.n_classes = j.at("n_classes").get<size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("f").get<int>();
    node.threshold = n.at("t").get<double>();
    node.left = n.at("l").get<int>();
    node.right = n.at("r").get<int>();
    node.distribution = n.at("d").get<std::vector<double>>();
    node.value = n.at("v").get<double>();
    t.nodes.push_back(std::move(node));
  }
  return t;
}

std::vector<size_t> all_indices(size_t n) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<size_t> bootstrap_indices(size_t n, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = static_cast<size_t>(rng.uniform_int(n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------------------
// Concrete classifiers

class TreeClassifier : public Classifier {
 public:
  TreeClassifier(const HyperParams& p, uint64_t seed) : seed_(seed) {
    opts_.max_depth = static_cast<size_t>(param_or(p, "max_depth", 0));
    opts_.min_leaf = std::max<size_t>(1, static_cast<size_t>(param_or(p, "min_leaf", 1)));
  }
  void fit(const Matrix& X, const std::vector<double>& y,
           size_t n_classes) override {
    tree_ = fit_tree(X, y, all_indices(y.size()), true, n_classes, opts_, seed_);
  }
  std::vector<double> predict_proba(const std::vector<double>& x) const override {
    return tree_.predict_proba(x);
  }
  nlohmann::json to_json() const override { return {{"tree", tree_to_json(tree_)}}; }
  void from_json(const nlohmann::json& j) override {
    tree_ = tree_from_json(j.at("tree"));
  }

 private:
  TreeOptions opts_;
  uint64_t seed_;
  DecisionTree tree_;
};

class ForestClassifier : public Classifier {
 public:
  ForestClassifier(const HyperParams& p, uint64_t seed) : seed_(seed) {
    n_trees_ = std::max<size_t>(1, static_cast<size_t>(param_or(p, "n_trees", 200)));
    opts_.max_depth = static_cast<size_t>(param_or(p, "max_depth", 0));
    opts_.min_leaf = std::max<size_t>(1, static_cast<size_t>(param_or(p, "min_leaf", 1)));
  }
  void fit(const Matrix& X, const std::vector<double>& y,
           size_t n_classes) override {
    n_classes_ = n_classes;
    size_t d = X.empty() ? 0 : X[0].size();
    TreeOptions opts = opts_;
    opts.max_features = std::max<size_t>(
        1, static_cast<size_t>(std::sqrt(static_cast<double>(d))));
    trees_.clear();
    for (size_t t = 0; t < n_trees_; ++t) {
      Rng boot(seed_ * 1000003ULL + t);
      auto idx = bootstrap_indices(y.size(), boot);
      trees_.push_back(fit_tree(X, y, idx, true, n_classes, opts,
                                seed_ * 1000003ULL + t + 1));
    }
  }
  std::vector<double> predict_proba(const std::vector<double>& x) const override {
    std::vector<double> p(n_classes_, 0.0);
    for (const auto& t : trees_) {
      auto q = t.predict_proba(x);
      for (size_t i = 0; i < p.size(); ++i) p[i] += q[i];
    }
    for (double& v : p) v /= static_cast<double>(trees_.size());
    return p;
  }
  nlohmann::json to_json() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(tree_to_json(t));
    return {{"n_classes", n_classes_}, {"trees", trees}};
  }
  void from_json(const nlohmann::json& j) override {
    n_classes_ = j.at("n_classes").get<size_t>();
    trees_.clear();
    for (const auto& t : j.at("trees")) trees_.push_back(tree_from_json(t));
  }

 private:
  size_t n_trees_;
  TreeOptions opts_;
  uint64_t seed_;
  size_t n_classes_ = 0;
  std::vector<DecisionTree> trees_;
};

class LogisticClassifier : public Classifier {
 public:
  LogisticClassifier(const HyperParams& p, uint64_t) {
    lambda_ = param_or(p, "lambda", 0.01);
    iters_ = static_cast<size_t>(param_or(p, "iters", 400));
    lr_ = param_or(p, "lr", 0.5);
  }
  void fit(const Matrix& X, const std::vector<double>& y,
           size_t n_classes) override {
    n_classes_ = n_classes;
    size_t n = X.size();
    size_t d = n ? X[0].size() : 0;
    weights_.assign(n_classes, std::vector<double>(d + 1, 0.0));  // last = bias
    for (size_t it = 0; it < iters_; ++it) {
      std::vector<std::vector<double>> grad(
          n_classes, std::vector<double>(d + 1, 0.0));
      for (size_t r = 0; r < n; ++r) {
        auto p = softmax_row(X[r]);
        for (size_t c = 0; c < n_classes; ++c) {
          double err = p[c] - (static_cast<size_t>(y[r]) == c ? 1.0 : 0.0);
          for (size_t f = 0; f < d; ++f) grad[c][f] += err * X[r][f];
          grad[c][d] += err;
        }
      }
      for (size_t c = 0; c < n_classes; ++c) {
        for (size_t f = 0; f <= d; ++f) {
          double g = grad[c][f] / static_cast<double>(n);
          if (f < d) g += lambda_ * weights_[c][f];
          weights_[c][f] -= lr_ * g;
        }
      }
    }
  }
  std::vector<double> predict_proba(const std::vector<double>& x) const override {
    return softmax_row(x);
  }
  nlohmann::json to_json() const override {
    return {{"n_classes", n_classes_}, {"weights", weights_}};
  }
  void from_json(const nlohmann::json& j) override {
    n_classes_ = j.at("n_classes").get<size_t>();
    weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
  }

 private:
  std::vector<double> softmax_row(const std::vector<double>& x) const {
    std::vector<double> z(n_classes_, 0.0);
    for (size_t c = 0; c < n_classes_; ++c) {
      const auto& w = weights_[c];
      double acc = w.back();
      for (size_t f = 0; f < x.size() && f + 1 < w.size(); ++f) {
        acc += w[f] * x[f];
      }
      z[c] = acc;
    }
    double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
  }
  double lambda_, lr_;
  size_t iters_;
  size_t n_classes_ = 0;
  std::vector<std::vector<double>> weights_;
};

class KnnClassifier : public Classifier {
 public:
  KnnClassifier(const HyperParams& p, uint64_t) {
    k_ = std::max<size_t>(1, static_cast<size_t>(param_or(p, "k", 5)));
  }
  void fit(const Matrix& X, const std::vector<double>& y,
           size_t n_classes) override {
    X_ = X;
    y_ = y;
    n_classes_ = n_classes;
  }
  std::vector<double> predict_proba(const std::vector<double>& x) const override {
    size_t k = std::min(k_, X_.size());
    std::vector<std::pair<double, size_t>> dist(X_.size());
    for (size_t i = 0; i < X_.size(); ++i) {
      double d2 = 0.0;
      for (size_t f = 0; f < x.size(); ++f) {
        double d = X_[i][f] - x[f];
        d2 += d * d;
      }
      dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k),
                      dist.end());
    std::vector<double> counts(n_classes_, 0.0);
    for (size_t i = 0; i < k; ++i) {
      counts[static_cast<size_t>(y_[dist[i].second])] += 1.0;
    }
    return normalize_counts(counts);
  }
  nlohmann::json to_json() const override {
    return {{"k", k_}, {"n_classes", n_classes_}, {"X", X_}, {"y", y_}};
  }
  void from_json(const nlohmann::json& j) override {
    k_ = j.at("k").get<size_t>();
    n_classes_ = j.at("n_classes").get<size_t>();
    X_ = j.at("X").get<Matrix>();
    y_ = j.at("y").get<std::vector<double>>();
  }

 private:
  size_t k_;
  size_t n_classes_ = 0;
  Matrix X_;
  std::vector<double> y_;
};

class NaiveBayesClassifier : public Classifier {
 public:
  NaiveBayesClassifier(const HyperParams&, uint64_t) {}
  void fit(const Matrix& X, const std::vector<double>& y,
           size_t n_classes) override {
    n_classes_ = n_classes;
    size_t d = X.empty() ? 0 : X[0].size();
    means_.assign(n_classes, std::vector<double>(d, 0.0));
    vars_.assign(n_classes, std::vector<double>(d, 0.0));
    priors_.assign(n_classes, 0.0);
    std::vector<double> counts(n_classes, 0.0);
    for (size_t r = 0; r < X.size(); ++r) {
      size_t c = static_cast<size_t>(y[r]);
      counts[c] += 1.0;
      for (size_t f = 0; f < d; ++f) means_[c][f] += X[r][f];
    }
    for (size_t c = 0; c < n_classes; ++c) {
      priors_[c] = counts[c] / static_cast<double>(X.size());
      if (counts[c] > 0) {
        for (size_t f = 0; f < d; ++f) means_[c][f] /= counts[c];
      }
    }
    double max_var = 0.0;
    for (size_t r = 0; r < X.size(); ++r) {
      size_t c = static_cast<size_t>(y[r]);
      for (size_t f = 0; f < d; ++f) {
        double dd = X[r][f] - means_[c][f];
        vars_[c][f] += dd * dd;
      }
    }
    for (size_t c = 0; c < n_classes; ++c) {
      if (counts[c] > 0) {
        for (size_t f = 0; f < d; ++f) {
          vars_[c][f] /= counts[c];
          max_var = std::max(max_var, vars_[c][f]);
        }
      }
    }
    smoothing_ = 1e-9 * std::max(max_var, 1.0);
  }
  std::vector<double> predict_proba(const std::vector<double>& x) const override {
    std::vector<double> logp(n_classes_, -1e300);
    for (size_t c = 0; c < n_classes_; ++c) {
      if (priors_[c] <= 0) continue;
      double acc = std::log(priors_[c]);
      for (size_t f = 0; f < x.size() && f < means_[c].size(); ++f) {
        double v = vars_[c][f] + smoothing_;
        double dd = x[f] - means_[c][f];
        acc += -0.5 * (std::log(2.0 * M_PI * v) + dd * dd / v);
      }
      logp[c] = acc;
    }
    double m = *std::max_element(logp.begin(), logp.end());
    std::vector<double> p(n_classes_, 0.0);
    double sum = 0.0;
    for (size_t c = 0; c < n_classes_; ++c) {
      p[c] = std::exp(logp[c] - m);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    return p;
  }
  nlohmann::json to_json() const override {
    return {{"n_classes", n_classes_}, {"means", means_}, {"vars", vars_},
            {"priors", priors_}, {"smoothing", smoothing_}};
  }
  void from_json(const nlohmann::json& j) override {
    n_classes_ = j.at("n_classes").get<size_t>();
    means_ = j.at("means").get<Matrix>();
    vars_ = j.at("vars").get<Matrix>();
    priors_ = j.at("priors").get<std::vector<double>>();
    smoothing_ = j.at("smoothing").get<double>();
  }

 private:
  size_t n_classes_ = 0;
  Matrix means_, vars_;
  std::vector<double> priors_;
  double smoothing_ = 1e-9;
};

// ---------------------------------------------------------------------------
// Regressors

// Solves (A + lambda I) w = b by Gaussian elimination with partial pivoting.
std::vector<double> solve_normal_equations(const Matrix& X,
                                           const std::vector<double>& y,
                                           double lambda) {
  size_t n = X.size();
  size_t d = n ? X[0].size() : 0;
  size_t m = d + 1;  // + intercept
  Matrix A(m, std::vector<double>(m, 0.0));
  std::vector<double> b(m, 0.0);
  for (size_t r = 0; r < n; ++r) {
    std::vector<double> row(m, 1.0);
    for (size_t f = 0; f < d; ++f) row[f] = X[r][f];
    for (size_t i = 0; i < m; ++i) {
      b[i] += row[i] * y[r];
      for (size_t j = 0; j < m; ++j) A[i][j] += row[i] * row[j];
    }
  }
  for (size_t i = 0; i < d; ++i) A[i][i] += lambda;  // intercept unpenalized
  // elimination
  for (size_t col = 0; col < m; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < m; ++r) {
      if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
    }
    if (std::abs(A[pivot][col]) < 1e-12) {
      A[col][col] += 1e-8;  // singular guard
      pivot = col;
    }
    std::swap(A[col], A[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      double factor = A[r][col] / A[col][col];
      if (factor == 0.0) continue;
      for (size_t c = col; c < m; ++c) A[r][c] -= factor * A[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> w(m, 0.0);
  for (size_t i = 0; i < m; ++i) w[i] = b[i] / A[i][i];
  return w;
}

class LinearRegressor : public Regressor {
 public:
  LinearRegressor(const HyperParams& p, uint64_t, double default_lambda = 0.0) {
    lambda_ = param_or(p, "lambda", default_lambda);
  }
  void fit(const Matrix& X, const std::vector<double>& y) override {
    weights_ = solve_normal_equations(X, y, lambda_);
  }
  double predict(const std::vector<double>& x) const override {
    double acc = weights_.back();
    for (size_t f = 0; f < x.size() && f + 1 < weights_.size(); ++f) {
      acc += weights_[f] * x[f];
    }
    return acc;
  }
  nlohmann::json to_json() const override {
    return {{"weights", weights_}, {"lambda", lambda_}};
  }
  void from_json(const nlohmann::json& j) override {
    weights_ = j.at("weights").get<std::vector<double>>();
    lambda_ = j.at("lambda").get<double>();
  }

 private:
  double lambda_;
  std::vector<double> weights_;
};

class TreeRegressor : public Regressor {
 public:
  TreeRegressor(const HyperParams& p, uint64_t seed) : seed_(seed) {
    opts_.max_depth = static_cast<size_t>(param_or(p, "max_depth", 0));
    opts_.min_leaf = std::max<size_t>(1, static_cast<size_t>(param_or(p, "min_leaf", 1)));
  }
  void fit(const Matrix& X, const std::vector<double>& y) override {
    tree_ = fit_tree(X, y, all_indices(y.size()), false, 0, opts_, seed_);
  }
  double predict(const std::vector<double>& x) const override {
    return tree_.predict_value(x);
  }
  nlohmann::json to_json() const override { return {{"tree", tree_to_json(tree_)}}; }
  void from_json(const nlohmann::json& j) override {
    tree_ = tree_from_json(j.at("tree"));
  }

 private:
  TreeOptions opts_;
  uint64_t seed_;
  DecisionTree tree_;
};

class ForestRegressor : public Regressor {
 public:
  ForestRegressor(const HyperParams& p, uint64_t seed) : seed_(seed) {
    n_trees_ = std::max<size_t>(1, static_cast<size_t>(param_or(p, "n_trees", 200)));
    opts_.max_depth = static_cast<size_t>(param_or(p, "max_depth", 0));
    opts_.min_leaf = std::max<size_t>(1, static_cast<size_t>(param_or(p, "min_leaf", 1)));
  }
  void fit(const Matrix& X, const std::vector<double>& y) override {
    size_t d = X.empty() ? 0 : X[0].size();
    TreeOptions opts = opts_;
    opts.max_features = std::max<size_t>(1, (d + 2) / 3);
    trees_.clear();
    for (size_t t = 0; t < n_trees_; ++t) {
      Rng boot(seed_ * 1000003ULL + t);
      auto idx = bootstrap_indices(y.size(), boot);
      trees_.push_back(fit_tree(X, y, idx, false, 0, opts,
                                seed_ * 1000003ULL + t + 1));
    }
  }
  double predict(const std::vector<double>& x) const override {
    double acc = 0.0;
    for (const auto& t : trees_) acc += t.predict_value(x);
    return acc / static_cast<double>(trees_.size());
  }
  nlohmann::json to_json() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(tree_to_json(t));
    return {{"trees", trees}};
  }
  void from_json(const nlohmann::json& j) override {
    trees_.clear();
    for (const auto& t : j.at("trees")) trees_.push_back(tree_from_json(t));
  }

 private:
  size_t n_trees_;
  TreeOptions opts_;
  uint64_t seed_;
  std::vector<DecisionTree> trees_;
};

class KnnRegressor : public Regressor {
 public:
  KnnRegressor(const HyperParams& p, uint64_t) {
    k_ = std::max<size_t>(1, static_cast<size_t>(param_or(p, "k", 5)));
  }
  void fit(const Matrix& X, const std::vector<double>& y) override {
    X_ = X;
    y_ = y;
  }
  double predict(const std::vector<double>& x) const override {
    size_t k = std::min(k_, X_.size());
    std::vector<std::pair<double, size_t>> dist(X_.size());
    for (size_t i = 0; i < X_.size(); ++i) {
      double d2 = 0.0;
      for (size_t f = 0; f < x.size(); ++f) {
        double d = X_[i][f] - x[f];
        d2 += d * d;
      }
      dist[i] = {d2, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k),
                      dist.end());
    double acc = 0.0;
    for (size_t i = 0; i < k; ++i) acc += y_[dist[i].second];
    return acc / static_cast<double>(k);
  }
  nlohmann::json to_json() const override {
    return {{"k", k_}, {"X", X_}, {"y", y_}};
  }
  void from_json(const nlohmann::json& j) override {
    k_ = j.at("k").get<size_t>();
    X_ = j.at("X").get<Matrix>();
    y_ = j.at("y").get<std::vector<double>>();
  }

 private:
  size_t k_;
  Matrix X_;
  std::vector<double> y_;
};

}  // namespace

std::vector<std::string> classifier_zoo() {
  return {"logreg", "decision_tree", "random_forest", "knn", "naive_bayes"};
}

std::vector<std::string> regressor_zoo() {
  return {"linear", "ridge", "decision_tree", "random_forest", "knn"};
}

std::unique_ptr<Classifier> make_classifier(const std::string& algorithm,
                                            const HyperParams& params,
                                            uint64_t seed) {
  if (algorithm == "logreg") return std::make_unique<LogisticClassifier>(params, seed);
  if (algorithm == "decision_tree") return std::make_unique<TreeClassifier>(params, seed);
  if (algorithm == "random_forest") return std::make_unique<ForestClassifier>(params, seed);
  if (algorithm == "knn") return std::make_unique<KnnClassifier>(params, seed);
  if (algorithm == "naive_bayes") return std::make_unique<NaiveBayesClassifier>(params, seed);
  throw std::runtime_error("unknown classifier algorithm: " + algorithm);
}

std::unique_ptr<Regressor> make_regressor(const std::string& algorithm,
                                          const HyperParams& params,
                                          uint64_t seed) {
  if (algorithm == "linear") return std::make_unique<LinearRegressor>(params, seed, 0.0);
  if (algorithm == "ridge") return std::make_unique<LinearRegressor>(params, seed, 1.0);
  if (algorithm == "decision_tree") return std::make_unique<TreeRegressor>(params, seed);
  if (algorithm == "random_forest") return std::make_unique<ForestRegressor>(params, seed);
  if (algorithm == "knn") return std::make_unique<KnnRegressor>(params, seed);
  throw std::runtime_error("unknown regressor algorithm: " + algorithm);
}

std::vector<double> forest_importance(const Matrix& X,
                                      const std::vector<double>& y,
                                      bool classification, size_t n_classes,
                                      size_t n_trees, uint64_t seed) {
  size_t d = X.empty() ? 0 : X[0].size();
  std::vector<double> importance(d, 0.0);
  TreeOptions opts;
  opts.max_features = classification
                          ? std::max<size_t>(1, static_cast<size_t>(std::sqrt(
                                                    static_cast<double>(d))))
                          : std::max<size_t>(1, (d + 2) / 3);
  for (size_t t = 0; t < n_trees; ++t) {
    Rng boot(seed * 1000003ULL + t);
    auto idx = bootstrap_indices(y.size(), boot);
    fit_tree(X, y, idx, classification, n_classes, opts,
             seed * 1000003ULL + t + 1, &importance);
  }
  double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total <= 0.0) {
    // zero-information case: uniform rather than NaN
    if (d > 0) std::fill(importance.begin(), importance.end(), 1.0 / static_cast<double>(d));
    return importance;
  }
  for (double& v : importance) v /= total;
  return importance;
}

std::map<std::string, std::vector<double>> tuning_grid(
    const std::string& algorithm, bool classification) {
  if (algorithm == "random_forest") {
    return {{"n_trees", {100, 200, 400}},
            {"max_depth", {0, 4, 8, 16}},
            {"min_leaf", {1, 2, 5}}};
  }
  if (algorithm == "decision_tree") {
    return {{"max_depth", {0, 3, 5, 8, 16}}, {"min_leaf", {1, 2, 5, 10}}};
  }
  if (algorithm == "knn") {
    return {{"k", {1, 3, 5, 7, 11}}};
  }
  if (algorithm == "logreg") {
    return {{"lambda", {0.0001, 0.001, 0.01, 0.1}}, {"iters", {200, 400, 800}}};
  }
  if (algorithm == "naive_bayes") {
    return {{"_nb_dummy", {0}}};  // no tunables; grid of one point
  }
  if (algorithm == "ridge") {
    return {{"lambda", {0.01, 0.1, 1, 10}}};
  }
  if (algorithm == "linear") {
    return {{"_linear_dummy", {0}}};
  }
  (void)classification;
  throw std::runtime_error("no tuning grid for algorithm: " + algorithm);
}

}  // namespace agentml
