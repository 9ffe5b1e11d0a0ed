#include "agentml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "agentml/stats.hpp"

namespace agentml {

double binary_auc(const std::vector<size_t>& y_true,
                  const std::vector<double>& positive_scores) {
  size_t n_pos = 0, n_neg = 0;
  for (size_t v : y_true) (v == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  auto ranks = average_ranks(positive_scores);
  double rank_sum = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) rank_sum += ranks[i];
  }
  double u = rank_sum - static_cast<double>(n_pos) *
                            (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::map<std::string, double> compute_classification_metrics(
    const std::vector<size_t>& y_true, const std::vector<size_t>& y_pred,
    const std::vector<std::vector<double>>& probs, size_t n_classes) {
  size_t n = y_true.size();
  if (y_pred.size() != n || probs.size() != n) {
    throw std::runtime_error("metric inputs have mismatched lengths");
  }
  for (const auto& row : probs) {
    double s = 0.0;
    for (double p : row) s += p;
    if (std::abs(s - 1.0) > 1e-6) {
      throw std::runtime_error("probability row does not sum to 1");
    }
  }
  std::vector<std::vector<double>> confusion(
      n_classes, std::vector<double>(n_classes, 0.0));
  for (size_t i = 0; i < n; ++i) confusion[y_true[i]][y_pred[i]] += 1.0;

  double accuracy = 0.0;
  for (size_t c = 0; c < n_classes; ++c) accuracy += confusion[c][c];
  accuracy /= static_cast<double>(n);

  // per-class precision/recall/f1
  std::vector<double> tp(n_classes, 0.0), fp(n_classes, 0.0), fn(n_classes, 0.0);
  for (size_t t = 0; t < n_classes; ++t) {
    for (size_t p = 0; p < n_classes; ++p) {
      if (t == p) {
        tp[t] += confusion[t][p];
      } else {
        fn[t] += confusion[t][p];
        fp[p] += confusion[t][p];
      }
    }
  }
  auto cls_precision = [&](size_t c) {
    double d = tp[c] + fp[c];
    return d > 0 ? tp[c] / d : 0.0;
  };
  auto cls_recall = [&](size_t c) {
    double d = tp[c] + fn[c];
    return d > 0 ? tp[c] / d : 0.0;
  };
  auto cls_f1 = [&](size_t c) {
    double p = cls_precision(c), r = cls_recall(c);
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  };

  double precision, recall, f1, auc;
  if (n_classes == 2) {
    precision = cls_precision(1);
    recall = cls_recall(1);
    f1 = cls_f1(1);
    std::vector<double> scores(n);
    for (size_t i = 0; i < n; ++i) scores[i] = probs[i].size() > 1 ? probs[i][1] : 0.0;
    auc = binary_auc(y_true, scores);
  } else {
    precision = recall = f1 = auc = 0.0;
    for (size_t c = 0; c < n_classes; ++c) {
      precision += cls_precision(c);
      recall += cls_recall(c);
      f1 += cls_f1(c);
      std::vector<size_t> ovr(n);
      std::vector<double> scores(n);
      for (size_t i = 0; i < n; ++i) {
        ovr[i] = y_true[i] == c ? 1 : 0;
        scores[i] = c < probs[i].size() ? probs[i][c] : 0.0;
      }
      auc += binary_auc(ovr, scores);
    }
    double k = static_cast<double>(n_classes);
    precision /= k;
    recall /= k;
    f1 /= k;
    auc /= k;
  }

  // Cohen's kappa from marginals
  double pe = 0.0;
  for (size_t c = 0; c < n_classes; ++c) {
    double row = 0.0, col = 0.0;
    for (size_t j = 0; j < n_classes; ++j) {
      row += confusion[c][j];
      col += confusion[j][c];
    }
    pe += (row / static_cast<double>(n)) * (col / static_cast<double>(n));
  }
  double kappa = (1.0 - pe) > 1e-15 ? (accuracy - pe) / (1.0 - pe) : 0.0;

  // MCC, multiclass covariance form
  double c_sum = 0.0;
  for (size_t c = 0; c < n_classes; ++c) c_sum += confusion[c][c];
  double s = static_cast<double>(n);
  double sum_tp_pk = 0.0, sum_p2 = 0.0, sum_t2 = 0.0;
  for (size_t c = 0; c < n_classes; ++c) {
    double pk = 0.0, tk = 0.0;
    for (size_t j = 0; j < n_classes; ++j) {
      pk += confusion[j][c];  // predicted as c
      tk += confusion[c][j];  // truly c
    }
    sum_tp_pk += pk * tk;
    sum_p2 += pk * pk;
    sum_t2 += tk * tk;
  }
  double num = c_sum * s - sum_tp_pk;
  double den = std::sqrt(s * s - sum_p2) * std::sqrt(s * s - sum_t2);
  double mcc = den > 1e-15 ? num / den : 0.0;

  return {{"accuracy", accuracy}, {"auc", auc},     {"recall", recall},
          {"precision", precision}, {"f1", f1},     {"kappa", kappa},
          {"mcc", mcc}};
}

std::map<std::string, double> compute_regression_metrics(
    const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  size_t n = y_true.size();
  if (n == 0 || y_pred.size() != n) {
    throw std::runtime_error("regression metric inputs empty or mismatched");
  }
  double mae = 0.0, mse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = y_pred[i] - y_true[i];
    mae += std::abs(d);
    mse += d * d;
  }
  mae /= static_cast<double>(n);
  mse /= static_cast<double>(n);

  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  double r2;
  if (ss_tot > 1e-300) {
    r2 = 1.0 - ss_res / ss_tot;
  } else {
    r2 = ss_res <= 1e-300 ? 0.0 : -1e12;
  }
  if (r2 < -1e12) r2 = -1e12;

  double rmsle = 0.0;
  size_t rmsle_n = 0, rmsle_excl = 0;
  for (size_t i = 0; i < n; ++i) {
    if (y_true[i] > -1.0 && y_pred[i] > -1.0) {
      double d = std::log1p(y_pred[i]) - std::log1p(y_true[i]);
      rmsle += d * d;
      ++rmsle_n;
    } else {
      ++rmsle_excl;
    }
  }
  rmsle = rmsle_n ? std::sqrt(rmsle / static_cast<double>(rmsle_n)) : 0.0;

  double mape = 0.0;
  size_t mape_n = 0, mape_excl = 0;
  for (size_t i = 0; i < n; ++i) {
    if (y_true[i] != 0.0) {
      mape += std::abs((y_pred[i] - y_true[i]) / y_true[i]);
      ++mape_n;
    } else {
      ++mape_excl;
    }
  }
  mape = mape_n ? mape / static_cast<double>(mape_n) : 0.0;

  return {{"mae", mae},
          {"mse", mse},
          {"rmse", std::sqrt(mse)},
          {"r2", r2},
          {"rmsle", rmsle},
          {"mape", mape},
          {"rmsle_excluded", static_cast<double>(rmsle_excl)},
          {"mape_excluded", static_cast<double>(mape_excl)}};
}

}  // namespace agentml
