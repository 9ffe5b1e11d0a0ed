#pragma once

#include <map>
#include <string>
#include <vector>

namespace agentml {

// y values are class indices in [0, n_classes). probs rows must sum to 1
// within 1e-6. Binary metrics treat class 1 as positive; multiclass metrics
// are macro-averaged, AUC macro one-vs-rest.
// Keys: accuracy, auc, recall, precision, f1, kappa, mcc.
std::map<std::string, double> compute_classification_metrics(
    const std::vector<size_t>& y_true, const std::vector<size_t>& y_pred,
    const std::vector<std::vector<double>>& probs, size_t n_classes);

// Rank (Mann-Whitney) AUC with 0.5 credit for ties; 0.5 when one class absent.
double binary_auc(const std::vector<size_t>& y_true,
                  const std::vector<double>& positive_scores);

// Keys: mae, mse, rmse, r2, rmsle, mape, rmsle_excluded, mape_excluded.
std::map<std::string, double> compute_regression_metrics(
    const std::vector<double>& y_true, const std::vector<double>& y_pred);

}  // namespace agentml
