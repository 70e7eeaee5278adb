#pragma once

#include <Eigen/Dense>
#include <vector>

namespace apifeat {

// Macro-averaged classification metrics: every class weighs equally
// regardless of support. Precision/recall use the 0-when-undefined
// convention (empty predicted or true class contributes 0, not NaN).
struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  Eigen::MatrixXi confusion;  // rows true class, columns predicted
  // macro-averaged ROC: per threshold, mean one-vs-rest (FPR, TPR) across
  // classes; thresholds descend so FPR ascends
  std::vector<std::pair<double, double>> roc;
  double roc_auc = 0.0;
};

Eigen::MatrixXi confusion_matrix(const std::vector<int>& labels,
                                 const std::vector<int>& predictions,
                                 int classes);

Metrics metrics_from_confusion(const Eigen::MatrixXi& confusion);

// scores: one row per sample of per-class probabilities; predictions are row
// argmax. roc_thresholds evenly spaced in [0,1].
Metrics compute_metrics(const std::vector<int>& labels,
                        const Eigen::MatrixXd& scores, int roc_thresholds = 101);

double macro_f1_score(const std::vector<int>& labels,
                      const std::vector<int>& predictions, int classes);

}  // namespace apifeat
