#include "apifeat/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "apifeat/errors.hpp"

namespace apifeat {

Eigen::MatrixXi confusion_matrix(const std::vector<int>& labels,
                                 const std::vector<int>& predictions,
                                 int classes) {
  if (labels.size() != predictions.size()) {
    throw ShapeError("confusion_matrix: labels/predictions size mismatch");
  }
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m(labels[i], predictions[i]) += 1;
  }
  return m;
}

Metrics metrics_from_confusion(const Eigen::MatrixXi& confusion) {
  const int classes = static_cast<int>(confusion.rows());
  Metrics out;
  out.confusion = confusion;

  double total = confusion.sum();
  double correct = confusion.diagonal().sum();
  out.accuracy = total > 0 ? correct / total : 0.0;

  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    double tp = confusion(c, c);
    double predicted = confusion.col(c).sum();
    double actual = confusion.row(c).sum();
    double precision = predicted > 0 ? tp / predicted : 0.0;
    double recall = actual > 0 ? tp / actual : 0.0;
    double f1 = precision + recall > 0
                    ? 2.0 * precision * recall / (precision + recall)
                    : 0.0;
    p_sum += precision;
    r_sum += recall;
    f_sum += f1;
  }
  out.macro_precision = p_sum / classes;
  out.macro_recall = r_sum / classes;
  out.macro_f1 = f_sum / classes;
  return out;
}

Metrics compute_metrics(const std::vector<int>& labels,
                        const Eigen::MatrixXd& scores, int roc_thresholds) {
  if (labels.empty()) throw EmptyCorpusError("compute_metrics: empty evaluation set");
  if (static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
    throw ShapeError("compute_metrics: labels/scores size mismatch");
  }
  const int classes = static_cast<int>(scores.cols());

  std::vector<int> predictions(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index best;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    predictions[i] = static_cast<int>(best);
  }

  Metrics out = metrics_from_confusion(
      confusion_matrix(labels, predictions, classes));

  std::vector<double> support(classes, 0.0);
  for (int label : labels) support[label] += 1.0;

  // one-vs-rest rates per class on a shared threshold grid, then averaged
  // pointwise across classes
  out.roc.reserve(roc_thresholds);
  for (int t = roc_thresholds - 1; t >= 0; --t) {
    double threshold = static_cast<double>(t) / (roc_thresholds - 1);
    double tpr_sum = 0.0, fpr_sum = 0.0;
    int counted = 0;
    for (int c = 0; c < classes; ++c) {
      double pos = support[c];
      double neg = static_cast<double>(labels.size()) - pos;
      if (pos == 0.0 || neg == 0.0) continue;
      double tp = 0.0, fp = 0.0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (scores(static_cast<Eigen::Index>(i), c) >= threshold) {
          if (labels[i] == c) {
            tp += 1.0;
          } else {
            fp += 1.0;
          }
        }
      }
      tpr_sum += tp / pos;
      fpr_sum += fp / neg;
      ++counted;
    }
    if (counted > 0) {
      out.roc.emplace_back(fpr_sum / counted, tpr_sum / counted);
    }
  }

  // trapezoid over the macro curve, anchored at (0,0)
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  for (const auto& [fpr, tpr] : out.roc) {
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  auc += (1.0 - prev_fpr) * (1.0 + prev_tpr) * 0.5;  // close to (1,1)
  out.roc_auc = auc;
  return out;
}

double macro_f1_score(const std::vector<int>& labels,
                      const std::vector<int>& predictions, int classes) {
  return metrics_from_confusion(confusion_matrix(labels, predictions, classes))
      .macro_f1;
}

}  // namespace apifeat
