#pragma once

#include <Eigen/Dense>
#include <vector>

namespace apifeat {

// Multinomial logistic regression trained by full-batch gradient descent;
// the convex reference model used by the explainability checks.
struct LogRegModel {
  Eigen::MatrixXd weights;  // dim x classes
  Eigen::RowVectorXd bias;  // 1 x classes
  bool converged = false;
  int iterations = 0;
  double final_loss = 0.0;
};

struct LogRegConfig {
  double learning_rate = 0.5;
  double l2 = 1e-4;
  int max_iterations = 2000;
  double tolerance = 1e-6;  // max-abs gradient stopping rule
};

// features: one row per sample (mean-pooled vectors), labels in [0, classes).
// Non-convergence within max_iterations keeps the best iterate and leaves
// converged false; callers decide whether that warrants a warning.
LogRegModel fit_logreg(const Eigen::MatrixXd& features,
                       const std::vector<int>& labels, int classes,
                       const LogRegConfig& config = {});

// Per-class probabilities, one row per sample.
Eigen::MatrixXd logreg_scores(const LogRegModel& model,
                              const Eigen::MatrixXd& features);

double logreg_loss(const LogRegModel& model, const Eigen::MatrixXd& features,
                   const std::vector<int>& labels, double l2);

}  // namespace apifeat
