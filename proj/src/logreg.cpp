#include "apifeat/logreg.hpp"

#include <cmath>

#include "apifeat/errors.hpp"

namespace apifeat {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::RowVectorXd shifted = z.row(i).array() - z.row(i).maxCoeff();
    Eigen::RowVectorXd e = shifted.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace

Eigen::MatrixXd logreg_scores(const LogRegModel& model,
                              const Eigen::MatrixXd& features) {
  Eigen::MatrixXd z = features * model.weights;
  z.rowwise() += model.bias;
  return softmax_rows(z);
}

double logreg_loss(const LogRegModel& model, const Eigen::MatrixXd& features,
                   const std::vector<int>& labels, double l2) {
  Eigen::MatrixXd p = logreg_scores(model, features);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    loss += -std::log(std::max(p(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss /= static_cast<double>(p.rows());
  loss += 0.5 * l2 * model.weights.squaredNorm();
  return loss;
}

LogRegModel fit_logreg(const Eigen::MatrixXd& features,
                       const std::vector<int>& labels, int classes,
                       const LogRegConfig& config) {
  if (features.rows() == 0) throw EmptyCorpusError("fit_logreg: no samples");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw ShapeError("fit_logreg: labels/features size mismatch");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ShapeError("fit_logreg: label out of range");
  }

  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  LogRegModel model;
  model.weights = Eigen::MatrixXd::Zero(d, classes);
  model.bias = Eigen::RowVectorXd::Zero(classes);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    Eigen::MatrixXd p = logreg_scores(model, features);
    Eigen::MatrixXd residual = (p - onehot) * inv_n;
    Eigen::MatrixXd grad_w = features.transpose() * residual + config.l2 * model.weights;
    Eigen::RowVectorXd grad_b = residual.colwise().sum();

    double grad_max = std::max(grad_w.cwiseAbs().maxCoeff(),
                               grad_b.cwiseAbs().maxCoeff());
    model.iterations = iter;
    if (grad_max < config.tolerance) {
      model.converged = true;
      break;
    }
    model.weights -= config.learning_rate * grad_w;
    model.bias -= config.learning_rate * grad_b;
  }

  model.final_loss = logreg_loss(model, features, labels, config.l2);
  return model;
}

}  // namespace apifeat
