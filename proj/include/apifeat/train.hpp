#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "apifeat/cnn.hpp"
#include "apifeat/metrics.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-2;  // decoupled; biases are exempt
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("train: learning rate must be > 0");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  }
};

struct EpochStats {
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // -1 when training ran zero epochs
  double best_val_macro_f1 = 0.0;
};

// Adam with decoupled weight decay. Bias parameters (name ending ".bias")
// are excluded from decay. Works against any model exposing params().
template <typename Model>
class AdamW {
  using Matrix = typename Model::Matrix;
  using Scalar = typename Matrix::Scalar;

public:
  AdamW(Model& model, const TrainConfig& config)
      : model_(model), config_(config) {
    for (const auto& p : model.params()) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    auto& params = model_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      m_[i] = Scalar(config_.beta1) * m_[i] + Scalar(1.0 - config_.beta1) * p.grad;
      v_[i] = Scalar(config_.beta2) * v_[i] +
              Scalar(1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
      auto m_hat = m_[i] / Scalar(bc1);
      auto v_hat = v_[i] / Scalar(bc2);
      p.value -= Scalar(config_.learning_rate) *
                 (m_hat.array() / (v_hat.array().sqrt() + Scalar(config_.epsilon)))
                     .matrix();
      bool is_bias = p.name.size() >= 5 &&
                     p.name.compare(p.name.size() - 5, 5, ".bias") == 0;
      if (!is_bias && config_.weight_decay > 0.0) {
        p.value -= Scalar(config_.learning_rate * config_.weight_decay) * p.value;
      }
    }
  }

private:
  Model& model_;
  TrainConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

template <typename Model, typename Scalar>
Metrics evaluate_model(const Model& model, const SequenceBatch<Scalar>& data) {
  if (data.size() == 0) throw EmptyCorpusError("evaluate_model: empty split");
  return compute_metrics(data.labels, model.softmax_scores(data));
}

// Seeded mini-batch training with per-epoch validation; the best-validation
// parameters are restored before returning. Non-finite loss raises
// TrainingError with the epoch index.
//
// The model argument only needs Matrix/params()/zero_grad()/loss_and_grad()/
// softmax_scores(), so recurrent or attention classifiers can slot into the
// same loop.
template <typename Model, typename Scalar>
TrainHistory train_model(Model& model,
                         const SequenceBatch<Scalar>& train_data,
                         const SequenceBatch<Scalar>& val_data,
                         const TrainConfig& config) {
  config.validate();
  if (train_data.size() == 0) throw EmptyCorpusError("train_model: empty train split");

  TrainHistory history;
  AdamW<Model> optimizer(model, config);
  Rng shuffle_rng(splitmix64(config.seed ^ 0x5f));
  Rng dropout_rng(splitmix64(config.seed ^ 0xd0));

  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> best_params;
  double best_f1 = -1.0;

  std::vector<std::size_t> order(static_cast<std::size_t>(train_data.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 start + static_cast<std::size_t>(config.batch_size));
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      SequenceBatch<Scalar> batch = train_data.subset(idx);
      model.zero_grad();
      double loss = model.loss_and_grad(batch, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged (non-finite loss)", epoch);
      }
      optimizer.step();
      loss_sum += loss;
      ++batches;
    }

    EpochStats stats;
    stats.train_loss = batches ? loss_sum / batches : 0.0;
    if (val_data.size() > 0) {
      Metrics val = evaluate_model(model, val_data);
      stats.val_accuracy = val.accuracy;
      stats.val_macro_f1 = val.macro_f1;
      if (val.macro_f1 > best_f1) {
        best_f1 = val.macro_f1;
        history.best_epoch = epoch;
        best_params.clear();
        for (const auto& p : model.params()) best_params.push_back(p.value);
      }
    }
    history.epochs.push_back(stats);
  }

  if (!best_params.empty()) {
    auto& params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].value = best_params[i];
    }
    history.best_val_macro_f1 = best_f1;
  }
  return history;
}

// Portable model checkpoint: versioned binary with a JSON config header and
// named IEEE-754 little-endian float64 parameter arrays.
void save_checkpoint(const std::filesystem::path& path,
                     const CnnConfig& config,
                     const std::vector<Param<float>>& params);
void save_checkpoint(const std::filesystem::path& path,
                     const CnnConfig& config,
                     const std::vector<Param<double>>& params);

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path,
                     const CnnModel<Scalar>& model) {
  save_checkpoint(path, model.config(), model.params());
}

CnnModel<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace apifeat
