#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "apifeat/dataset.hpp"
#include "apifeat/errors.hpp"
#include "apifeat/rng.hpp"

namespace apifeat {

enum class InputMode { Knowledge, Nlp };

// Multi-width 1-D convolutional sequence classifier: per width a temporal
// convolution, ReLU and a max-pool over the unpadded positions, then the
// pooled blocks concatenate into an MLP head. In nlp mode an embedding
// table precedes the convolutions.
struct CnnConfig {
  InputMode mode = InputMode::Knowledge;
  int input_dim = 132;  // per-call dim (knowledge) or embedding dim (nlp)
  int vocab_size = 0;   // nlp only
  std::vector<int> kernel_widths = {2, 3, 4, 5};
  int channels = 128;
  double conv_dropout = 0.3;
  std::vector<int> hidden = {128, 64};
  double hidden_dropout = 0.2;
  int classes = 2;
  std::uint64_t seed = 1;

  void validate() const {
    if (kernel_widths.empty()) throw ConfigError("cnn: kernel widths empty");
    for (int w : kernel_widths) {
      if (w < 1) throw ConfigError("cnn: kernel width must be >= 1");
    }
    if (channels < 1) throw ConfigError("cnn: channels must be >= 1");
    if (input_dim < 1) throw ConfigError("cnn: input_dim must be >= 1");
    if (classes < 2) throw ConfigError("cnn: need at least two classes");
    if (conv_dropout < 0.0 || conv_dropout >= 1.0 || hidden_dropout < 0.0 ||
        hidden_dropout >= 1.0) {
      throw ConfigError("cnn: dropout must be in [0,1)");
    }
    if (mode == InputMode::Nlp && vocab_size < 2) {
      throw ConfigError("cnn: nlp mode requires vocab_size");
    }
  }
};

template <typename Scalar>
struct Param {
  std::string name;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grad;
};

// One batch of sequences. Knowledge mode fills `features` (seq_len x dim
// each); nlp mode fills `token_ids` (seq_len each). Labels may be empty for
// pure inference.
template <typename Scalar>
struct SequenceBatch {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> features;
  std::vector<std::vector<int>> token_ids;
  std::vector<int> true_lengths;
  std::vector<int> labels;

  int size() const { return static_cast<int>(true_lengths.size()); }

  SequenceBatch subset(const std::vector<std::size_t>& indices) const {
    SequenceBatch out;
    out.features.reserve(features.empty() ? 0 : indices.size());
    out.token_ids.reserve(token_ids.empty() ? 0 : indices.size());
    for (std::size_t i : indices) {
      if (!features.empty()) out.features.push_back(features[i]);
      if (!token_ids.empty()) out.token_ids.push_back(token_ids[i]);
      out.true_lengths.push_back(true_lengths[i]);
      if (!labels.empty()) out.labels.push_back(labels[i]);
    }
    return out;
  }
};

template <typename Scalar>
SequenceBatch<Scalar> to_batch(const KnowledgeDataset& data) {
  SequenceBatch<Scalar> batch;
  batch.features.reserve(data.size());
  for (const Eigen::MatrixXf& m : data.features) {
    batch.features.push_back(m.template cast<Scalar>());
  }
  batch.true_lengths = data.true_len;
  batch.labels = data.labels;
  return batch;
}

template <typename Scalar>
SequenceBatch<Scalar> to_batch(const TokenDataset& data) {
  SequenceBatch<Scalar> batch;
  batch.token_ids = data.ids;
  batch.true_lengths = data.true_len;
  batch.labels = data.labels;
  return batch;
}

template <typename Scalar>
class CnnModel {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit CnnModel(const CnnConfig& config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed);
    auto uniform_init = [&](Matrix& m, int fan_in) {
      Scalar bound = Scalar(1) / std::sqrt(Scalar(fan_in));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          m(r, c) = static_cast<Scalar>(rng.uniform(-double(bound), double(bound)));
        }
      }
    };

    if (config_.mode == InputMode::Nlp) {
      Param<Scalar> emb;
      emb.name = "embedding";
      emb.value.resize(config_.vocab_size, config_.input_dim);
      uniform_init(emb.value, config_.input_dim);
      emb.value.row(0).setZero();  // <pad> embeds to zero
      embedding_idx_ = add_param(std::move(emb));
    }

    for (int w : config_.kernel_widths) {
      Param<Scalar> weight, bias;
      weight.name = "conv_w" + std::to_string(w) + ".weight";
      weight.value.resize(w * config_.input_dim, config_.channels);
      uniform_init(weight.value, w * config_.input_dim);
      bias.name = "conv_w" + std::to_string(w) + ".bias";
      bias.value = Matrix::Zero(1, config_.channels);
      conv_w_idx_.push_back(add_param(std::move(weight)));
      conv_b_idx_.push_back(add_param(std::move(bias)));
    }

    int in_dim = config_.channels * static_cast<int>(config_.kernel_widths.size());
    std::vector<int> dims = config_.hidden;
    dims.push_back(config_.classes);
    for (std::size_t layer = 0; layer < dims.size(); ++layer) {
      Param<Scalar> weight, bias;
      bool output = layer + 1 == dims.size();
      std::string base = output ? "out" : "fc" + std::to_string(layer);
      weight.name = base + ".weight";
      weight.value.resize(in_dim, dims[layer]);
      uniform_init(weight.value, in_dim);
      bias.name = base + ".bias";
      bias.value = Matrix::Zero(1, dims[layer]);
      fc_w_idx_.push_back(add_param(std::move(weight)));
      fc_b_idx_.push_back(add_param(std::move(bias)));
      in_dim = dims[layer];
    }

    for (Param<Scalar>& p : params_) {
      p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    }
  }

  const CnnConfig& config() const { return config_; }
  std::vector<Param<Scalar>>& params() { return params_; }
  const std::vector<Param<Scalar>>& params() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Param<Scalar>& p : params_) {
      n += static_cast<std::size_t>(p.value.size());
    }
    return n;
  }

  void zero_grad() {
    for (Param<Scalar>& p : params_) p.grad.setZero();
  }

  // Evaluation-mode logits (dropout off); each row one sample.
  Matrix forward(const SequenceBatch<Scalar>& batch) const {
    Matrix logits(batch.size(), config_.classes);
    SampleTrace trace;
    for (int i = 0; i < batch.size(); ++i) {
      forward_one(batch, i, /*train=*/false, nullptr, trace);
      logits.row(i) = trace.logits.transpose();
    }
    return logits;
  }

  // probabilities normalized in double so each row sums to 1 within 1e-9
  // regardless of the model scalar type
  Eigen::MatrixXd softmax_scores(const SequenceBatch<Scalar>& batch) const {
    Matrix logits = forward(batch);
    Eigen::MatrixXd scores(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::VectorXd z = logits.row(i).transpose().template cast<double>();
      Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
      scores.row(i) = (e / e.sum()).transpose();
    }
    return scores;
  }

  // Mean cross-entropy over the batch plus gradient accumulation into every
  // parameter. dropout_rng enables the dropout layers; pass nullptr for the
  // deterministic (e.g. gradient-check) path.
  double loss_and_grad(const SequenceBatch<Scalar>& batch, Rng* dropout_rng) {
    if (batch.labels.empty() || batch.size() == 0) {
      throw ShapeError("loss_and_grad: batch carries no labels");
    }
    const Scalar inv_n = Scalar(1) / Scalar(batch.size());
    double total_loss = 0.0;
    SampleTrace trace;
    for (int i = 0; i < batch.size(); ++i) {
      int label = batch.labels[i];
      if (label < 0 || label >= config_.classes) {
        throw ShapeError("loss_and_grad: label out of range");
      }
      forward_one(batch, i, /*train=*/true, dropout_rng, trace);
      Vector probs = softmax(trace.logits);
      total_loss += -std::log(std::max(double(probs[label]), 1e-300));
      Vector dlogits = probs;
      dlogits[label] -= Scalar(1);
      dlogits *= inv_n;
      backward_one(batch, i, trace, dlogits);
    }
    return total_loss / batch.size();
  }

  double batch_loss(const SequenceBatch<Scalar>& batch) const {
    double total = 0.0;
    SampleTrace trace;
    for (int i = 0; i < batch.size(); ++i) {
      forward_one(batch, i, /*train=*/false, nullptr, trace);
      Vector probs = softmax(trace.logits);
      total += -std::log(std::max(double(probs[batch.labels[i]]), 1e-300));
    }
    return total / batch.size();
  }

private:
  struct WidthTrace {
    Matrix unfolded;              // valid x (w * input_dim)
    Matrix preact;                // valid x channels
    std::vector<int> argmax;      // -1 when the pooled value is 0
    Vector pooled;
  };

  struct SampleTrace {
    Matrix embedded;  // nlp mode input rows
    std::vector<WidthTrace> widths;
    Vector concat;
    Vector concat_mask;                 // conv dropout mask (scaled)
    std::vector<Vector> fc_inputs;      // input to each fc layer
    std::vector<Vector> fc_preacts;
    std::vector<Vector> fc_masks;       // hidden dropout masks (scaled)
    Vector logits;
  };

  int add_param(Param<Scalar> p) {
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
  }

  static Vector softmax(const Vector& z) {
    Vector shifted = z.array() - z.maxCoeff();
    Vector e = shifted.array().exp();
    return e / e.sum();
  }

  Vector dropout_mask(Eigen::Index size, double p, Rng* rng) const {
    if (!rng || p <= 0.0) return Vector::Constant(size, Scalar(1));
    Vector mask(size);
    Scalar scale = Scalar(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < size; ++i) {
      mask[i] = rng->next_unit() < p ? Scalar(0) : scale;
    }
    return mask;
  }

  const Matrix& input_rows(const SequenceBatch<Scalar>& batch, int i,
                           SampleTrace& trace) const {
    if (config_.mode == InputMode::Knowledge) {
      const Matrix& x = batch.features[static_cast<std::size_t>(i)];
      if (x.cols() != config_.input_dim) {
        throw ShapeError("cnn: feature dim mismatch");
      }
      return x;
    }
    const std::vector<int>& ids = batch.token_ids[static_cast<std::size_t>(i)];
    const Matrix& table = params_[embedding_idx_].value;
    trace.embedded.resize(static_cast<Eigen::Index>(ids.size()), config_.input_dim);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (ids[t] < 0 || ids[t] >= config_.vocab_size) {
        throw ShapeError("cnn: token id out of range");
      }
      trace.embedded.row(static_cast<Eigen::Index>(t)) = table.row(ids[t]);
    }
    return trace.embedded;
  }

  void forward_one(const SequenceBatch<Scalar>& batch, int i, bool train,
                   Rng* dropout_rng, SampleTrace& trace) const {
    const Matrix& x = input_rows(batch, i, trace);
    const int true_len =
        std::min<int>(batch.true_lengths[static_cast<std::size_t>(i)],
                      static_cast<int>(x.rows()));
    const int n_widths = static_cast<int>(config_.kernel_widths.size());
    const int channels = config_.channels;

    trace.widths.resize(static_cast<std::size_t>(n_widths));
    trace.concat.resize(n_widths * channels);

    for (int wi = 0; wi < n_widths; ++wi) {
      const int w = config_.kernel_widths[static_cast<std::size_t>(wi)];
      WidthTrace& wt = trace.widths[static_cast<std::size_t>(wi)];
      const int valid = true_len - w + 1;
      if (valid <= 0) {
        // max-pool over the empty set is defined as 0
        wt.unfolded.resize(0, 0);
        wt.preact.resize(0, 0);
        wt.argmax.assign(static_cast<std::size_t>(channels), -1);
        wt.pooled = Vector::Zero(channels);
        trace.concat.segment(wi * channels, channels).setZero();
        continue;
      }

      wt.unfolded.resize(valid, w * config_.input_dim);
      for (int t = 0; t < valid; ++t) {
        for (int k = 0; k < w; ++k) {
          wt.unfolded.row(t).segment(k * config_.input_dim, config_.input_dim) =
              x.row(t + k);
        }
      }

      const Matrix& weight = params_[conv_w_idx_[wi]].value;
      const Matrix& bias = params_[conv_b_idx_[wi]].value;
      wt.preact.noalias() = wt.unfolded * weight;
      wt.preact.rowwise() += bias.row(0);

      wt.argmax.assign(static_cast<std::size_t>(channels), -1);
      wt.pooled.resize(channels);
      for (int c = 0; c < channels; ++c) {
        Eigen::Index best_row;
        Scalar best = wt.preact.col(c).maxCoeff(&best_row);
        if (best > Scalar(0)) {
          wt.pooled[c] = best;
          wt.argmax[static_cast<std::size_t>(c)] = static_cast<int>(best_row);
        } else {
          wt.pooled[c] = Scalar(0);  // ReLU clamps the max to zero
        }
      }
      trace.concat.segment(wi * channels, channels) = wt.pooled;
    }

    trace.concat_mask = dropout_mask(trace.concat.size(),
                                     train ? config_.conv_dropout : 0.0,
                                     train ? dropout_rng : nullptr);
    Vector h = trace.concat.cwiseProduct(trace.concat_mask);

    const std::size_t n_fc = fc_w_idx_.size();
    trace.fc_inputs.resize(n_fc);
    trace.fc_preacts.resize(n_fc);
    trace.fc_masks.resize(n_fc);
    for (std::size_t layer = 0; layer < n_fc; ++layer) {
      const Matrix& weight = params_[fc_w_idx_[layer]].value;
      const Matrix& bias = params_[fc_b_idx_[layer]].value;
      trace.fc_inputs[layer] = h;
      Vector a = weight.transpose() * h + bias.row(0).transpose();
      trace.fc_preacts[layer] = a;
      if (layer + 1 == n_fc) {
        trace.logits = a;
      } else {
        Vector r = a.cwiseMax(Scalar(0));
        trace.fc_masks[layer] = dropout_mask(r.size(),
                                             train ? config_.hidden_dropout : 0.0,
                                             train ? dropout_rng : nullptr);
        h = r.cwiseProduct(trace.fc_masks[layer]);
      }
    }
  }

  void backward_one(const SequenceBatch<Scalar>& batch, int i,
                    const SampleTrace& trace, const Vector& dlogits) {
    const std::size_t n_fc = fc_w_idx_.size();
    Vector delta = dlogits;
    for (std::size_t layer = n_fc; layer-- > 0;) {
      params_[fc_w_idx_[layer]].grad.noalias() +=
          trace.fc_inputs[layer] * delta.transpose();
      params_[fc_b_idx_[layer]].grad.row(0) += delta.transpose();
      Vector dh = params_[fc_w_idx_[layer]].value * delta;
      if (layer == 0) {
        delta = dh;
        break;
      }
      // through the previous layer's dropout and ReLU
      dh = dh.cwiseProduct(trace.fc_masks[layer - 1]);
      const Vector& a = trace.fc_preacts[layer - 1];
      for (Eigen::Index j = 0; j < dh.size(); ++j) {
        if (a[j] <= Scalar(0)) dh[j] = Scalar(0);
      }
      delta = dh;
    }
    Vector dconcat = delta.cwiseProduct(trace.concat_mask);

    const int channels = config_.channels;
    const bool nlp = config_.mode == InputMode::Nlp;
    Matrix dx;
    if (nlp) {
      dx = Matrix::Zero(trace.embedded.rows(), trace.embedded.cols());
    }

    for (std::size_t wi = 0; wi < config_.kernel_widths.size(); ++wi) {
      const WidthTrace& wt = trace.widths[wi];
      if (wt.preact.rows() == 0) continue;
      const int w = config_.kernel_widths[wi];
      Matrix& dweight = params_[conv_w_idx_[wi]].grad;
      Matrix& dbias = params_[conv_b_idx_[wi]].grad;
      const Matrix& weight = params_[conv_w_idx_[wi]].value;
      for (int c = 0; c < channels; ++c) {
        int row = wt.argmax[static_cast<std::size_t>(c)];
        if (row < 0) continue;
        Scalar g = dconcat[static_cast<Eigen::Index>(wi) * channels + c];
        if (g == Scalar(0)) continue;
        dweight.col(c) += g * wt.unfolded.row(row).transpose();
        dbias(0, c) += g;
        if (nlp) {
          for (int k = 0; k < w; ++k) {
            dx.row(row + k) +=
                g * weight.col(c)
                        .segment(k * config_.input_dim, config_.input_dim)
                        .transpose();
          }
        }
      }
    }

    if (nlp) {
      const std::vector<int>& ids = batch.token_ids[static_cast<std::size_t>(i)];
      Matrix& demb = params_[embedding_idx_].grad;
      for (Eigen::Index t = 0; t < dx.rows(); ++t) {
        demb.row(ids[static_cast<std::size_t>(t)]) += dx.row(t);
      }
    }
  }

  CnnConfig config_;
  std::vector<Param<Scalar>> params_;
  int embedding_idx_ = -1;
  std::vector<int> conv_w_idx_;
  std::vector<int> conv_b_idx_;
  std::vector<int> fc_w_idx_;
  std::vector<int> fc_b_idx_;
};

}  // namespace apifeat
