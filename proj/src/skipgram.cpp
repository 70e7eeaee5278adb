#include "apifeat/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "apifeat/errors.hpp"
#include "apifeat/rng.hpp"

namespace apifeat {

namespace {

float stable_sigmoid(float x) {
  if (x >= 0.0f) {
    float e = std::exp(-x);
    return 1.0f / (1.0f + e);
  }
  float e = std::exp(x);
  return e / (1.0f + e);
}

// cumulative unigram^0.75 table for negative sampling
std::vector<double> build_sampling_cdf(const std::vector<std::uint64_t>& counts) {
  std::vector<double> cdf(counts.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc += std::pow(static_cast<double>(counts[i]), 0.75);
    cdf[i] = acc;
  }
  return cdf;
}

int sample_from_cdf(const std::vector<double>& cdf, Rng& rng) {
  double u = rng.next_unit() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<int>(it - cdf.begin());
}

}  // namespace

SkipGramModel train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                             const SkipGramConfig& config) {
  if (corpus.empty()) throw EmptyCorpusError("train_skipgram: empty corpus");
  if (config.dim < 1) throw ConfigError("train_skipgram: dim must be >= 1");

  // vocabulary in first-seen order would depend on corpus permutation;
  // lexicographic order keeps the model a pure function of the multiset
  std::map<std::string, std::uint64_t> freq;
  for (const auto& seq : corpus) {
    for (const std::string& name : seq) ++freq[name];
  }
  if (freq.empty()) throw EmptyCorpusError("train_skipgram: corpus has no names");

  SkipGramModel model;
  model.window = config.window;
  model.negatives = config.negatives;
  std::vector<std::uint64_t> counts;
  for (const auto& [name, count] : freq) {
    model.vocab.emplace(name, static_cast<int>(model.names.size()));
    model.names.push_back(name);
    counts.push_back(count);
  }

  const int vocab_size = static_cast<int>(model.names.size());
  const int dim = config.dim;
  Rng rng(config.seed);

  model.input_vectors.resize(vocab_size, dim);
  for (int w = 0; w < vocab_size; ++w) {
    for (int d = 0; d < dim; ++d) {
      model.input_vectors(w, d) =
          static_cast<float>((rng.next_unit() - 0.5) / dim);
    }
  }
  model.output_vectors = Eigen::MatrixXf::Zero(vocab_size, dim);

  std::vector<double> cdf = build_sampling_cdf(counts);

  // total center positions, for the linear learning-rate schedule
  std::uint64_t total_positions = 0;
  for (const auto& seq : corpus) total_positions += seq.size();
  total_positions *= static_cast<std::uint64_t>(std::max(config.epochs, 0));
  std::uint64_t seen_positions = 0;

  Eigen::VectorXf center_grad(dim);
  double epoch_loss = 0.0;
  std::uint64_t epoch_terms = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    epoch_loss = 0.0;
    epoch_terms = 0;
    for (const auto& seq : corpus) {
      std::vector<int> ids(seq.size());
      for (std::size_t i = 0; i < seq.size(); ++i) ids[i] = model.vocab[seq[i]];

      for (std::size_t i = 0; i < ids.size(); ++i) {
        double progress = total_positions
                              ? static_cast<double>(seen_positions) /
                                    static_cast<double>(total_positions)
                              : 0.0;
        float lr = static_cast<float>(
            config.learning_rate * std::max(1.0 - progress, 1e-4));
        ++seen_positions;

        const int center = ids[i];
        auto center_row = model.input_vectors.row(center);

        std::size_t lo = i >= static_cast<std::size_t>(config.window)
                             ? i - static_cast<std::size_t>(config.window)
                             : 0;
        std::size_t hi = std::min(ids.size(),
                                  i + static_cast<std::size_t>(config.window) + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          const int context = ids[j];
          center_grad.setZero();

          for (int neg = 0; neg <= config.negatives; ++neg) {
            int target;
            float label;
            if (neg == 0) {
              target = context;
              label = 1.0f;
            } else {
              target = sample_from_cdf(cdf, rng);
              if (target == context) continue;
              label = 0.0f;
            }
            auto out_row = model.output_vectors.row(target);
            float score = stable_sigmoid(center_row.dot(out_row));
            float g = (label - score) * lr;
            epoch_loss += -std::log(std::max(
                static_cast<double>(label > 0.5f ? score : 1.0f - score),
                1e-10));
            ++epoch_terms;
            center_grad += g * out_row.transpose();
            model.output_vectors.row(target) += g * center_row;
          }
          model.input_vectors.row(center) += center_grad.transpose();
        }
      }
    }
  }

  model.final_loss = epoch_terms ? epoch_loss / static_cast<double>(epoch_terms) : 0.0;
  return model;
}

Eigen::VectorXf embed_api(const SkipGramModel& model, std::string_view name) {
  auto it = model.vocab.find(std::string(name));
  if (it == model.vocab.end()) {
    return Eigen::VectorXf::Zero(model.input_vectors.cols());
  }
  return model.input_vectors.row(it->second).transpose();
}

}  // namespace apifeat
