#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apifeat {

struct SkipGramConfig {
  int dim = 32;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;  // linear decay to 1e-4 of this
  std::uint64_t seed = 1;
};

// Word2Vec skip-gram with negative sampling over API-name sequences.
// Training is single-threaded and seeded, so the same corpus and seed give
// bit-identical matrices.
struct SkipGramModel {
  std::unordered_map<std::string, int> vocab;
  std::vector<std::string> names;     // index -> name
  Eigen::MatrixXf input_vectors;      // |V| x dim, the embeddings
  Eigen::MatrixXf output_vectors;     // |V| x dim, context side
  int window = 5;
  int negatives = 5;
  double final_loss = 0.0;  // mean NLL over the last epoch, 0 if no pairs
};

SkipGramModel train_skipgram(const std::vector<std::vector<std::string>>& corpus,
                             const SkipGramConfig& config);

// In-vocabulary names return their input vector; unseen names the zero
// vector of the same dimension.
Eigen::VectorXf embed_api(const SkipGramModel& model, std::string_view name);

}  // namespace apifeat
