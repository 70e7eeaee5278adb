#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "apifeat/call_encoder.hpp"
#include "apifeat/cnn.hpp"
#include "apifeat/dataset.hpp"
#include "apifeat/vocab.hpp"

namespace apifeat {

// Pearson correlation between a per-sample block summary (mean absolute
// activation over the unpadded sequence) and one-vs-rest class indicators.
// Zero-variance cells are flagged undefined rather than zeroed.
struct BlockCorrelationCell {
  std::string class_label;  // class name, or "all" for malware-vs-goodware
  std::string block;        // api | string | integer | address
  double r = 0.0;
  bool defined = false;
};

struct BlockCorrelation {
  std::vector<BlockCorrelationCell> cells;

  const BlockCorrelationCell* find(const std::string& class_label,
                                   const std::string& block) const;
};

BlockCorrelation pearson_blocks(const KnowledgeDataset& data,
                                const FeatureLayout& layout,
                                const LabelDict& labels,
                                const std::string& goodware_label = "goodware");

struct AttributionEntry {
  std::string unit;  // block name or token text
  double score = 0.0;
};

struct AttributionReport {
  std::string method;  // permutation | shapley-exact | occlusion
  std::vector<AttributionEntry> entries;  // sorted by descending score
};

// Macro-F1 drop after destroying one feature block's association with the
// labels: each repeat swaps the block content between samples under a seeded
// permutation. Importance is the mean drop over repeats.
AttributionReport permutation_importance_blocks(const CnnModel<float>& model,
                                                const KnowledgeDataset& data,
                                                const FeatureLayout& layout,
                                                std::uint64_t seed,
                                                int repeats = 3);

// Token-unit importance over the most frequent tokens: permutation replaces
// every occurrence of the token with a draw from the evaluation split's
// unigram distribution; occlusion replaces it with <unk>.
AttributionReport permutation_importance_tokens(const CnnModel<float>& model,
                                                const TokenDataset& data,
                                                const Vocabulary& vocab,
                                                std::uint64_t seed,
                                                int repeats = 3,
                                                int max_tokens = 50);
AttributionReport occlusion_importance_tokens(const CnnModel<float>& model,
                                              const TokenDataset& data,
                                              const Vocabulary& vocab,
                                              int max_tokens = 50);

// Exact Shapley values by coalition enumeration. Features absent from a
// coalition take their baseline value; f maps a feature vector to a scalar
// score. Throws SizeError past 15 features (2^n blow-up).
std::vector<double> shapley_exact(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& instance, const Eigen::VectorXd& baseline);

}  // namespace apifeat
