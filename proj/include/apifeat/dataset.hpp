#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace apifeat {

// Class-label dictionary shared by both representations: names sorted
// lexicographically, index = class id.
struct LabelDict {
  std::vector<std::string> names;

  int id_of(const std::string& name) const;
  int size() const { return static_cast<int>(names.size()); }

  static LabelDict from_labels(const std::vector<std::string>& labels);
};

// Knowledge representation: one seq_len x dim matrix of per-call vectors per
// sample; rows at and past true_len are zero padding.
struct KnowledgeDataset {
  int seq_len = 0;
  int dim = 0;
  std::vector<std::string> sample_ids;
  std::vector<Eigen::MatrixXf> features;
  std::vector<int> true_len;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }
};

// NLP representation: fixed-length id sequences.
struct TokenDataset {
  int seq_len = 0;
  int vocab_size = 0;
  std::vector<std::string> sample_ids;
  std::vector<std::vector<int>> ids;
  std::vector<int> true_len;
  std::vector<int> labels;

  std::size_t size() const { return ids.size(); }
};

// Versioned little-endian binary files (magic, version, shapes, payload).
void save_knowledge_dataset(const std::filesystem::path& path,
                            const KnowledgeDataset& data);
KnowledgeDataset load_knowledge_dataset(const std::filesystem::path& path);

void save_token_dataset(const std::filesystem::path& path,
                        const TokenDataset& data);
TokenDataset load_token_dataset(const std::filesystem::path& path);

void save_label_dict(const std::filesystem::path& path, const LabelDict& dict);
LabelDict load_label_dict(const std::filesystem::path& path);

// Mean of the valid (unpadded) rows per sample; used by the logistic
// regression oracle and the Pearson analysis.
Eigen::MatrixXd mean_pooled_features(const KnowledgeDataset& data);

}  // namespace apifeat
