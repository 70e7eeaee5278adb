#include "apifeat/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "apifeat/errors.hpp"
#include "apifeat/metrics.hpp"
#include "apifeat/rng.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

namespace {

struct Block {
  std::string name;
  int offset;
  int width;
};

// the four type-level blocks of the per-call layout
std::vector<Block> type_blocks(const FeatureLayout& layout) {
  return {{"api", layout.api_offset(), layout.api_dim},
          {"string", layout.string_offset(StringCategory::FilePath),
           4 * layout.string_k},
          {"integer", layout.integer_offset(), layout.integer_dim},
          {"address", layout.address_offset(), layout.address_dim}};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y,
               bool* defined) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    *defined = false;
    return 0.0;
  }
  *defined = true;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

const BlockCorrelationCell* BlockCorrelation::find(
    const std::string& class_label, const std::string& block) const {
  for (const BlockCorrelationCell& cell : cells) {
    if (cell.class_label == class_label && cell.block == block) return &cell;
  }
  return nullptr;
}

BlockCorrelation pearson_blocks(const KnowledgeDataset& data,
                                const FeatureLayout& layout,
                                const LabelDict& labels,
                                const std::string& goodware_label) {
  if (data.size() == 0) throw EmptyCorpusError("pearson_blocks: empty dataset");

  std::vector<Block> blocks = type_blocks(layout);
  // per sample, per block: mean absolute activation over the valid rows
  std::vector<std::vector<double>> summary(
      blocks.size(), std::vector<double>(data.size(), 0.0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    int len = data.true_len[i];
    if (len <= 0) continue;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      summary[b][i] = data.features[i]
                          .block(0, blocks[b].offset, len, blocks[b].width)
                          .cwiseAbs()
                          .mean();
    }
  }

  BlockCorrelation out;
  auto add_row = [&](const std::string& class_label,
                     const std::vector<double>& indicator) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      BlockCorrelationCell cell;
      cell.class_label = class_label;
      cell.block = blocks[b].name;
      cell.r = pearson(summary[b], indicator, &cell.defined);
      out.cells.push_back(cell);
    }
  };

  for (int c = 0; c < labels.size(); ++c) {
    std::vector<double> indicator(data.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      indicator[i] = data.labels[i] == c ? 1.0 : 0.0;
    }
    add_row(labels.names[static_cast<std::size_t>(c)], indicator);
  }

  // "all" row: malware vs goodware indicator
  auto gw = std::find(labels.names.begin(), labels.names.end(), goodware_label);
  if (gw != labels.names.end()) {
    int gw_id = static_cast<int>(gw - labels.names.begin());
    std::vector<double> indicator(data.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      indicator[i] = data.labels[i] != gw_id ? 1.0 : 0.0;
    }
    add_row("all", indicator);
  }
  return out;
}

namespace {

void sort_entries(AttributionReport& report) {
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const AttributionEntry& a, const AttributionEntry& b) {
                     return a.score > b.score;
                   });
}

double knowledge_macro_f1(const CnnModel<float>& model,
                          const KnowledgeDataset& data) {
  SequenceBatch<float> batch = to_batch<float>(data);
  Eigen::MatrixXd scores = model.softmax_scores(batch);
  std::vector<int> predictions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::Index best;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    predictions[i] = static_cast<int>(best);
  }
  return macro_f1_score(data.labels, predictions, model.config().classes);
}

double token_macro_f1(const CnnModel<float>& model, const TokenDataset& data) {
  SequenceBatch<float> batch = to_batch<float>(data);
  Eigen::MatrixXd scores = model.softmax_scores(batch);
  std::vector<int> predictions(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::Index best;
    scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    predictions[i] = static_cast<int>(best);
  }
  return macro_f1_score(data.labels, predictions, model.config().classes);
}

// most frequent non-special tokens over the valid positions
std::vector<int> frequent_tokens(const TokenDataset& data, int max_tokens) {
  std::map<int, std::uint64_t> freq;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int t = 0; t < data.true_len[i]; ++t) {
      int id = data.ids[i][static_cast<std::size_t>(t)];
      if (id > Vocabulary::kUnkId) ++freq[id];
    }
  }
  std::vector<std::pair<int, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<int> out;
  for (const auto& [id, count] : ranked) {
    if (static_cast<int>(out.size()) >= max_tokens) break;
    out.push_back(id);
  }
  return out;
}

}  // namespace

AttributionReport permutation_importance_blocks(const CnnModel<float>& model,
                                                const KnowledgeDataset& data,
                                                const FeatureLayout& layout,
                                                std::uint64_t seed, int repeats) {
  AttributionReport report;
  report.method = "permutation";
  double baseline = knowledge_macro_f1(model, data);

  for (const Block& block : type_blocks(layout)) {
    double drop_sum = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      Rng rng(splitmix64(seed ^ fnv1a64(block.name) ^
                         static_cast<std::uint64_t>(rep)));
      std::vector<std::size_t> perm(data.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      rng.shuffle(perm);

      KnowledgeDataset shuffled = data;
      for (std::size_t i = 0; i < data.size(); ++i) {
        shuffled.features[i].middleCols(block.offset, block.width) =
            data.features[perm[i]].middleCols(block.offset, block.width);
      }
      drop_sum += baseline - knowledge_macro_f1(model, shuffled);
    }
    report.entries.push_back({block.name, drop_sum / repeats});
  }
  sort_entries(report);
  return report;
}

AttributionReport permutation_importance_tokens(const CnnModel<float>& model,
                                                const TokenDataset& data,
                                                const Vocabulary& vocab,
                                                std::uint64_t seed, int repeats,
                                                int max_tokens) {
  AttributionReport report;
  report.method = "permutation";
  double baseline = token_macro_f1(model, data);

  // unigram pool for replacement draws, preserving the marginal distribution
  std::vector<int> pool;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int t = 0; t < data.true_len[i]; ++t) {
      pool.push_back(data.ids[i][static_cast<std::size_t>(t)]);
    }
  }
  if (pool.empty()) throw EmptyCorpusError("permutation_importance_tokens: no tokens");

  for (int token_id : frequent_tokens(data, max_tokens)) {
    double drop_sum = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      Rng rng(splitmix64(seed ^ static_cast<std::uint64_t>(token_id) ^
                         (static_cast<std::uint64_t>(rep) << 32)));
      TokenDataset shuffled = data;
      for (std::size_t i = 0; i < data.size(); ++i) {
        for (int t = 0; t < data.true_len[i]; ++t) {
          auto& slot = shuffled.ids[i][static_cast<std::size_t>(t)];
          if (slot == token_id) {
            slot = pool[rng.below(pool.size())];
          }
        }
      }
      drop_sum += baseline - token_macro_f1(model, shuffled);
    }
    report.entries.push_back(
        {vocab.tokens[static_cast<std::size_t>(token_id)], drop_sum / repeats});
  }
  sort_entries(report);
  return report;
}

AttributionReport occlusion_importance_tokens(const CnnModel<float>& model,
                                              const TokenDataset& data,
                                              const Vocabulary& vocab,
                                              int max_tokens) {
  AttributionReport report;
  report.method = "occlusion";
  double baseline = token_macro_f1(model, data);

  for (int token_id : frequent_tokens(data, max_tokens)) {
    TokenDataset occluded = data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (int t = 0; t < data.true_len[i]; ++t) {
        auto& slot = occluded.ids[i][static_cast<std::size_t>(t)];
        if (slot == token_id) slot = Vocabulary::kUnkId;
      }
    }
    report.entries.push_back(
        {vocab.tokens[static_cast<std::size_t>(token_id)],
         baseline - token_macro_f1(model, occluded)});
  }
  sort_entries(report);
  return report;
}

std::vector<double> shapley_exact(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& instance, const Eigen::VectorXd& baseline) {
  const int n = static_cast<int>(instance.size());
  if (baseline.size() != instance.size()) {
    throw ShapeError("shapley_exact: baseline size mismatch");
  }
  if (n > 15) {
    throw SizeError(
        "shapley_exact: more than 15 features; use permutation importance");
  }

  // value of every coalition
  const std::uint32_t n_sets = 1u << n;
  std::vector<double> value(n_sets);
  Eigen::VectorXd x(n);
  for (std::uint32_t mask = 0; mask < n_sets; ++mask) {
    for (int i = 0; i < n; ++i) {
      x[i] = (mask >> i) & 1u ? instance[i] : baseline[i];
    }
    value[mask] = f(x);
  }

  // coalition weights |S|! (n-|S|-1)! / n!
  std::vector<double> factorial(static_cast<std::size_t>(n) + 1, 1.0);
  for (int i = 1; i <= n; ++i) {
    factorial[static_cast<std::size_t>(i)] =
        factorial[static_cast<std::size_t>(i - 1)] * i;
  }
  std::vector<double> weight(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    weight[static_cast<std::size_t>(s)] =
        factorial[static_cast<std::size_t>(s)] *
        factorial[static_cast<std::size_t>(n - s - 1)] /
        factorial[static_cast<std::size_t>(n)];
  }

  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (std::uint32_t mask = 0; mask < n_sets; ++mask) {
    int size = std::popcount(mask);
    for (int i = 0; i < n; ++i) {
      if ((mask >> i) & 1u) continue;
      phi[static_cast<std::size_t>(i)] +=
          weight[static_cast<std::size_t>(size)] *
          (value[mask | (1u << i)] - value[mask]);
    }
  }
  return phi;
}

}  // namespace apifeat
