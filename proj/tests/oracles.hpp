#pragma once

// Test-only reference implementations. These stay deliberately naive and
// independent of the library code paths they check.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "apifeat/cnn.hpp"

namespace oracle {

// cosine similarity over 3/4/5-gram count vectors, straight from the
// definition with ordered maps and long doubles
inline std::map<std::string, long long> char_ngrams(const std::string& s) {
  std::map<std::string, long long> grams;
  for (std::size_t n = 3; n <= 5; ++n) {
    if (s.size() < n) continue;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      grams[s.substr(i, n)] += 1;
    }
  }
  return grams;
}

inline double ngram_cosine(const std::string& a, const std::string& b) {
  auto ga = char_ngrams(a);
  auto gb = char_ngrams(b);
  long double dot = 0, na = 0, nb = 0;
  for (const auto& [gram, c] : ga) {
    na += static_cast<long double>(c) * c;
    auto it = gb.find(gram);
    if (it != gb.end()) dot += static_cast<long double>(c) * it->second;
  }
  for (const auto& [gram, c] : gb) nb += static_cast<long double>(c) * c;
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

// slow reference BPE trainer: full pair recount each step, lexicographic
// tie-break, stop when the best pair occurs fewer than twice
inline std::vector<std::pair<std::string, std::string>> bpe_merges(
    const std::vector<std::string>& tokens, int num_merges) {
  std::vector<std::vector<std::string>> words;
  for (const std::string& t : tokens) {
    std::vector<std::string> chars;
    for (char c : t) chars.emplace_back(1, c);
    words.push_back(std::move(chars));
  }

  std::vector<std::pair<std::string, std::string>> merges;
  for (int step = 0; step < num_merges; ++step) {
    std::map<std::pair<std::string, std::string>, long long> freq;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        freq[{w[i], w[i + 1]}] += 1;
      }
    }
    std::pair<std::string, std::string> best;
    long long best_freq = 0;
    for (const auto& [pair, f] : freq) {
      if (f > best_freq) {
        best = pair;
        best_freq = f;
      }
    }
    if (best_freq < 2) break;
    merges.push_back(best);
    for (auto& w : words) {
      std::vector<std::string> merged;
      std::size_t i = 0;
      while (i < w.size()) {
        if (i + 1 < w.size() && w[i] == best.first && w[i + 1] == best.second) {
          merged.push_back(w[i] + w[i + 1]);
          i += 2;
        } else {
          merged.push_back(w[i]);
          ++i;
        }
      }
      w = std::move(merged);
    }
  }
  return merges;
}

// straight-line CNN forward for one knowledge-mode sample, reading the
// parameters by name; no Eigen products, just loops
inline std::vector<double> cnn_forward(const apifeat::CnnModel<double>& model,
                                       const Eigen::MatrixXd& x, int true_len) {
  const apifeat::CnnConfig& cfg = model.config();
  auto find = [&](const std::string& name) -> const Eigen::MatrixXd& {
    for (const auto& p : model.params()) {
      if (p.name == name) return p.value;
    }
    throw std::runtime_error("missing param " + name);
  };

  std::vector<double> concat;
  for (int w : cfg.kernel_widths) {
    const Eigen::MatrixXd& weight = find("conv_w" + std::to_string(w) + ".weight");
    const Eigen::MatrixXd& bias = find("conv_w" + std::to_string(w) + ".bias");
    int valid = true_len - w + 1;
    for (int c = 0; c < cfg.channels; ++c) {
      double best = 0.0;  // empty or all-negative pools to zero
      for (int t = 0; t < valid; ++t) {
        double z = bias(0, c);
        for (int k = 0; k < w; ++k) {
          for (int d = 0; d < cfg.input_dim; ++d) {
            z += x(t + k, d) * weight(k * cfg.input_dim + d, c);
          }
        }
        double r = z > 0 ? z : 0.0;
        if (r > best) best = r;
      }
      concat.push_back(best);
    }
  }

  std::vector<double> h = concat;
  for (std::size_t layer = 0; layer <= cfg.hidden.size(); ++layer) {
    bool output = layer == cfg.hidden.size();
    std::string base = output ? "out" : "fc" + std::to_string(layer);
    const Eigen::MatrixXd& weight = find(base + ".weight");
    const Eigen::MatrixXd& bias = find(base + ".bias");
    std::vector<double> next(static_cast<std::size_t>(weight.cols()), 0.0);
    for (Eigen::Index o = 0; o < weight.cols(); ++o) {
      double a = bias(0, o);
      for (Eigen::Index in = 0; in < weight.rows(); ++in) {
        a += h[static_cast<std::size_t>(in)] * weight(in, o);
      }
      next[static_cast<std::size_t>(o)] = output ? a : (a > 0 ? a : 0.0);
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace oracle
