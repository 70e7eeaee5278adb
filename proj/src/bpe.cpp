#include "apifeat/bpe.hpp"

#include <fstream>
#include <map>

#include "apifeat/errors.hpp"

namespace apifeat {

namespace {

using Symbols = std::vector<std::string>;
using Pair = std::pair<std::string, std::string>;

Symbols to_chars(std::string_view token) {
  Symbols symbols;
  symbols.reserve(token.size());
  for (char c : token) symbols.emplace_back(1, c);
  return symbols;
}

// merge occurrences left to right, skipping overlaps
Symbols merge_pair(const Symbols& symbols, const Pair& rule) {
  Symbols out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == rule.first &&
        symbols[i + 1] == rule.second) {
      out.push_back(rule.first + rule.second);
      i += 2;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

BpeMerges train_bpe(const std::vector<std::vector<std::string>>& corpus,
                    int num_merges) {
  bool any_token = false;
  // distinct token -> frequency; std::map for deterministic iteration
  std::map<std::string, std::uint64_t> word_freq;
  for (const auto& stream : corpus) {
    for (const std::string& token : stream) {
      any_token = true;
      ++word_freq[token];
    }
  }
  if (!any_token) throw EmptyCorpusError("train_bpe: empty corpus");

  std::vector<std::pair<Symbols, std::uint64_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [token, freq] : word_freq) {
    words.emplace_back(to_chars(token), freq);
  }

  BpeMerges merges;
  for (int step = 0; step < num_merges; ++step) {
    std::map<Pair, std::uint64_t> pair_freq;
    for (const auto& [symbols, freq] : words) {
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_freq[{symbols[i], symbols[i + 1]}] += freq;
      }
    }

    // pick the most frequent pair; map order makes ties lexicographic
    const Pair* best = nullptr;
    std::uint64_t best_freq = 0;
    for (const auto& [pair, freq] : pair_freq) {
      if (freq > best_freq) {
        best = &pair;
        best_freq = freq;
      }
    }
    if (!best || best_freq < 2) break;  // no pair repeats

    merges.rules.push_back(*best);
    for (auto& [symbols, freq] : words) {
      symbols = merge_pair(symbols, *best);
    }
  }
  return merges;
}

std::vector<std::string> apply_bpe(std::string_view token, const BpeMerges& merges) {
  Symbols symbols = to_chars(token);
  for (const Pair& rule : merges.rules) {
    if (symbols.size() < 2) break;
    symbols = merge_pair(symbols, rule);
  }
  return symbols;
}

void save_bpe_merges(const std::filesystem::path& path, const BpeMerges& merges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write merges " + path.string());
  for (const auto& [left, right] : merges.rules) {
    out << left << ' ' << right << '\n';
  }
}

BpeMerges load_bpe_merges(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open merges " + path.string());
  BpeMerges merges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t space = line.find(' ');
    if (space == std::string::npos) {
      throw ParseError("bad merge rule: " + line, 0);
    }
    merges.rules.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return merges;
}

}  // namespace apifeat
