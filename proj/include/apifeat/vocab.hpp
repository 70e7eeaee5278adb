#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apifeat {

// Token -> dense id map with two reserved specials: <pad> is id 0, <unk> is
// id 1. Built from the training split only.
struct Vocabulary {
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;

  std::vector<std::string> tokens;  // id -> token, specials first
  std::unordered_map<std::string, int> ids;

  int size() const { return static_cast<int>(tokens.size()); }

  int lookup(std::string_view token) const {
    auto it = ids.find(std::string(token));
    return it == ids.end() ? kUnkId : it->second;
  }
};

// Keeps the top (cap - 2) tokens by frequency, ties lexicographic; cap < 3
// is a ConfigError.
Vocabulary build_vocab(const std::vector<std::string>& tokens, int cap);

// Fixed-length id sequence: truncate to length, then pad with <pad>.
struct TokenSequence {
  std::vector<int> ids;
  int true_length = 0;
};

TokenSequence encode_tokens(const Vocabulary& vocab,
                            const std::vector<std::string>& tokens, int length);

// One token per line in id order; diffable and byte-stable.
void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::filesystem::path& path);

}  // namespace apifeat
