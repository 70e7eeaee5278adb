#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace apifeat {

// Ordered byte-pair merge rules; application order equals learned order.
struct BpeMerges {
  std::vector<std::pair<std::string, std::string>> rules;

  bool operator==(const BpeMerges&) const = default;
};

// Learns merges greedily by pair frequency over the corpus tokens (pairs are
// counted within token boundaries, never across whitespace). Ties break to
// the lexicographically smallest pair; learning stops early once no pair
// occurs twice. Throws EmptyCorpusError on an empty corpus.
BpeMerges train_bpe(const std::vector<std::vector<std::string>>& corpus,
                    int num_merges);

// Splits one token into characters and applies the merge rules in order,
// left to right without overlap.
std::vector<std::string> apply_bpe(std::string_view token, const BpeMerges& merges);

// One rule per line, "left right", in learned order.
void save_bpe_merges(const std::filesystem::path& path, const BpeMerges& merges);
BpeMerges load_bpe_merges(const std::filesystem::path& path);

}  // namespace apifeat
