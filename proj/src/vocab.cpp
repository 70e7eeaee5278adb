#include "apifeat/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "apifeat/errors.hpp"

namespace apifeat {

Vocabulary build_vocab(const std::vector<std::string>& tokens, int cap) {
  if (cap < 3) throw ConfigError("build_vocab: cap must be >= 3");

  std::map<std::string, std::uint64_t> freq;
  for (const std::string& t : tokens) ++freq[t];

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(),
                                                            freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  vocab.tokens = {"<pad>", "<unk>"};
  const std::size_t keep = static_cast<std::size_t>(cap) - 2;
  for (const auto& [token, count] : ranked) {
    if (vocab.tokens.size() - 2 >= keep) break;
    vocab.tokens.push_back(token);
  }
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    vocab.ids.emplace(vocab.tokens[i], static_cast<int>(i));
  }
  return vocab;
}

TokenSequence encode_tokens(const Vocabulary& vocab,
                            const std::vector<std::string>& tokens, int length) {
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(length), Vocabulary::kPadId);
  seq.true_length =
      static_cast<int>(std::min<std::size_t>(tokens.size(),
                                             static_cast<std::size_t>(length)));
  for (int i = 0; i < seq.true_length; ++i) {
    seq.ids[static_cast<std::size_t>(i)] =
        vocab.lookup(tokens[static_cast<std::size_t>(i)]);
  }
  return seq;
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vocabulary " + path.string());
  for (const std::string& token : vocab.tokens) out << token << '\n';
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    vocab.tokens.push_back(line);
  }
  if (vocab.tokens.size() < 2 || vocab.tokens[0] != "<pad>" ||
      vocab.tokens[1] != "<unk>") {
    throw SchemaError("vocabulary file must start with <pad> and <unk>",
                      path.string());
  }
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) {
    vocab.ids.emplace(vocab.tokens[i], static_cast<int>(i));
  }
  return vocab;
}

}  // namespace apifeat
