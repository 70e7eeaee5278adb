#include "apifeat/strings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "apifeat/errors.hpp"

namespace apifeat {

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

bool ends_with_ci(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  std::size_t off = s.size() - suffix.size();
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[off + i])) != suffix[i]) {
      return false;
    }
  }
  return true;
}

bool has_separator(std::string_view s) {
  return s.find('/') != std::string_view::npos ||
         s.find('\\') != std::string_view::npos;
}

bool looks_like_url(std::string_view s) {
  return starts_with_ci(s, "http://") || starts_with_ci(s, "https://") ||
         starts_with_ci(s, "ftp://") || starts_with_ci(s, "www.");
}

bool looks_like_registry_key(std::string_view s) {
  static constexpr std::string_view prefixes[] = {
      "hkey_", "hklm\\", "hkcu\\", "hkcr\\", "hku\\", "hkcc\\", "\\registry\\"};
  for (std::string_view p : prefixes) {
    if (starts_with_ci(s, p)) return true;
  }
  return false;
}

bool looks_like_file_path(std::string_view s) {
  if (s.size() >= 2 && std::isalpha(static_cast<unsigned char>(s[0])) &&
      s[1] == ':') {
    return true;  // drive letter
  }
  return has_separator(s);  // UNC and relative paths
}

}  // namespace

const char* to_string(StringCategory category) {
  switch (category) {
    case StringCategory::FilePath: return "file_path";
    case StringCategory::DllName: return "dll_name";
    case StringCategory::RegistryKey: return "registry_key";
    case StringCategory::Url: return "url";
    case StringCategory::Other: return "other";
  }
  return "other";
}

StringCategory classify_string(std::string_view s) {
  if (looks_like_url(s)) return StringCategory::Url;
  if (looks_like_registry_key(s)) return StringCategory::RegistryKey;
  if (looks_like_file_path(s)) return StringCategory::FilePath;
  if (ends_with_ci(s, ".dll")) return StringCategory::DllName;
  return StringCategory::Other;
}

NgramCounts ngram_counts(std::string_view s) {
  NgramCounts counts;
  for (std::size_t n = 3; n <= 5; ++n) {
    if (s.size() < n) break;
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
      ++counts[std::string(s.substr(i, n))];
    }
  }
  return counts;
}

double ngram_sq_norm(const NgramCounts& counts) {
  double sq = 0.0;
  for (const auto& [gram, c] : counts) {
    sq += static_cast<double>(c) * static_cast<double>(c);
  }
  return sq;
}

double cosine_sim(const NgramCounts& a, double sq_norm_a, const NgramCounts& b,
                  double sq_norm_b) {
  if (sq_norm_a == 0.0 || sq_norm_b == 0.0) return 0.0;
  const NgramCounts& small = a.size() <= b.size() ? a : b;
  const NgramCounts& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [gram, c] : small) {
    auto it = large.find(gram);
    if (it != large.end()) {
      dot += static_cast<double>(c) * static_cast<double>(it->second);
    }
  }
  return dot / std::sqrt(sq_norm_a * sq_norm_b);
}

double cosine_sim(std::string_view a, std::string_view b) {
  NgramCounts ga = ngram_counts(a);
  NgramCounts gb = ngram_counts(b);
  return cosine_sim(ga, ngram_sq_norm(ga), gb, ngram_sq_norm(gb));
}

SimilarityEncoder SimilarityEncoder::fit(const std::vector<std::string>& strings,
                                         StringCategory category, int k) {
  if (strings.empty()) {
    throw EmptyCorpusError("SimilarityEncoder::fit: no strings for category " +
                           std::string(to_string(category)));
  }
  // std::map keeps ties resolved lexicographically without a second sort key
  std::map<std::string, std::uint64_t> freq;
  for (const std::string& s : strings) ++freq[s];

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(),
                                                            freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> dict;
  for (const auto& [s, c] : ranked) {
    if (static_cast<int>(dict.size()) >= k) break;
    dict.push_back(s);
  }
  return from_dictionary(std::move(dict), category, k);
}

SimilarityEncoder SimilarityEncoder::from_dictionary(
    std::vector<std::string> dictionary, StringCategory category, int k) {
  SimilarityEncoder enc;
  enc.category_ = category;
  enc.k_ = k;
  enc.dictionary_ = std::move(dictionary);
  enc.ref_counts_.reserve(enc.dictionary_.size());
  enc.ref_sq_norms_.reserve(enc.dictionary_.size());
  for (const std::string& d : enc.dictionary_) {
    enc.ref_counts_.push_back(ngram_counts(d));
    enc.ref_sq_norms_.push_back(ngram_sq_norm(enc.ref_counts_.back()));
  }
  return enc;
}

Eigen::VectorXf SimilarityEncoder::encode(std::string_view s) const {
  Eigen::VectorXf out = Eigen::VectorXf::Zero(k_);
  NgramCounts g = ngram_counts(s);
  double sq_norm = ngram_sq_norm(g);
  if (sq_norm == 0.0) return out;
  for (std::size_t i = 0; i < dictionary_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = static_cast<float>(
        cosine_sim(g, sq_norm, ref_counts_[i], ref_sq_norms_[i]));
  }
  return out;
}

}  // namespace apifeat
