#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apifeat {

enum class StringCategory { FilePath, DllName, RegistryKey, Url, Other };

const char* to_string(StringCategory category);

// First match in priority order Url -> RegistryKey -> FilePath -> DllName.
StringCategory classify_string(std::string_view s);

// Character n-gram multiset over n in {3,4,5}. Strings shorter than three
// characters yield an empty vector.
using NgramCounts = std::unordered_map<std::string, std::uint32_t>;

NgramCounts ngram_counts(std::string_view s);
// squared L2 norm; integer-valued and exact in double
double ngram_sq_norm(const NgramCounts& counts);

// Cosine similarity of the 3/4/5-gram count vectors, in [0,1]; defined as 0
// when either vector is empty. Counts are integers, so the dot product and
// squared norms are exact; dividing by sqrt(sq_a * sq_b) makes sim(s,s)
// exactly 1 and symmetry exact.
double cosine_sim(std::string_view a, std::string_view b);
double cosine_sim(const NgramCounts& a, double sq_norm_a, const NgramCounts& b,
                  double sq_norm_b);

// Encodes a string as its similarities to the K most frequent reference
// strings of one category. The dictionary is fitted on the training split
// and frozen; encoding never mutates the encoder.
class SimilarityEncoder {
public:
  SimilarityEncoder() = default;

  // Top-k by frequency, ties broken lexicographically. Throws
  // EmptyCorpusError when strings is empty.
  static SimilarityEncoder fit(const std::vector<std::string>& strings,
                               StringCategory category, int k);

  // Rebuilds an encoder from a persisted dictionary (reference n-gram
  // vectors are recomputed).
  static SimilarityEncoder from_dictionary(std::vector<std::string> dictionary,
                                           StringCategory category, int k);

  // k components; component i is cosine_sim(s, dictionary[i]) and slots past
  // the dictionary stay 0 when fewer than k distinct strings were seen.
  Eigen::VectorXf encode(std::string_view s) const;

  StringCategory category() const { return category_; }
  int k() const { return k_; }
  const std::vector<std::string>& dictionary() const { return dictionary_; }

private:
  StringCategory category_ = StringCategory::Other;
  int k_ = 0;
  std::vector<std::string> dictionary_;
  std::vector<NgramCounts> ref_counts_;
  std::vector<double> ref_sq_norms_;
};

}  // namespace apifeat
