#pragma once

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "apifeat/hashing.hpp"
#include "apifeat/report.hpp"
#include "apifeat/skipgram.hpp"
#include "apifeat/strings.hpp"

namespace apifeat {

// Fixed block layout of the per-call vector. Defaults give
// 32 + 4*16 + 16 + 20 = 132 dimensions:
//   [0,32)    api-name embedding
//   [32,48)   file-path similarity
//   [48,64)   dll similarity
//   [64,80)   registry similarity
//   [80,96)   url similarity
//   [96,112)  integer hash
//   [112,132) address hash
struct FeatureLayout {
  int api_dim = 32;
  int string_k = 16;
  int integer_dim = 16;
  int address_dim = 20;

  int api_offset() const { return 0; }
  int string_offset(StringCategory cat) const;
  int integer_offset() const { return api_dim + 4 * string_k; }
  int address_offset() const { return integer_offset() + integer_dim; }
  int total_dim() const { return api_dim + 4 * string_k + integer_dim + address_dim; }

  bool operator==(const FeatureLayout&) const = default;
};

// Ablation mask over the four feature sources. The six study modes are
// api, params, api+address, api+string, api+integer and all.
struct FeatureMask {
  bool api = true;
  bool string = true;
  bool integer = true;
  bool address = true;

  static FeatureMask all() { return {true, true, true, true}; }
  static FeatureMask api_only() { return {true, false, false, false}; }
  static FeatureMask params_only() { return {false, true, true, true}; }

  // names: all | api | params | api+address | api+string | api+integer
  static FeatureMask parse(const std::string& name);
  std::string name() const;

  bool operator==(const FeatureMask&) const = default;
};

const std::array<FeatureMask, 6>& ablation_masks();

struct BundleConfig {
  SkipGramConfig skipgram;
  FeatureLayout layout;
  int integer_hash_dim = 16;
  int address_hash_dim = 20;
  std::uint64_t segment_boundary = 1ull << 31;
  bool standardize_blocks = false;  // optional per-dimension standardization
};

// Every fitted encoder needed to turn an ApiCall into one PerCallVector.
// Immutable after fit; encoding never mutates it.
struct EncoderBundle {
  BundleConfig config;
  SkipGramModel skipgram;
  SimilarityEncoder file_paths;
  SimilarityEncoder dlls;
  SimilarityEncoder registry_keys;
  SimilarityEncoder urls;
  HashEncoder integer_hash;
  HashEncoder address_hash;
  // standardization statistics over training per-call vectors, empty unless
  // config.standardize_blocks
  Eigen::VectorXf feature_mean;
  Eigen::VectorXf feature_scale;

  const SimilarityEncoder& encoder_for(StringCategory cat) const;
};

// Fits all encoders on the given (training) reports. Categories with no
// training strings get an empty dictionary that encodes to zeros; their
// names are appended to *warnings when provided.
EncoderBundle fit_encoder_bundle(const std::vector<Report>& train_reports,
                                 const BundleConfig& config,
                                 std::vector<std::string>* warnings = nullptr);

// Optional memo for repeated strings/names; owned by the caller so the
// bundle itself stays immutable and encoding stays parallelizable with one
// cache per thread.
struct CallEncodeCache {
  std::unordered_map<std::string, Eigen::VectorXf> api;
  std::unordered_map<std::string, Eigen::VectorXf> strings[4];
};

// One call -> one per-call vector with the layout above. Multiple strings of
// the same category are mean-pooled; masked-out blocks are exactly zero.
Eigen::VectorXf encode_call(const ApiCall& call, const EncoderBundle& bundle,
                            const FeatureMask& mask,
                            CallEncodeCache* cache = nullptr);

// Whole report -> max_calls x dim matrix, rows past the true call count left
// zero. Returns the number of encoded rows.
int encode_report(const Report& report, const EncoderBundle& bundle,
                  const FeatureMask& mask, int max_calls, Eigen::MatrixXf& out,
                  CallEncodeCache* cache = nullptr);

// Versioned single-file artifact with dictionaries, embedding matrices, hash
// seeds and config. save returns the artifact content hash (hex) that the
// CLI prints for provenance.
std::string save_encoder_bundle(const std::filesystem::path& path,
                                const EncoderBundle& bundle);
EncoderBundle load_encoder_bundle(const std::filesystem::path& path);
std::string encoder_bundle_hash(const EncoderBundle& bundle);

}  // namespace apifeat
