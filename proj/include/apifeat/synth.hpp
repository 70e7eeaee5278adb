#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "apifeat/report.hpp"
#include "apifeat/report_io.hpp"

namespace apifeat {

// Background vocabulary of realistic Windows API names used by the corpus
// generator; fixed order, roughly frequency-ranked.
const std::vector<std::string>& windows_api_names();

// A short API-call pattern planted into a family's sequences. When injected,
// the calls also carry the family's signature arguments (noisy variants of
// the signature strings plus addresses biased toward one memory segment).
struct MotifSpec {
  std::vector<std::string> apis;  // consecutive API names, typically 3
  std::vector<std::string> dll_names;
  std::vector<std::string> file_paths;
  std::vector<std::string> registry_keys;
  std::vector<std::string> urls;
  // fixed named integer literals attached to motif calls, each with the
  // given per-call attach probability
  std::vector<std::pair<std::string, std::int64_t>> integers;
  double integer_probability = 1.0;
  double kernel_address_bias = 0.5;  // P(signature address in kernel segment)
  // per-call probability that an injected motif call keeps its signature
  // arguments but has its API name swapped for a background one; degrades
  // the name signal without touching the argument signal
  double api_noise = 0.0;
};

struct FamilySpec {
  std::string name;
  int samples_per_month = 10;
  YearMonth first_month;
  YearMonth last_month;
  std::vector<MotifSpec> motifs;
  double motif_strength = 0.5;  // P(motif injected at each slot)
  // argument-type mix; must sum to 1
  double p_string = 0.4;
  double p_integer = 0.3;
  double p_vaddr = 0.3;
};

struct CorpusSpec {
  std::vector<FamilySpec> families;
  int goodware_count = 0;  // spread evenly over the families' month span
  std::string goodware_label = "goodware";
  int min_calls = 30;
  int max_calls = 60;
  int motif_slot_stride = 8;  // one injection opportunity every N calls
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError on bad probabilities or ranges
};

struct SynthCorpus {
  std::vector<Report> reports;
  std::vector<ManifestRow> manifest;
};

// Deterministic per (spec, seed): every sample derives its own RNG from the
// master seed and the sample id, so generation order does not matter.
SynthCorpus generate_corpus(const CorpusSpec& spec);

// Writes <dir>/<sample_id>.json per report plus <dir>/manifest.csv — the
// exact schema report-ingest consumes.
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

CorpusSpec load_corpus_spec(const std::filesystem::path& json_path);
void save_corpus_spec(const std::filesystem::path& json_path,
                      const CorpusSpec& spec);

}  // namespace apifeat
