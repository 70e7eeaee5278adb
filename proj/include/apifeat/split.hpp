#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "apifeat/report.hpp"

namespace apifeat {

enum class Split { Train, Val, Test };

const char* to_string(Split split);

struct SplitConfig {
  YearMonth train_end;  // last training month, inclusive
  YearMonth val_end;    // last validation month, inclusive
  double goodware_ratio = 4.0;
  bool ratio_per_month = true;  // false: enforce the ratio globally
  std::string goodware_label = "goodware";
  std::uint64_t seed = 1;
};

struct SampleAssignment {
  std::string sample_id;
  Split split = Split::Train;
  YearMonth month;
  std::string family;
  bool kept = true;  // false once downsampling or family holdout drops it
};

// Month-partitioned train/val/test plan with family holdouts and
// downsampling records. Assignments are sorted by (month, sample_id), so a
// serialized plan is byte-identical across reruns of the same corpus+seed.
struct SplitPlan {
  SplitConfig config;
  std::vector<SampleAssignment> assignments;
  std::vector<std::string> holdout_families;  // sorted
  std::vector<std::string> warnings;

  std::unordered_map<std::string, const SampleAssignment*> index() const;
  std::vector<const Report*> members(const std::vector<Report>& corpus,
                                     Split split) const;
  std::size_t kept_count(Split split) const;
};

// Assigns every report to train/val/test by month: train <= train_end <
// val <= val_end < test. Throws SplitError naming the first empty partition.
SplitPlan temporal_split(const std::vector<Report>& reports, YearMonth train_end,
                         YearMonth val_end);

// Downsamples every malware family in one month to the month's smallest
// family count; returns kept sample ids. Goodware passes through untouched.
std::vector<std::string> balance_families(
    const std::vector<const Report*>& month_reports, std::uint64_t seed,
    const std::string& goodware_label = "goodware");

// Keeps round(ratio * malware_count) goodware in one month; when goodware
// falls short everything is kept and *warning is set.
std::vector<std::string> enforce_goodware_ratio(
    const std::vector<const Report*>& month_reports, double ratio,
    std::uint64_t seed, bool* warning = nullptr,
    const std::string& goodware_label = "goodware");

// Malware families whose earliest month postdates train_end are dropped from
// train/val and kept only in test; recorded in plan.holdout_families.
void holdout_new_families(SplitPlan& plan, const std::vector<Report>& reports);

// Full protocol: temporal assignment, family holdout, per-month family
// balancing, goodware ratio enforcement.
SplitPlan make_split_plan(const std::vector<Report>& reports,
                          const SplitConfig& config);

// Per-month feature-type fractions over the first max_calls calls of each
// kept sample; the drift flag trips when any month-to-month L1 distance
// exceeds the threshold.
struct CovariateProfile {
  std::map<YearMonth, TypeProportions> by_month;
  double max_l1_shift = 0.0;
  double threshold = 0.0;
  bool drift_flagged = false;
};

CovariateProfile covariate_profile(const SplitPlan& plan,
                                   const std::vector<Report>& reports,
                                   std::size_t max_calls = 1024,
                                   double drift_threshold = 0.25);

// CSV manifest sample_id,split,month,family,kept plus a JSON summary with
// counts, holdouts and the seed.
void save_split_plan(const std::filesystem::path& manifest_csv,
                     const std::filesystem::path& summary_json,
                     const SplitPlan& plan);
SplitPlan load_split_plan(const std::filesystem::path& manifest_csv,
                          const std::filesystem::path& summary_json);

}  // namespace apifeat
