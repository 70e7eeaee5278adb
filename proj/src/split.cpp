#include "apifeat/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apifeat/errors.hpp"
#include "apifeat/rng.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

using nlohmann::json;

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

namespace {

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ParseError("unknown split '" + name + "'", 0);
}

// month-scoped seed so the result does not depend on month processing order
std::uint64_t month_seed(std::uint64_t seed, const YearMonth& month,
                         std::uint64_t salt) {
  return splitmix64(seeded_hash(month.str(), seed) ^ salt);
}

std::vector<std::string> sorted_ids(const std::vector<const Report*>& reports) {
  std::vector<std::string> ids;
  ids.reserve(reports.size());
  for (const Report* r : reports) ids.push_back(r->sample_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> pick_ids(const std::vector<std::string>& ids,
                                  std::size_t keep, Rng& rng) {
  std::vector<std::string> out;
  for (std::size_t idx : rng.sample_without_replacement(ids.size(), keep)) {
    out.push_back(ids[idx]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::unordered_map<std::string, const SampleAssignment*> SplitPlan::index() const {
  std::unordered_map<std::string, const SampleAssignment*> out;
  out.reserve(assignments.size());
  for (const SampleAssignment& a : assignments) out.emplace(a.sample_id, &a);
  return out;
}

std::vector<const Report*> SplitPlan::members(const std::vector<Report>& corpus,
                                              Split split) const {
  std::unordered_map<std::string, const Report*> by_id;
  by_id.reserve(corpus.size());
  for (const Report& r : corpus) by_id.emplace(r.sample_id, &r);

  std::vector<const Report*> out;
  for (const SampleAssignment& a : assignments) {
    if (a.split != split || !a.kept) continue;
    auto it = by_id.find(a.sample_id);
    if (it != by_id.end()) out.push_back(it->second);
  }
  return out;
}

std::size_t SplitPlan::kept_count(Split split) const {
  std::size_t n = 0;
  for (const SampleAssignment& a : assignments) {
    if (a.split == split && a.kept) ++n;
  }
  return n;
}

SplitPlan temporal_split(const std::vector<Report>& reports, YearMonth train_end,
                         YearMonth val_end) {
  if (!(train_end < val_end)) {
    throw ConfigError("temporal_split: train_end must precede val_end");
  }

  SplitPlan plan;
  plan.config.train_end = train_end;
  plan.config.val_end = val_end;
  plan.assignments.reserve(reports.size());
  std::size_t counts[3] = {0, 0, 0};
  for (const Report& r : reports) {
    SampleAssignment a;
    a.sample_id = r.sample_id;
    a.month = r.month;
    a.family = r.label;
    if (r.month <= train_end) {
      a.split = Split::Train;
    } else if (r.month <= val_end) {
      a.split = Split::Val;
    } else {
      a.split = Split::Test;
    }
    ++counts[static_cast<int>(a.split)];
    plan.assignments.push_back(std::move(a));
  }

  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    if (counts[static_cast<int>(s)] == 0) {
      throw SplitError(std::string("temporal_split: empty ") + to_string(s) +
                           " partition",
                       to_string(s));
    }
  }

  std::sort(plan.assignments.begin(), plan.assignments.end(),
            [](const SampleAssignment& a, const SampleAssignment& b) {
              if (a.month != b.month) return a.month < b.month;
              return a.sample_id < b.sample_id;
            });
  return plan;
}

std::vector<std::string> balance_families(
    const std::vector<const Report*>& month_reports, std::uint64_t seed,
    const std::string& goodware_label) {
  // family -> sorted sample ids; std::map keeps family order deterministic
  std::map<std::string, std::vector<const Report*>> families;
  std::vector<std::string> kept;
  for (const Report* r : month_reports) {
    if (r->label == goodware_label) {
      kept.push_back(r->sample_id);  // goodware handled by the ratio rule
    } else {
      families[r->label].push_back(r);
    }
  }
  if (families.empty()) return kept;

  std::size_t min_count = static_cast<std::size_t>(-1);
  for (const auto& [family, members] : families) {
    min_count = std::min(min_count, members.size());
  }

  for (const auto& [family, members] : families) {
    std::vector<std::string> ids = sorted_ids(members);
    Rng rng(splitmix64(seed ^ fnv1a64(family)));
    for (std::string& id : pick_ids(ids, min_count, rng)) {
      kept.push_back(std::move(id));
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<std::string> enforce_goodware_ratio(
    const std::vector<const Report*>& month_reports, double ratio,
    std::uint64_t seed, bool* warning, const std::string& goodware_label) {
  std::vector<const Report*> goodware;
  std::size_t malware_count = 0;
  std::vector<std::string> kept;
  for (const Report* r : month_reports) {
    if (r->label == goodware_label) {
      goodware.push_back(r);
    } else {
      ++malware_count;
      kept.push_back(r->sample_id);
    }
  }

  // round half up
  std::size_t target = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(malware_count) + 0.5));
  if (warning) *warning = false;
  if (target >= goodware.size()) {
    if (target > goodware.size() && warning) *warning = true;
    for (const Report* r : goodware) kept.push_back(r->sample_id);
  } else {
    std::vector<std::string> ids = sorted_ids(goodware);
    Rng rng(splitmix64(seed ^ fnv1a64(goodware_label)));
    for (std::string& id : pick_ids(ids, target, rng)) {
      kept.push_back(std::move(id));
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

void holdout_new_families(SplitPlan& plan, const std::vector<Report>& reports) {
  std::map<std::string, YearMonth> first_month;
  for (const Report& r : reports) {
    if (r.label == plan.config.goodware_label) continue;
    auto it = first_month.find(r.label);
    if (it == first_month.end() || r.month < it->second) {
      first_month[r.label] = r.month;
    }
  }

  std::set<std::string> holdouts;
  for (const auto& [family, month] : first_month) {
    if (plan.config.train_end < month) holdouts.insert(family);
  }

  plan.holdout_families.assign(holdouts.begin(), holdouts.end());
  for (SampleAssignment& a : plan.assignments) {
    if (a.split != Split::Test && holdouts.count(a.family)) {
      a.kept = false;
    }
  }
}

SplitPlan make_split_plan(const std::vector<Report>& reports,
                          const SplitConfig& config) {
  SplitPlan plan = temporal_split(reports, config.train_end, config.val_end);
  plan.config = config;
  holdout_new_families(plan, reports);

  std::unordered_map<std::string, const Report*> by_id;
  for (const Report& r : reports) by_id.emplace(r.sample_id, &r);

  std::map<YearMonth, std::vector<const Report*>> months;
  for (const SampleAssignment& a : plan.assignments) {
    if (!a.kept) continue;
    months[a.month].push_back(by_id.at(a.sample_id));
  }

  std::set<std::string> kept_ids;
  std::size_t malware_total = 0;
  std::map<YearMonth, std::vector<const Report*>> balanced_months;
  for (const auto& [month, samples] : months) {
    std::vector<std::string> balanced = balance_families(
        samples, month_seed(config.seed, month, 0xb), config.goodware_label);
    std::set<std::string> balanced_set(balanced.begin(), balanced.end());
    std::vector<const Report*> survivors;
    for (const Report* r : samples) {
      if (!balanced_set.count(r->sample_id)) continue;
      survivors.push_back(r);
      if (r->label != config.goodware_label) ++malware_total;
    }
    balanced_months[month] = std::move(survivors);
  }

  if (config.ratio_per_month) {
    for (const auto& [month, samples] : balanced_months) {
      bool warn = false;
      bool has_malware = false;
      for (const Report* r : samples) {
        if (r->label != config.goodware_label) has_malware = true;
      }
      std::vector<std::string> kept = enforce_goodware_ratio(
          samples, config.goodware_ratio, month_seed(config.seed, month, 0x9),
          &warn, config.goodware_label);
      kept_ids.insert(kept.begin(), kept.end());
      if (warn) {
        plan.warnings.push_back("goodware shortfall in " + month.str());
      }
      if (!has_malware) {
        plan.warnings.push_back("no malware in " + month.str() +
                                "; month contributes no goodware");
      }
    }
  } else {
    // global variant: one ratio over the whole corpus
    std::vector<const Report*> all;
    for (const auto& [month, samples] : balanced_months) {
      all.insert(all.end(), samples.begin(), samples.end());
    }
    bool warn = false;
    std::vector<std::string> kept =
        enforce_goodware_ratio(all, config.goodware_ratio,
                               splitmix64(config.seed ^ 0x9), &warn,
                               config.goodware_label);
    kept_ids.insert(kept.begin(), kept.end());
    if (warn) plan.warnings.push_back("goodware shortfall (global ratio)");
  }

  for (SampleAssignment& a : plan.assignments) {
    if (a.kept && !kept_ids.count(a.sample_id)) a.kept = false;
  }
  return plan;
}

CovariateProfile covariate_profile(const SplitPlan& plan,
                                   const std::vector<Report>& reports,
                                   std::size_t max_calls,
                                   double drift_threshold) {
  std::unordered_map<std::string, const Report*> by_id;
  for (const Report& r : reports) by_id.emplace(r.sample_id, &r);

  std::map<YearMonth, std::vector<Report>> months;
  for (const SampleAssignment& a : plan.assignments) {
    if (!a.kept) continue;
    auto it = by_id.find(a.sample_id);
    if (it != by_id.end()) months[a.month].push_back(*it->second);
  }

  CovariateProfile profile;
  profile.threshold = drift_threshold;
  for (const auto& [month, samples] : months) {
    profile.by_month[month] = type_proportions_truncated(samples, max_calls);
  }

  const TypeProportions* prev = nullptr;
  for (const auto& [month, props] : profile.by_month) {
    if (prev) {
      double l1 = std::abs(props.api_name - prev->api_name) +
                  std::abs(props.string - prev->string) +
                  std::abs(props.integer - prev->integer) +
                  std::abs(props.vaddr - prev->vaddr);
      profile.max_l1_shift = std::max(profile.max_l1_shift, l1);
    }
    prev = &props;
  }
  profile.drift_flagged = profile.max_l1_shift > drift_threshold;
  return profile;
}

void save_split_plan(const std::filesystem::path& manifest_csv,
                     const std::filesystem::path& summary_json,
                     const SplitPlan& plan) {
  std::ofstream csv(manifest_csv, std::ios::binary);
  if (!csv) throw ConfigError("cannot write split manifest " + manifest_csv.string());
  csv << "sample_id,split,month,family,kept\n";
  for (const SampleAssignment& a : plan.assignments) {
    csv << a.sample_id << ',' << to_string(a.split) << ',' << a.month.str()
        << ',' << a.family << ',' << (a.kept ? 1 : 0) << '\n';
  }

  json counts;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    counts[to_string(s)] = plan.kept_count(s);
  }
  json summary{{"format", "apifeat.split"},
               {"version", 1},
               {"train_end", plan.config.train_end.str()},
               {"val_end", plan.config.val_end.str()},
               {"goodware_ratio", plan.config.goodware_ratio},
               {"ratio_per_month", plan.config.ratio_per_month},
               {"goodware_label", plan.config.goodware_label},
               {"seed", plan.config.seed},
               {"kept_counts", counts},
               {"holdout_families", plan.holdout_families},
               {"warnings", plan.warnings}};
  std::ofstream js(summary_json, std::ios::binary);
  if (!js) throw ConfigError("cannot write split summary " + summary_json.string());
  js << summary.dump(2) << '\n';
}

SplitPlan load_split_plan(const std::filesystem::path& manifest_csv,
                          const std::filesystem::path& summary_json) {
  std::ifstream js(summary_json, std::ios::binary);
  if (!js) throw ConfigError("cannot open split summary " + summary_json.string());
  std::stringstream buf;
  buf << js.rdbuf();
  json summary = json::parse(buf.str());
  if (summary.value("format", "") != "apifeat.split" ||
      summary.value("version", 0) != 1) {
    throw SchemaError("unsupported split summary", summary_json.string());
  }

  SplitPlan plan;
  plan.config.train_end = YearMonth::parse(summary.at("train_end").get<std::string>());
  plan.config.val_end = YearMonth::parse(summary.at("val_end").get<std::string>());
  plan.config.goodware_ratio = summary.at("goodware_ratio").get<double>();
  plan.config.ratio_per_month = summary.at("ratio_per_month").get<bool>();
  plan.config.goodware_label = summary.at("goodware_label").get<std::string>();
  plan.config.seed = summary.at("seed").get<std::uint64_t>();
  plan.holdout_families =
      summary.at("holdout_families").get<std::vector<std::string>>();
  plan.warnings = summary.at("warnings").get<std::vector<std::string>>();

  std::ifstream csv(manifest_csv, std::ios::binary);
  if (!csv) throw ConfigError("cannot open split manifest " + manifest_csv.string());
  std::string line;
  bool first = true;
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != "sample_id,split,month,family,kept") {
        throw ParseError("bad split manifest header", 0);
      }
      continue;
    }
    std::istringstream ss(line);
    std::string id, split, month, family, kept;
    if (!std::getline(ss, id, ',') || !std::getline(ss, split, ',') ||
        !std::getline(ss, month, ',') || !std::getline(ss, family, ',') ||
        !std::getline(ss, kept)) {
      throw ParseError("bad split manifest row: " + line, 0);
    }
    SampleAssignment a;
    a.sample_id = id;
    a.split = split_from_name(split);
    a.month = YearMonth::parse(month);
    a.family = family;
    a.kept = kept == "1";
    plan.assignments.push_back(std::move(a));
  }
  return plan;
}

}  // namespace apifeat
