#pragma once

#include <string>
#include <vector>

#include "apifeat/call_encoder.hpp"
#include "apifeat/config.hpp"
#include "apifeat/report.hpp"

namespace apifeat {

// Word/token extraction used by the NLP pipeline. The mask selects which
// report fields enter the text (api names and/or argument kinds), which is
// how the ablation study works in nlp mode; the full mask reproduces the
// cleaned-JSON stream.
std::vector<std::string> report_words(const Report& report,
                                      const FeatureMask& mask, bool lowercase,
                                      bool strip_keys);

// One pipeline stage against the artifact directory. Commands: synth,
// ingest, stats, split, fit, encode, train, eval, explain, ablate.
// Prerequisite artifacts are checked up front (StageError names the missing
// stage); every stage records the config hash and tool version.
void run_stage(const std::string& command, const RunConfig& config);

}  // namespace apifeat
