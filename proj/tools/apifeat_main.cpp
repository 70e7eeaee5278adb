#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "apifeat/config.hpp"
#include "apifeat/errors.hpp"
#include "apifeat/pipeline.hpp"

namespace {

// exit codes: 0 success, 1 usage/config, 2 data error, 3 training error
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"apifeat: API-call-sequence feature engineering pipeline"};
  app.set_version_flag("--version", apifeat::kToolVersion);
  app.require_subcommand(1);

  std::string config_path, mode, mask, corpus, manifest, out, tokenizer;
  std::string train_end, val_end, synth_spec;
  long long seed = -1, vocab_cap = -1, seq_len = -1, epochs = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value configuration file");
    cmd->add_option("--mode", mode, "pipeline mode: knowledge | nlp");
    cmd->add_option("--mask", mask,
                    "feature mask: all | api | params | api+address | "
                    "api+string | api+integer");
    cmd->add_option("--seed", seed, "master RNG seed");
    cmd->add_option("--corpus", corpus, "corpus directory (one JSON per sample)");
    cmd->add_option("--manifest", manifest, "manifest CSV (sample_id,label,month)");
    cmd->add_option("--out", out, "artifact directory");
    cmd->add_option("--tokenizer", tokenizer,
                    "nlp tokenizer: whitespace | wordpunct | bpe");
    cmd->add_option("--vocab-cap", vocab_cap, "nlp vocabulary cap");
    cmd->add_option("--seq-len", seq_len, "sequence length");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--train-end", train_end, "last training month (YYYY-MM)");
    cmd->add_option("--val-end", val_end, "last validation month (YYYY-MM)");
    cmd->add_option("--spec", synth_spec, "corpus spec JSON (synth)");
  };

  const char* commands[] = {"ingest", "stats",   "fit",  "encode", "split",
                            "train",  "eval",    "explain", "synth", "ablate"};
  const char* descriptions[] = {
      "parse a corpus into the internal report store",
      "corpus-level feature-type proportions",
      "fit encoders (knowledge) or vocabulary/merges (nlp) on the train split",
      "encode every split into model-ready datasets",
      "build the month-partitioned train/val/test plan",
      "train the convolutional classifier",
      "evaluate the trained model on the test split",
      "feature attribution reports",
      "generate a synthetic labeled corpus",
      "run all six feature-mask combinations"};
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    add_common(app.add_subcommand(commands[i], descriptions[i]));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    apifeat::RunConfig config = config_path.empty()
                                    ? apifeat::RunConfig()
                                    : apifeat::RunConfig::from_file(config_path);
    // flags override file values
    if (!mode.empty()) config.set("mode", mode);
    if (!mask.empty()) config.set("mask", mask);
    if (seed >= 0) config.set("seed", std::to_string(seed));
    if (!corpus.empty()) config.set("corpus_dir", corpus);
    if (!manifest.empty()) config.set("manifest", manifest);
    if (!out.empty()) config.set("out_dir", out);
    if (!tokenizer.empty()) config.set("tokenizer", tokenizer);
    if (vocab_cap > 0) config.set("vocab_cap", std::to_string(vocab_cap));
    if (seq_len > 0) {
      config.set("seq_len", std::to_string(seq_len));
      config.set("nlp_seq_len", std::to_string(seq_len));
    }
    if (epochs >= 0) config.set("epochs", std::to_string(epochs));
    if (!train_end.empty()) config.set("train_end", train_end);
    if (!val_end.empty()) config.set("val_end", val_end);
    if (!synth_spec.empty()) config.set("synth_spec", synth_spec);

    apifeat::run_stage(app.get_subcommands().front()->get_name(), config);
    return 0;
  } catch (const apifeat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const apifeat::TrainingError& e) {
    std::cerr << "training error: " << e.what() << " (epoch " << e.epoch()
              << ")\n";
    return kExitTraining;
  } catch (const apifeat::StageError& e) {
    std::cerr << "stage error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
