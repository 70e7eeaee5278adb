#include "apifeat/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apifeat/bpe.hpp"
#include "apifeat/dataset.hpp"
#include "apifeat/errors.hpp"
#include "apifeat/explain.hpp"
#include "apifeat/logreg.hpp"
#include "apifeat/report_io.hpp"
#include "apifeat/split.hpp"
#include "apifeat/stable_hash.hpp"
#include "apifeat/synth.hpp"
#include "apifeat/text.hpp"
#include "apifeat/train.hpp"
#include "apifeat/vocab.hpp"

namespace apifeat {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> report_words(const Report& report,
                                      const FeatureMask& mask, bool lowercase,
                                      bool strip_keys) {
  // mirrors the cleaned-JSON stream: object keys stay unless stripped
  std::string raw = "calls ";
  for (const ApiCall& call : report.calls) {
    if (mask.api) {
      raw += "api ";
      raw += call.api;
      raw += ' ';
    }
    raw += "arguments ";
    for (const Argument& arg : call.arguments) {
      bool selected = (arg.value.is_str() && mask.string) ||
                      (arg.value.is_int() && mask.integer) ||
                      (arg.value.is_vaddr() && mask.address);
      if (!selected) continue;
      raw += "name ";
      raw += arg.name;
      raw += " value ";
      raw += arg.raw;
      raw += ' ';
    }
  }

  std::string cleaned = clean_text(raw);
  if (lowercase) cleaned = to_lower_ascii(cleaned);
  std::vector<std::string> words = tokenize(cleaned, TokenizerMethod::Whitespace);
  if (strip_keys) words = strip_json_keys(std::move(words));
  return words;
}

namespace {

// ---------------------------------------------------------------- paths --

struct Paths {
  fs::path out;

  explicit Paths(const RunConfig& config) : out(config.get("out_dir")) {}

  fs::path reports() const { return out / "reports.jsonl"; }
  fs::path stats_dir() const { return out / "stats"; }
  fs::path split_dir() const { return out / "split"; }
  fs::path split_manifest() const { return split_dir() / "manifest.csv"; }
  fs::path split_summary() const { return split_dir() / "summary.json"; }
  fs::path encoders_dir() const { return out / "encoders"; }
  fs::path bundle() const { return encoders_dir() / "bundle.json"; }
  fs::path vocab_file() const { return encoders_dir() / "vocab.txt"; }
  fs::path merges_file() const { return encoders_dir() / "merges.txt"; }
  fs::path encoded_dir() const { return out / "encoded"; }
  fs::path labels_file() const { return encoded_dir() / "labels.txt"; }
  fs::path model_dir() const { return out / "model"; }
  fs::path checkpoint() const { return model_dir() / "checkpoint.bin"; }
  fs::path eval_dir() const { return out / "eval"; }
  fs::path explain_dir() const { return out / "explain"; }
  fs::path ablate_dir() const { return out / "ablate"; }
};

// stage dependency guard
void require(const fs::path& artifact, const std::string& producing_stage) {
  if (!fs::exists(artifact)) {
    throw StageError("missing artifact " + artifact.string() + "; run '" +
                         producing_stage + "' first",
                     producing_stage);
  }
}

// one writer at a time per artifact dir
class DirLock {
public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    if (fs::exists(path_)) {
      throw ConfigError("artifact dir is locked by another run: " +
                        path_.string() + " (delete the lock if stale)");
    }
    std::ofstream out(path_);
    out << "locked\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  fs::path path_;
};

void write_provenance(const fs::path& dir, const std::string& stage,
                      const RunConfig& config, json extra = json::object()) {
  fs::create_directories(dir);
  json doc{{"stage", stage},
           {"tool", kToolVersion},
           {"config_hash", config.hash()}};
  doc.update(extra);
  std::ofstream out(dir / "provenance.json", std::ios::binary);
  out << doc.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path, const RunConfig& config) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# " << kToolVersion << " config_hash=" << config.hash() << '\n';
  return out;
}

// ---------------------------------------------------------------- stages --

void run_synth(const RunConfig& config) {
  if (!config.is_set("synth_spec")) {
    throw ConfigError("synth requires synth_spec (path to a corpus spec)");
  }
  if (!config.is_set("corpus_dir")) {
    throw ConfigError("synth requires corpus_dir (output directory)");
  }
  CorpusSpec spec = load_corpus_spec(config.get("synth_spec"));
  SynthCorpus corpus = generate_corpus(spec);
  write_corpus(config.get("corpus_dir"), corpus);
  std::cout << "synth: wrote " << corpus.reports.size() << " reports to "
            << config.get("corpus_dir") << '\n';
}

void run_ingest(const RunConfig& config) {
  if (!config.is_set("corpus_dir") || !config.is_set("manifest")) {
    throw ConfigError("ingest requires corpus_dir and manifest");
  }
  Paths paths(config);
  std::vector<Report> reports =
      load_corpus(config.get("corpus_dir"), config.get("manifest"));

  int empty_calls = 0;
  for (const Report& r : reports) {
    if (r.empty_calls_warning) ++empty_calls;
  }

  fs::create_directories(paths.out);
  save_report_store(paths.reports(), reports);
  write_provenance(paths.out, "ingest", config,
                   json{{"reports", reports.size()},
                        {"empty_call_warnings", empty_calls}});
  config.dump(paths.out / "effective_config.txt");
  std::cout << "ingest: " << reports.size() << " reports ("
            << empty_calls << " with empty call lists)\n";
}

void run_stats(const RunConfig& config) {
  Paths paths(config);
  require(paths.reports(), "ingest");
  std::vector<Report> reports = load_report_store(paths.reports());
  TypeProportions props = type_proportions(reports);

  std::ofstream csv = open_csv(paths.stats_dir() / "type_proportions.csv", config);
  csv << "type,fraction\n";
  csv << "api_name," << props.api_name << '\n';
  csv << "string," << props.string << '\n';
  csv << "integer," << props.integer << '\n';
  csv << "vaddr," << props.vaddr << '\n';
  write_provenance(paths.stats_dir(), "stats", config);
  std::cout << "stats: api_name=" << props.api_name << " string=" << props.string
            << " integer=" << props.integer << " vaddr=" << props.vaddr << '\n';
}

SplitConfig split_config_from(const RunConfig& config) {
  if (!config.is_set("train_end") || !config.is_set("val_end")) {
    throw ConfigError("split requires train_end and val_end (YYYY-MM)");
  }
  SplitConfig sc;
  sc.train_end = YearMonth::parse(config.get("train_end"));
  sc.val_end = YearMonth::parse(config.get("val_end"));
  sc.goodware_ratio = config.get_double("goodware_ratio");
  sc.ratio_per_month = config.get_bool("ratio_per_month");
  sc.goodware_label = config.get("goodware_label");
  sc.seed = config.get_u64("seed");
  return sc;
}

void run_split(const RunConfig& config) {
  Paths paths(config);
  require(paths.reports(), "ingest");
  std::vector<Report> reports = load_report_store(paths.reports());

  SplitPlan plan = make_split_plan(reports, split_config_from(config));
  fs::create_directories(paths.split_dir());
  save_split_plan(paths.split_manifest(), paths.split_summary(), plan);

  CovariateProfile profile =
      covariate_profile(plan, reports,
                        static_cast<std::size_t>(config.get_int("seq_len")),
                        config.get_double("drift_threshold"));
  std::ofstream csv = open_csv(paths.split_dir() / "covariate_profile.csv", config);
  csv << "month,api_name,string,integer,vaddr\n";
  for (const auto& [month, props] : profile.by_month) {
    csv << month.str() << ',' << props.api_name << ',' << props.string << ','
        << props.integer << ',' << props.vaddr << '\n';
  }

  write_provenance(paths.split_dir(), "split", config,
                   json{{"train", plan.kept_count(Split::Train)},
                        {"val", plan.kept_count(Split::Val)},
                        {"test", plan.kept_count(Split::Test)},
                        {"holdout_families", plan.holdout_families},
                        {"max_l1_shift", profile.max_l1_shift},
                        {"drift_flagged", profile.drift_flagged}});
  std::cout << "split: train=" << plan.kept_count(Split::Train)
            << " val=" << plan.kept_count(Split::Val)
            << " test=" << plan.kept_count(Split::Test)
            << " holdouts=" << plan.holdout_families.size()
            << (profile.drift_flagged ? " [covariate drift flagged]" : "") << '\n';
}

BundleConfig bundle_config_from(const RunConfig& config) {
  BundleConfig bc;
  bc.layout.api_dim = static_cast<int>(config.get_int("embed_dim"));
  bc.layout.string_k = static_cast<int>(config.get_int("string_k"));
  bc.layout.integer_dim = static_cast<int>(config.get_int("integer_hash_dim"));
  bc.layout.address_dim = static_cast<int>(config.get_int("address_hash_dim"));
  bc.integer_hash_dim = bc.layout.integer_dim;
  bc.address_hash_dim = bc.layout.address_dim;
  bc.segment_boundary = config.get_u64("segment_boundary");
  bc.standardize_blocks = config.get_bool("standardize_blocks");
  bc.skipgram.dim = bc.layout.api_dim;
  bc.skipgram.window = static_cast<int>(config.get_int("skipgram_window"));
  bc.skipgram.negatives = static_cast<int>(config.get_int("skipgram_negatives"));
  bc.skipgram.epochs = static_cast<int>(config.get_int("skipgram_epochs"));
  bc.skipgram.learning_rate = config.get_double("skipgram_lr");
  bc.skipgram.seed = config.get_u64("seed");
  return bc;
}

struct LoadedCorpus {
  std::vector<Report> reports;
  SplitPlan plan;
  std::vector<const Report*> train, val, test;
};

LoadedCorpus load_corpus_and_plan(const Paths& paths) {
  require(paths.reports(), "ingest");
  require(paths.split_manifest(), "split");
  LoadedCorpus lc;
  lc.reports = load_report_store(paths.reports());
  lc.plan = load_split_plan(paths.split_manifest(), paths.split_summary());
  lc.train = lc.plan.members(lc.reports, Split::Train);
  lc.val = lc.plan.members(lc.reports, Split::Val);
  lc.test = lc.plan.members(lc.reports, Split::Test);
  return lc;
}

std::vector<Report> deref(const std::vector<const Report*>& ptrs) {
  std::vector<Report> out;
  out.reserve(ptrs.size());
  for (const Report* p : ptrs) out.push_back(*p);
  return out;
}

void run_fit(const RunConfig& config) {
  Paths paths(config);
  LoadedCorpus lc = load_corpus_and_plan(paths);
  fs::create_directories(paths.encoders_dir());

  if (config.get("mode") == "knowledge") {
    std::vector<Report> train_reports = deref(lc.train);
    BundleConfig bc = bundle_config_from(config);
    std::vector<std::string> warnings;

    if (config.get("skipgram_corpus") == "all") {
      // embedding corpus may optionally span all splits; similarity
      // dictionaries always come from train only
      EncoderBundle bundle = fit_encoder_bundle(train_reports, bc, &warnings);
      std::vector<std::vector<std::string>> all_names;
      for (const Report& r : lc.reports) {
        std::vector<std::string> names;
        for (const ApiCall& c : r.calls) names.push_back(c.api);
        all_names.push_back(std::move(names));
      }
      SkipGramConfig sg = bc.skipgram;
      sg.dim = bc.layout.api_dim;
      bundle.skipgram = train_skipgram(all_names, sg);
      std::string hash = save_encoder_bundle(paths.bundle(), bundle);
      write_provenance(paths.encoders_dir(), "fit", config,
                       json{{"artifact_hash", hash}, {"warnings", warnings}});
      std::cout << "fit: encoder bundle hash " << hash << '\n';
    } else {
      EncoderBundle bundle = fit_encoder_bundle(train_reports, bc, &warnings);
      std::string hash = save_encoder_bundle(paths.bundle(), bundle);
      write_provenance(paths.encoders_dir(), "fit", config,
                       json{{"artifact_hash", hash}, {"warnings", warnings}});
      std::cout << "fit: encoder bundle hash " << hash << '\n';
    }
    for (const std::string& w : warnings) std::cout << "fit: warning: " << w << '\n';
    return;
  }

  // nlp mode: vocabulary (and merges for bpe) from the train split only
  bool lowercase = config.get_bool("nlp_lowercase");
  bool strip_keys = config.get_bool("nlp_strip_keys");
  TokenizerMethod method = tokenizer_from_name(config.get("tokenizer"));

  std::vector<std::vector<std::string>> word_streams;
  word_streams.reserve(lc.train.size());
  for (const Report* r : lc.train) {
    word_streams.push_back(
        report_words(*r, FeatureMask::all(), lowercase, strip_keys));
  }

  BpeMerges merges;
  if (method == TokenizerMethod::Bpe) {
    merges = train_bpe(word_streams,
                       static_cast<int>(config.get_int("bpe_merges")));
    save_bpe_merges(paths.merges_file(), merges);
  }

  std::vector<std::string> all_tokens;
  for (const auto& words : word_streams) {
    if (method == TokenizerMethod::Bpe) {
      for (const std::string& word : words) {
        for (std::string& piece : apply_bpe(word, merges)) {
          all_tokens.push_back(std::move(piece));
        }
      }
    } else if (method == TokenizerMethod::WordPunct) {
      for (const std::string& word : words) {
        for (std::string& piece : tokenize(word, TokenizerMethod::WordPunct)) {
          all_tokens.push_back(std::move(piece));
        }
      }
    } else {
      all_tokens.insert(all_tokens.end(), words.begin(), words.end());
    }
  }

  Vocabulary vocab =
      build_vocab(all_tokens, static_cast<int>(config.get_int("vocab_cap")));
  save_vocab(paths.vocab_file(), vocab);

  char vocab_hash[20];
  {
    std::string joined;
    for (const std::string& t : vocab.tokens) {
      joined += t;
      joined += '\n';
    }
    std::snprintf(vocab_hash, sizeof(vocab_hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(joined)));
  }
  write_provenance(paths.encoders_dir(), "fit", config,
                   json{{"vocab_size", vocab.size()},
                        {"artifact_hash", vocab_hash},
                        {"bpe_merges", merges.rules.size()}});
  std::cout << "fit: vocabulary size " << vocab.size() << " hash " << vocab_hash
            << '\n';
}

std::vector<std::string> report_tokens(const Report& report,
                                       const FeatureMask& mask,
                                       TokenizerMethod method, bool lowercase,
                                       bool strip_keys, const BpeMerges* merges) {
  std::vector<std::string> words =
      report_words(report, mask, lowercase, strip_keys);
  if (method == TokenizerMethod::Whitespace) return words;
  std::vector<std::string> out;
  for (const std::string& word : words) {
    std::vector<std::string> pieces =
        method == TokenizerMethod::Bpe
            ? apply_bpe(word, *merges)
            : tokenize(word, TokenizerMethod::WordPunct);
    for (std::string& piece : pieces) out.push_back(std::move(piece));
  }
  return out;
}

void encode_to(const RunConfig& config, const Paths& paths,
               const fs::path& encoded_dir, const FeatureMask& mask) {
  LoadedCorpus lc = load_corpus_and_plan(paths);
  fs::create_directories(encoded_dir);

  // one label space across splits, sorted for stability
  std::vector<std::string> labels;
  for (const SampleAssignment& a : lc.plan.assignments) {
    if (a.kept) labels.push_back(a.family);
  }
  LabelDict dict = LabelDict::from_labels(labels);
  save_label_dict(encoded_dir / "labels.txt", dict);

  auto split_sets = {std::make_pair(std::string("train"), &lc.train),
                     std::make_pair(std::string("val"), &lc.val),
                     std::make_pair(std::string("test"), &lc.test)};

  if (config.get("mode") == "knowledge") {
    require(paths.bundle(), "fit");
    EncoderBundle bundle = load_encoder_bundle(paths.bundle());
    const int seq_len = static_cast<int>(config.get_int("seq_len"));
    CallEncodeCache cache;
    for (const auto& [name, members] : split_sets) {
      KnowledgeDataset data;
      data.seq_len = seq_len;
      data.dim = bundle.config.layout.total_dim();
      for (const Report* r : *members) {
        Eigen::MatrixXf features;
        int rows = encode_report(*r, bundle, mask, seq_len, features, &cache);
        data.sample_ids.push_back(r->sample_id);
        data.features.push_back(std::move(features));
        data.true_len.push_back(rows);
        data.labels.push_back(dict.id_of(r->label));
      }
      save_knowledge_dataset(encoded_dir / (name + ".bin"), data);
    }
  } else {
    require(paths.vocab_file(), "fit");
    Vocabulary vocab = load_vocab(paths.vocab_file());
    TokenizerMethod method = tokenizer_from_name(config.get("tokenizer"));
    BpeMerges merges;
    if (method == TokenizerMethod::Bpe) {
      require(paths.merges_file(), "fit");
      merges = load_bpe_merges(paths.merges_file());
    }
    bool lowercase = config.get_bool("nlp_lowercase");
    bool strip_keys = config.get_bool("nlp_strip_keys");
    const int seq_len = static_cast<int>(config.get_int("nlp_seq_len"));

    for (const auto& [name, members] : split_sets) {
      TokenDataset data;
      data.seq_len = seq_len;
      data.vocab_size = vocab.size();
      for (const Report* r : *members) {
        std::vector<std::string> tokens = report_tokens(
            *r, mask, method, lowercase, strip_keys,
            method == TokenizerMethod::Bpe ? &merges : nullptr);
        TokenSequence seq = encode_tokens(vocab, tokens, seq_len);
        data.sample_ids.push_back(r->sample_id);
        data.ids.push_back(std::move(seq.ids));
        data.true_len.push_back(seq.true_length);
        data.labels.push_back(dict.id_of(r->label));
      }
      save_token_dataset(encoded_dir / (name + ".bin"), data);
    }
  }

  write_provenance(encoded_dir, "encode", config,
                   json{{"mask", mask.name()}, {"mode", config.get("mode")}});
}

void run_encode(const RunConfig& config) {
  Paths paths(config);
  encode_to(config, paths, paths.encoded_dir(),
            FeatureMask::parse(config.get("mask")));
  std::cout << "encode: wrote datasets to " << paths.encoded_dir() << '\n';
}

CnnConfig model_config_from(const RunConfig& config, int classes, int input_dim,
                            int vocab_size) {
  CnnConfig mc;
  mc.mode = config.get("mode") == "nlp" ? InputMode::Nlp : InputMode::Knowledge;
  mc.input_dim = input_dim;
  mc.vocab_size = vocab_size;
  std::vector<int> widths = config.get_int_list("kernel_widths");
  mc.kernel_widths = widths;
  mc.channels = static_cast<int>(config.get_int("channels"));
  mc.conv_dropout = config.get_double("conv_dropout");
  mc.hidden = config.get_int_list("hidden");
  mc.hidden_dropout = config.get_double("hidden_dropout");
  mc.classes = classes;
  mc.seed = config.get_u64("seed");
  return mc;
}

TrainConfig train_config_from(const RunConfig& config) {
  TrainConfig tc;
  tc.learning_rate = config.get_double("learning_rate");
  tc.weight_decay = config.get_double("weight_decay");
  tc.batch_size = static_cast<int>(config.get_int("batch_size"));
  tc.epochs = static_cast<int>(config.get_int("epochs"));
  tc.seed = config.get_u64("seed");
  return tc;
}

void train_at(const RunConfig& config, const fs::path& encoded_dir,
              const fs::path& model_dir) {
  require(encoded_dir / "train.bin", "encode");
  LabelDict dict = load_label_dict(encoded_dir / "labels.txt");
  fs::create_directories(model_dir);

  TrainConfig tc = train_config_from(config);
  TrainHistory history;

  if (config.get("mode") == "knowledge") {
    KnowledgeDataset train = load_knowledge_dataset(encoded_dir / "train.bin");
    KnowledgeDataset val = load_knowledge_dataset(encoded_dir / "val.bin");
    CnnConfig mc = model_config_from(config, dict.size(), train.dim, 0);
    CnnModel<float> model(mc);
    history = train_model(model, to_batch<float>(train), to_batch<float>(val), tc);
    save_checkpoint(model_dir / "checkpoint.bin", model);
  } else {
    TokenDataset train = load_token_dataset(encoded_dir / "train.bin");
    TokenDataset val = load_token_dataset(encoded_dir / "val.bin");
    CnnConfig mc = model_config_from(
        config, dict.size(), static_cast<int>(config.get_int("nlp_embed_dim")),
        train.vocab_size);
    CnnModel<float> model(mc);
    history = train_model(model, to_batch<float>(train), to_batch<float>(val), tc);
    save_checkpoint(model_dir / "checkpoint.bin", model);
  }

  std::ofstream csv = open_csv(model_dir / "history.csv", config);
  csv << "epoch,train_loss,val_accuracy,val_macro_f1\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochStats& s = history.epochs[e];
    csv << e << ',' << s.train_loss << ',' << s.val_accuracy << ','
        << s.val_macro_f1 << '\n';
  }
  write_provenance(model_dir, "train", config,
                   json{{"best_epoch", history.best_epoch},
                        {"best_val_macro_f1", history.best_val_macro_f1}});
  std::cout << "train: best epoch " << history.best_epoch << " val macro-F1 "
            << history.best_val_macro_f1 << '\n';
}

void run_train(const RunConfig& config) {
  Paths paths(config);
  train_at(config, paths.encoded_dir(), paths.model_dir());
}

Metrics eval_at(const RunConfig& config, const fs::path& encoded_dir,
                const fs::path& model_dir, const fs::path& eval_dir) {
  require(model_dir / "checkpoint.bin", "train");
  require(encoded_dir / "test.bin", "encode");
  LabelDict dict = load_label_dict(encoded_dir / "labels.txt");
  CnnModel<float> model = load_checkpoint(model_dir / "checkpoint.bin");

  Metrics metrics;
  if (config.get("mode") == "knowledge") {
    KnowledgeDataset test = load_knowledge_dataset(encoded_dir / "test.bin");
    metrics = evaluate_model(model, to_batch<float>(test));
  } else {
    TokenDataset test = load_token_dataset(encoded_dir / "test.bin");
    metrics = evaluate_model(model, to_batch<float>(test));
  }

  fs::create_directories(eval_dir);
  json doc{{"tool", kToolVersion},
           {"config_hash", config.hash()},
           {"accuracy", metrics.accuracy},
           {"macro_precision", metrics.macro_precision},
           {"macro_recall", metrics.macro_recall},
           {"macro_f1", metrics.macro_f1},
           {"roc_auc", metrics.roc_auc},
           {"classes", dict.names}};
  std::ofstream js(eval_dir / "metrics.json", std::ios::binary);
  js << doc.dump(2) << '\n';

  std::ofstream conf = open_csv(eval_dir / "confusion.csv", config);
  conf << "true\\pred";
  for (const std::string& name : dict.names) conf << ',' << name;
  conf << '\n';
  for (int r = 0; r < metrics.confusion.rows(); ++r) {
    conf << dict.names[static_cast<std::size_t>(r)];
    for (int c = 0; c < metrics.confusion.cols(); ++c) {
      conf << ',' << metrics.confusion(r, c);
    }
    conf << '\n';
  }

  std::ofstream roc = open_csv(eval_dir / "roc.csv", config);
  roc << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : metrics.roc) {
    roc << fpr << ',' << tpr << '\n';
  }

  write_provenance(eval_dir, "eval", config,
                   json{{"macro_f1", metrics.macro_f1},
                        {"roc_auc", metrics.roc_auc}});
  std::cout << "eval: accuracy=" << metrics.accuracy
            << " macro_f1=" << metrics.macro_f1 << " auc=" << metrics.roc_auc
            << '\n';
  return metrics;
}

void run_eval(const RunConfig& config) {
  Paths paths(config);
  eval_at(config, paths.encoded_dir(), paths.model_dir(), paths.eval_dir());
}

void write_attribution_csv(const fs::path& path, const RunConfig& config,
                           const AttributionReport& report, int top_k = -1) {
  std::ofstream csv = open_csv(path, config);
  csv << "rank,unit,score,method\n";
  int rank = 1;
  for (const AttributionEntry& e : report.entries) {
    if (top_k > 0 && rank > top_k) break;
    csv << rank++ << ',' << e.unit << ',' << e.score << ',' << report.method
        << '\n';
  }
}

void run_explain(const RunConfig& config) {
  Paths paths(config);
  require(paths.checkpoint(), "train");
  require(paths.encoded_dir() / "test.bin", "encode");
  LabelDict dict = load_label_dict(paths.labels_file());
  CnnModel<float> model = load_checkpoint(paths.checkpoint());
  fs::create_directories(paths.explain_dir());
  std::uint64_t seed = config.get_u64("seed");
  int repeats = static_cast<int>(config.get_int("explain_repeats"));

  if (config.get("mode") == "knowledge") {
    KnowledgeDataset test = load_knowledge_dataset(paths.encoded_dir() / "test.bin");
    FeatureLayout layout = bundle_config_from(config).layout;

    BlockCorrelation corr =
        pearson_blocks(test, layout, dict, config.get("goodware_label"));
    std::ofstream csv = open_csv(paths.explain_dir() / "pearson.csv", config);
    csv << "class,block,r,defined\n";
    for (const BlockCorrelationCell& cell : corr.cells) {
      csv << cell.class_label << ',' << cell.block << ',' << cell.r << ','
          << (cell.defined ? 1 : 0) << '\n';
    }

    AttributionReport perm =
        permutation_importance_blocks(model, test, layout, seed, repeats);
    write_attribution_csv(paths.explain_dir() / "permutation.csv", config, perm);

    // exact Shapley over the four type blocks of one test instance: a
    // coalition keeps a block, its complement zeroes it (zero baseline)
    if (test.size() > 0) {
      const Eigen::MatrixXf instance = test.features[0];
      const int true_len = test.true_len[0];
      struct BlockSpan {
        const char* name;
        int offset;
        int width;
      };
      const BlockSpan spans[4] = {
          {"api", layout.api_offset(), layout.api_dim},
          {"string", layout.string_offset(StringCategory::FilePath),
           4 * layout.string_k},
          {"integer", layout.integer_offset(), layout.integer_dim},
          {"address", layout.address_offset(), layout.address_dim}};

      SequenceBatch<float> probe;
      probe.features.push_back(instance);
      probe.true_lengths.push_back(true_len);
      Eigen::Index predicted;
      model.softmax_scores(probe).row(0).maxCoeff(&predicted);

      auto f = [&](const Eigen::VectorXd& included) {
        SequenceBatch<float> b;
        Eigen::MatrixXf x = instance;
        for (int i = 0; i < 4; ++i) {
          if (included[i] < 0.5) {
            x.middleCols(spans[i].offset, spans[i].width).setZero();
          }
        }
        b.features.push_back(std::move(x));
        b.true_lengths.push_back(true_len);
        return model.softmax_scores(b)(0, predicted);
      };
      std::vector<double> phi = shapley_exact(f, Eigen::VectorXd::Ones(4),
                                              Eigen::VectorXd::Zero(4));
      AttributionReport shap;
      shap.method = "shapley-exact";
      for (int i = 0; i < 4; ++i) shap.entries.push_back({spans[i].name, phi[i]});
      std::stable_sort(shap.entries.begin(), shap.entries.end(),
                       [](const auto& a, const auto& b) { return a.score > b.score; });
      write_attribution_csv(paths.explain_dir() / "shapley.csv", config, shap);

      json js{{"tool", kToolVersion},
              {"config_hash", config.hash()},
              {"method", "shapley-exact"},
              {"sample_id", test.sample_ids[0]},
              {"predicted_class", dict.names[static_cast<std::size_t>(predicted)]},
              {"attributions", json::object()}};
      for (int i = 0; i < 4; ++i) js["attributions"][spans[i].name] = phi[i];
      std::ofstream out(paths.explain_dir() / "shapley.json", std::ios::binary);
      out << js.dump(2) << '\n';
    }
  } else {
    TokenDataset test = load_token_dataset(paths.encoded_dir() / "test.bin");
    Vocabulary vocab = load_vocab(paths.vocab_file());
    int max_tokens = static_cast<int>(config.get_int("explain_max_tokens"));

    AttributionReport perm =
        permutation_importance_tokens(model, test, vocab, seed, repeats, max_tokens);
    write_attribution_csv(paths.explain_dir() / "permutation.csv", config, perm);
    write_attribution_csv(paths.explain_dir() / "top_tokens.csv", config, perm, 10);

    // exact Shapley over the first distinct tokens of one instance; removal
    // replaces a token's occurrences with <pad>
    if (test.size() > 0) {
      int budget = static_cast<int>(config.get_int("shapley_features"));
      std::vector<int> feature_tokens;
      for (int t = 0; t < test.true_len[0] &&
                      static_cast<int>(feature_tokens.size()) < budget;
           ++t) {
        int id = test.ids[0][static_cast<std::size_t>(t)];
        if (id <= Vocabulary::kUnkId) continue;
        if (std::find(feature_tokens.begin(), feature_tokens.end(), id) ==
            feature_tokens.end()) {
          feature_tokens.push_back(id);
        }
      }
      if (!feature_tokens.empty()) {
        SequenceBatch<float> probe;
        probe.token_ids.push_back(test.ids[0]);
        probe.true_lengths.push_back(test.true_len[0]);
        Eigen::Index predicted;
        model.softmax_scores(probe).row(0).maxCoeff(&predicted);

        auto f = [&](const Eigen::VectorXd& included) {
          std::vector<int> ids = test.ids[0];
          for (std::size_t i = 0; i < feature_tokens.size(); ++i) {
            if (included[static_cast<Eigen::Index>(i)] < 0.5) {
              for (int& id : ids) {
                if (id == feature_tokens[i]) id = Vocabulary::kPadId;
              }
            }
          }
          SequenceBatch<float> b;
          b.token_ids.push_back(std::move(ids));
          b.true_lengths.push_back(test.true_len[0]);
          return model.softmax_scores(b)(0, predicted);
        };
        int n = static_cast<int>(feature_tokens.size());
        std::vector<double> phi = shapley_exact(f, Eigen::VectorXd::Ones(n),
                                                Eigen::VectorXd::Zero(n));
        AttributionReport shap;
        shap.method = "shapley-exact";
        for (int i = 0; i < n; ++i) {
          shap.entries.push_back(
              {vocab.tokens[static_cast<std::size_t>(feature_tokens[static_cast<std::size_t>(i)])],
               phi[static_cast<std::size_t>(i)]});
        }
        std::stable_sort(shap.entries.begin(), shap.entries.end(),
                         [](const auto& a, const auto& b) { return a.score > b.score; });
        write_attribution_csv(paths.explain_dir() / "shapley.csv", config, shap);
      }
    }
  }

  write_provenance(paths.explain_dir(), "explain", config);
  std::cout << "explain: reports written to " << paths.explain_dir() << '\n';
}

void run_ablate(const RunConfig& config) {
  Paths paths(config);
  fs::create_directories(paths.ablate_dir());

  std::ofstream comparison = open_csv(paths.ablate_dir() / "comparison.csv", config);
  comparison << "mask,accuracy,macro_f1,roc_auc\n";

  for (const FeatureMask& mask : ablation_masks()) {
    std::string name = mask.name();
    std::string dir_name = name;
    for (char& c : dir_name) {
      if (c == '+') c = '_';
    }
    fs::path base = paths.ablate_dir() / dir_name;
    encode_to(config, paths, base / "encoded", mask);
    train_at(config, base / "encoded", base / "model");
    Metrics metrics = eval_at(config, base / "encoded", base / "model", base / "eval");
    comparison << name << ',' << metrics.accuracy << ',' << metrics.macro_f1
               << ',' << metrics.roc_auc << '\n';

    std::ofstream roc = open_csv(paths.ablate_dir() / ("roc_" + dir_name + ".csv"),
                                 config);
    roc << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : metrics.roc) {
      roc << fpr << ',' << tpr << '\n';
    }
    std::cout << "ablate[" << name << "]: macro_f1=" << metrics.macro_f1
              << " auc=" << metrics.roc_auc << '\n';
  }
  write_provenance(paths.ablate_dir(), "ablate", config);
}

}  // namespace

void run_stage(const std::string& command, const RunConfig& config) {
  Paths paths(config);

  if (command == "synth") {
    run_synth(config);
    return;
  }

  DirLock lock(paths.out);
  config.dump(paths.out / "effective_config.txt");

  if (command == "ingest") {
    run_ingest(config);
  } else if (command == "stats") {
    run_stats(config);
  } else if (command == "split") {
    run_split(config);
  } else if (command == "fit") {
    run_fit(config);
  } else if (command == "encode") {
    run_encode(config);
  } else if (command == "train") {
    run_train(config);
  } else if (command == "eval") {
    run_eval(config);
  } else if (command == "explain") {
    run_explain(config);
  } else if (command == "ablate") {
    run_ablate(config);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
}

}  // namespace apifeat
