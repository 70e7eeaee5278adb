#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "apifeat/config.hpp"
#include "apifeat/errors.hpp"
#include "apifeat/pipeline.hpp"
#include "apifeat/report_io.hpp"
#include "apifeat/synth.hpp"
#include "apifeat/text.hpp"

using namespace apifeat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

CorpusSpec pipeline_spec() {
  CorpusSpec spec;
  spec.seed = 31;
  spec.min_calls = 8;
  spec.max_calls = 14;
  spec.goodware_count = 36;

  MotifSpec crypto;
  crypto.apis = {"CryptAcquireContextW", "CryptDeriveKey", "CryptEncrypt"};
  crypto.dll_names = {"payload.dll"};
  MotifSpec hook;
  hook.apis = {"SetWindowsHookExW", "GetAsyncKeyState", "GetForegroundWindow"};
  hook.registry_keys = {"HKEY_CURRENT_USER\\Software\\Hooker"};

  FamilySpec a;
  a.name = "alphafam";
  a.samples_per_month = 4;
  a.first_month = {2019, 1};
  a.last_month = {2019, 6};
  a.motif_strength = 0.9;
  a.motifs = {crypto};

  FamilySpec b = a;
  b.name = "betafam";
  b.motifs = {hook};

  spec.families = {a, b};
  return spec;
}

RunConfig base_config(const TempDir& dir) {
  RunConfig config;
  config.set("corpus_dir", (dir.path / "corpus").string());
  config.set("manifest", (dir.path / "corpus" / "manifest.csv").string());
  config.set("out_dir", (dir.path / "out").string());
  config.set("train_end", "2019-04");
  config.set("val_end", "2019-05");
  config.set("seq_len", "16");
  config.set("nlp_seq_len", "96");
  config.set("goodware_ratio", "1.0");
  config.set("epochs", "2");
  config.set("channels", "4");
  config.set("hidden", "8");
  config.set("vocab_cap", "500");
  config.set("skipgram_epochs", "1");
  config.set("explain_max_tokens", "10");
  config.set("shapley_features", "4");
  config.set("explain_repeats", "1");
  return config;
}

}  // namespace

TEST_CASE("run configuration: file parsing, overrides, hashing") {
  TempDir dir("apifeat_cfg_test");
  auto cfg_path = dir.path / "run.cfg";
  {
    std::ofstream out(cfg_path);
    out << "# comment line\n";
    out << "mode = nlp\n";
    out << "seq_len = 256\n";
    out << "\n";
    out << "tokenizer=bpe\n";
  }
  RunConfig config = RunConfig::from_file(cfg_path);
  CHECK(config.get("mode") == "nlp");
  CHECK(config.get_int("seq_len") == 256);
  CHECK(config.get("tokenizer") == "bpe");
  CHECK(config.get("mask") == "all");  // default materialized

  std::string h1 = config.hash();
  config.set("mask", "api");
  CHECK(config.hash() != h1);
  config.set("mask", "all");
  CHECK(config.hash() == h1);

  CHECK_THROWS_AS(config.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(config.get_int("mode"), ConfigError);

  std::ofstream bad(cfg_path, std::ios::app);
  bad << "bogus_key = 1\n";
  bad.close();
  CHECK_THROWS_AS(RunConfig::from_file(cfg_path), ConfigError);
}

TEST_CASE("report_words mirrors the cleaned JSON stream under the full mask") {
  Report r;
  ApiCall call;
  call.api = "NtCreateFile";
  call.arguments = {
      make_argument("FileName", ArgValue::str("C:\\Temp\\a.bin")),
      make_argument("Access", ArgValue::integer(3)),
      make_argument("Handle", ArgValue::vaddr(0x76520000)),
  };
  r.calls = {call};

  std::vector<std::string> from_fields =
      report_words(r, FeatureMask::all(), false, false);
  std::vector<std::string> from_json = tokenize(
      clean_text(serialize_report(r)), TokenizerMethod::Whitespace);
  CHECK(from_fields == from_json);

  SUBCASE("masks filter fields") {
    std::vector<std::string> api_only =
        report_words(r, FeatureMask::api_only(), false, false);
    bool has_filename = false;
    for (const std::string& w : api_only) {
      if (w == "FileName") has_filename = true;
    }
    CHECK_FALSE(has_filename);

    std::vector<std::string> ints =
        report_words(r, FeatureMask::parse("api+integer"), false, false);
    bool has_access = false, has_handle = false;
    for (const std::string& w : ints) {
      if (w == "Access") has_access = true;
      if (w == "0x76520000") has_handle = true;
    }
    CHECK(has_access);
    CHECK_FALSE(has_handle);
  }

  SUBCASE("lowercase and strip-keys toggles") {
    std::vector<std::string> words =
        report_words(r, FeatureMask::all(), true, true);
    for (const std::string& w : words) {
      CHECK(w != "api");
      CHECK(w != "name");
      CHECK(w != "value");
      for (char c : w) CHECK_FALSE(std::isupper(static_cast<unsigned char>(c)));
    }
  }
}

TEST_CASE("stage ordering is enforced with StageError") {
  TempDir dir("apifeat_stage_test");
  RunConfig config = base_config(dir);
  CHECK_THROWS_AS(run_stage("stats", config), StageError);
  CHECK_THROWS_AS(run_stage("train", config), StageError);
  try {
    run_stage("train", config);
  } catch (const StageError& e) {
    CHECK(e.required_stage() == "encode");
  }
}

TEST_CASE("knowledge pipeline runs end to end at toy scale") {
  TempDir dir("apifeat_e2e_knowledge");
  RunConfig config = base_config(dir);

  // synthesize the corpus the pipeline will consume
  CorpusSpec spec = pipeline_spec();
  write_corpus(dir.path / "corpus", generate_corpus(spec));

  run_stage("ingest", config);
  CHECK(fs::exists(dir.path / "out" / "reports.jsonl"));
  run_stage("stats", config);
  CHECK(fs::exists(dir.path / "out" / "stats" / "type_proportions.csv"));
  run_stage("split", config);
  CHECK(fs::exists(dir.path / "out" / "split" / "manifest.csv"));
  run_stage("fit", config);
  CHECK(fs::exists(dir.path / "out" / "encoders" / "bundle.json"));
  run_stage("encode", config);
  CHECK(fs::exists(dir.path / "out" / "encoded" / "train.bin"));
  run_stage("train", config);
  CHECK(fs::exists(dir.path / "out" / "model" / "checkpoint.bin"));
  run_stage("eval", config);
  CHECK(fs::exists(dir.path / "out" / "eval" / "metrics.json"));
  CHECK(fs::exists(dir.path / "out" / "eval" / "roc.csv"));
  run_stage("explain", config);
  CHECK(fs::exists(dir.path / "out" / "explain" / "pearson.csv"));
  CHECK(fs::exists(dir.path / "out" / "explain" / "permutation.csv"));
  CHECK(fs::exists(dir.path / "out" / "explain" / "shapley.csv"));

  // rerunning a stage with identical config rewrites identical artifacts
  auto read_file = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::string before = read_file(dir.path / "out" / "split" / "manifest.csv");
  run_stage("split", config);
  CHECK(read_file(dir.path / "out" / "split" / "manifest.csv") == before);
}

TEST_CASE("nlp pipeline runs end to end at toy scale") {
  TempDir dir("apifeat_e2e_nlp");
  RunConfig config = base_config(dir);
  config.set("mode", "nlp");
  config.set("tokenizer", "bpe");
  config.set("bpe_merges", "40");

  write_corpus(dir.path / "corpus", generate_corpus(pipeline_spec()));

  run_stage("ingest", config);
  run_stage("split", config);
  run_stage("fit", config);
  CHECK(fs::exists(dir.path / "out" / "encoders" / "vocab.txt"));
  CHECK(fs::exists(dir.path / "out" / "encoders" / "merges.txt"));
  run_stage("encode", config);
  run_stage("train", config);
  run_stage("eval", config);
  run_stage("explain", config);
  CHECK(fs::exists(dir.path / "out" / "explain" / "top_tokens.csv"));
  CHECK(fs::exists(dir.path / "out" / "explain" / "shapley.csv"));
}

TEST_CASE("the artifact lock blocks concurrent writers") {
  TempDir dir("apifeat_lock_test");
  RunConfig config = base_config(dir);
  fs::create_directories(dir.path / "out");
  std::ofstream lock(dir.path / "out" / ".lock");
  lock << "held\n";
  lock.close();
  CHECK_THROWS_AS(run_stage("stats", config), ConfigError);
}
