// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. The heavy criteria drive the real pipeline stages end to end on
// planted synthetic corpora.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apifeat/bpe.hpp"
#include "apifeat/call_encoder.hpp"
#include "apifeat/config.hpp"
#include "apifeat/explain.hpp"
#include "apifeat/pipeline.hpp"
#include "apifeat/report_io.hpp"
#include "apifeat/split.hpp"
#include "apifeat/synth.hpp"
#include "apifeat/train.hpp"
#include "oracles.hpp"

using namespace apifeat;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Harness {
  int passed = 0;
  int failed = 0;

  void run(const std::string& name, double budget_seconds,
           const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    auto start = std::chrono::steady_clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (ok && budget_seconds > 0 && elapsed > budget_seconds) {
      ok = false;
      detail += " [exceeded " + std::to_string(budget_seconds) + "s budget]";
    }
    std::printf("[%s] %-28s (%6.1fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                elapsed, detail.empty() ? "" : " ", detail.c_str());
    std::fflush(stdout);
    (ok ? passed : failed)++;
  }
};

// ------------------------------------------------------------- fixtures --

// The planted corpus shared by the RQ1, ablation and explainability
// criteria: 6 families x 200 samples with motifs in API names and in
// string/address arguments, motif strength 0.6.
//
// Signal design. The API-name channel is a sliding window over a pool of
// twelve names: family f's motif is (S_2f, S_2f+1, S_2f+2), so adjacent
// families overlap in exactly one name and every family keeps one name of
// its own. Two clone pairs bound the name channel away from the
// full-feature ceiling no matter how clean the names are: family 4 clones
// family 0's triple and family 5 clones family 1's. The clones resolve
// through parameters only — string signatures (suffix-noised, so every raw
// token is distinct and tokenizes to <unk>) are shared between NON-adjacent
// families f and f+3 and split each clone pair, and the 1/5 pair
// additionally carries distinct Milliseconds literals whose magnitudes are
// close enough that the hashed log values drown in background noise while
// the raw decimal tokens stay cleanly separable. Signature addresses skew
// kernel-ward for every family, a malware cue rather than a family cue.
// Net effect: parameters alone < names alone < names+parameters, and the
// two-pipeline margin comes from the parameter channel that raw
// tokenization cannot exploit.
CorpusSpec planted_spec(double strength) {
  const char* families[6] = {"emotet", "qakbot", "trickbot",
                             "ursnif", "zeus",   "njrat"};
  const char* shared_names[12] = {
      "CryptAcquireContextW", "CryptDeriveKey",   "InternetOpenW",
      "HttpSendRequestW",     "OpenSCManagerW",   "CreateServiceW",
      "NtAllocateVirtualMemory", "WriteProcessMemory", "RegCreateKeyExW",
      "RegSetValueExW",       "SetWindowsHookExW", "GetAsyncKeyState"};

  CorpusSpec spec;
  spec.seed = 97;
  spec.min_calls = 36;
  spec.max_calls = 56;
  spec.motif_slot_stride = 8;
  spec.goodware_count = 1200;  // 120/month over the 10-month span

  for (int f = 0; f < 6; ++f) {
    FamilySpec fam;
    fam.name = families[f];
    fam.samples_per_month = 20;  // 10 months x 20 = 200 samples
    fam.first_month = {2019, 1};
    fam.last_month = {2019, 10};
    fam.motif_strength = strength;

    MotifSpec motif;
    int window = (f == 4 ? 0 : f == 5 ? 1 : f) * 2;  // clone pairs (0,4), (1,5)
    motif.apis = {shared_names[window], shared_names[(window + 1) % 12],
                  shared_names[(window + 2) % 12]};
    motif.api_noise = 0.15;
    int group = f % 3;  // families f and f+3 share the string signature
    motif.dll_names = {"pay" + std::to_string(group) + "load.dll"};
    motif.registry_keys = {"HKEY_LOCAL_MACHINE\\Software\\Vendor" +
                           std::to_string(group)};
    // every family carries one Milliseconds literal, so the argument's
    // presence is uniform across malware; the values sit within a 0.7%
    // log-span (invisible to the hashed channel) yet stay distinct decimal
    // tokens, reused across NON-clone families so each clone pair resolves
    // through exactly one extra token conjunction
    const std::int64_t literals[6] = {4001, 4019, 4019, 4001, 4010, 4028};
    motif.integers = {{"Milliseconds", literals[f]}};
    motif.integer_probability = 0.08;  // sparse enough to leave headroom
    motif.kernel_address_bias = 0.6;
    fam.motifs = {motif};
    spec.families.push_back(std::move(fam));
  }
  return spec;
}

RunConfig planted_config(const fs::path& root, const std::string& mode) {
  RunConfig config;
  config.set("corpus_dir", (root / "corpus").string());
  config.set("manifest", (root / "corpus" / "manifest.csv").string());
  config.set("out_dir", (root / ("out_" + mode)).string());
  config.set("mode", mode);
  config.set("train_end", "2019-07");
  config.set("val_end", "2019-08");
  config.set("goodware_ratio", "0.1666666666666667");  // balanced 7 classes
  config.set("seq_len", "56");
  config.set("nlp_seq_len", "640");
  config.set("vocab_cap", "4000");
  config.set("standardize_blocks", "true");
  config.set("skipgram_epochs", "3");
  config.set("kernel_widths", "2,3,4");
  config.set("channels", "24");
  config.set("hidden", "64");
  config.set("conv_dropout", "0.2");
  config.set("hidden_dropout", "0.1");
  config.set("epochs", "14");
  config.set("batch_size", "32");
  config.set("explain_repeats", "2");
  return config;
}

double read_metric(const fs::path& metrics_json, const std::string& key) {
  std::ifstream in(metrics_json);
  std::stringstream ss;
  ss << in.rdbuf();
  return json::parse(ss.str()).at(key).get<double>();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ------------------------------------------------------------- criteria --

bool dimension_contract(std::string& detail) {
  CorpusSpec spec = planted_spec(0.6);
  for (FamilySpec& f : spec.families) f.samples_per_month = 5;
  spec.goodware_count = 120;
  SynthCorpus corpus = generate_corpus(spec);

  BundleConfig bc;
  bc.skipgram.epochs = 1;
  EncoderBundle bundle = fit_encoder_bundle(corpus.reports, bc);
  const FeatureLayout& layout = bundle.config.layout;
  if (layout.total_dim() != 132) {
    detail = "layout is not 132-dim";
    return false;
  }

  CallEncodeCache cache;
  long long encoded = 0;
  for (const Report& r : corpus.reports) {
    for (const ApiCall& call : r.calls) {
      Eigen::VectorXf v = encode_call(call, bundle, FeatureMask::all(), &cache);
      if (v.size() != 132 || !v.allFinite()) {
        detail = "bad vector for " + call.api;
        return false;
      }
      ++encoded;
      if (encoded >= 10000) break;
    }
    if (encoded >= 10000) break;
  }
  if (encoded < 10000) {
    detail = "corpus produced only " + std::to_string(encoded) + " calls";
    return false;
  }

  // block layout: api block equals the embedding, blocks never overlap
  const ApiCall& probe = corpus.reports[0].calls[0];
  Eigen::VectorXf v = encode_call(probe, bundle, FeatureMask::all(), &cache);
  Eigen::VectorXf api = embed_api(bundle.skipgram, probe.api);
  if (v.segment(0, 32) != api) {
    detail = "api block does not sit at [0,32)";
    return false;
  }
  if (layout.string_offset(StringCategory::FilePath) != 32 ||
      layout.string_offset(StringCategory::DllName) != 48 ||
      layout.string_offset(StringCategory::RegistryKey) != 64 ||
      layout.string_offset(StringCategory::Url) != 80 ||
      layout.integer_offset() != 96 || layout.address_offset() != 112) {
    detail = "block offsets deviate from 32/16x4/16/20";
    return false;
  }
  detail = std::to_string(encoded) + " calls at 132 dims";
  return true;
}

bool cosine_oracle(std::string& detail) {
  Rng rng(0xc0511e);
  static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789.\\/_:-";
  auto random_string = [&](std::size_t max_len) {
    std::string s;
    std::size_t len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      s += alphabet[rng.below(sizeof(alphabet) - 1)];
    }
    return s;
  };

  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::string a = random_string(28);
    std::string b = random_string(28);
    double fast = cosine_sim(a, b);
    double slow = oracle::ngram_cosine(a, b);
    worst = std::max(worst, std::abs(fast - slow));
    if (worst > 1e-12) {
      detail = "oracle deviation " + fmt(worst) + " on '" + a + "' vs '" + b + "'";
      return false;
    }
    if (fast != cosine_sim(b, a)) {
      detail = "symmetry violated on '" + a + "' vs '" + b + "'";
      return false;
    }
    if (a.size() >= 3 && cosine_sim(a, a) != 1.0) {
      detail = "sim(s,s) != 1 for '" + a + "'";
      return false;
    }
  }
  detail = "1000 pairs, max |delta| <= 1e-12";
  return true;
}

bool hashing_properties(std::string& detail) {
  HashEncoder ints = HashEncoder::for_integers();
  HashEncoder ints_again = HashEncoder::for_integers();
  HashEncoder addrs = HashEncoder::for_addresses();
  Rng rng(0x4a5);
  static const char* names[] = {"Size", "Ordinal", "Flags",  "Count",
                                "Offset", "Timeout", "Length", "Index"};

  auto random_args = [&](bool addresses) {
    std::vector<Argument> args;
    std::size_t n = rng.below(9);
    for (std::size_t i = 0; i < n; ++i) {
      if (addresses) {
        args.push_back(make_argument(names[rng.below(8)],
                                     ArgValue::vaddr(rng.next_u64() >> 20)));
      } else {
        std::int64_t v = static_cast<std::int64_t>(rng.below(1u << 24)) -
                         static_cast<std::int64_t>(rng.below(1u << 24));
        args.push_back(make_argument(names[rng.below(8)], ArgValue::integer(v)));
      }
    }
    return args;
  };

  for (int trial = 0; trial < 1000; ++trial) {
    bool addresses = trial % 2 == 1;
    HashKind kind = addresses ? HashKind::Address : HashKind::Integer;
    const HashEncoder& enc = addresses ? addrs : ints;

    std::vector<Argument> a = random_args(addresses);
    std::vector<Argument> b = random_args(addresses);
    std::vector<Argument> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());

    Eigen::VectorXd va = hash_encode(a, kind, enc);
    Eigen::VectorXd vb = hash_encode(b, kind, enc);
    if (hash_encode(ab, kind, enc) != (va + vb).eval()) {
      detail = "linearity broke at trial " + std::to_string(trial);
      return false;
    }
    if (hash_encode(a, kind, enc) != va) {
      detail = "rerun determinism broke";
      return false;
    }
    if (!addresses) {
      if (hash_encode(a, kind, ints_again) != va) {
        detail = "fresh-encoder determinism broke";
        return false;
      }
      std::vector<Argument> negated = a;
      for (Argument& arg : negated) {
        arg = make_argument(arg.name, ArgValue::integer(-arg.value.int_value()));
      }
      if (hash_encode(negated, kind, enc) != va) {
        detail = "sign symmetry broke";
        return false;
      }
      std::vector<Argument> zeros;
      for (const Argument& arg : a) {
        zeros.push_back(make_argument(arg.name, ArgValue::integer(0)));
      }
      if (!hash_encode(zeros, kind, enc).isZero(0.0)) {
        detail = "zero-value annihilation broke";
        return false;
      }
    }
  }
  detail = "1000 lists: exact linearity, symmetry, determinism";
  return true;
}

bool bpe_oracle(std::string& detail) {
  Rng rng(0xbbe5);
  static const char alphabet[] = "abcde";
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    std::size_t n_tokens = 1 + rng.below(30);
    for (std::size_t i = 0; i < n_tokens; ++i) {
      std::string t;
      std::size_t len = 1 + rng.below(6);
      for (std::size_t k = 0; k < len; ++k) {
        t += alphabet[rng.below(sizeof(alphabet) - 1)];
      }
      tokens.push_back(std::move(t));
    }
    int merges = 1 + static_cast<int>(rng.below(10));
    BpeMerges fast = train_bpe({tokens}, merges);
    auto slow = oracle::bpe_merges(tokens, merges);
    if (fast.rules.size() != slow.size() ||
        !std::equal(slow.begin(), slow.end(), fast.rules.begin())) {
      detail = "merge list mismatch at trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "50 corpora, exact merge-list match";
  return true;
}

bool splitter_invariants(std::string& detail) {
  // 12-month corpus with uneven families, one family first seen after the
  // cutoff, and a 4:1 goodware pool
  CorpusSpec spec;
  spec.seed = 7;
  spec.min_calls = 4;
  spec.max_calls = 8;
  spec.goodware_count = 12 * 160;
  auto add_family = [&](const std::string& name, int per_month, int first_month) {
    FamilySpec fam;
    fam.name = name;
    fam.samples_per_month = per_month;
    fam.first_month = {2019, first_month};
    fam.last_month = {2019, 12};
    fam.motif_strength = 0.0;
    spec.families.push_back(fam);
  };
  add_family("alpha", 10, 1);
  add_family("beta", 5, 1);
  add_family("gamma", 7, 1);
  add_family("late", 6, 9);  // post-cutoff first appearance
  SynthCorpus corpus = generate_corpus(spec);

  SplitConfig sc;
  sc.train_end = {2019, 8};
  sc.val_end = {2019, 9};
  sc.goodware_ratio = 4.0;
  sc.seed = 13;
  SplitPlan plan = make_split_plan(corpus.reports, sc);

  if (plan.holdout_families != std::vector<std::string>{"late"}) {
    detail = "holdout detection failed";
    return false;
  }
  for (const SampleAssignment& a : plan.assignments) {
    if (a.family == "late" && a.split != Split::Test && a.kept) {
      detail = "holdout family leaked into " + std::string(to_string(a.split));
      return false;
    }
  }

  std::map<std::string, std::map<std::string, int>> per_month;
  for (const SampleAssignment& a : plan.assignments) {
    if (a.kept) per_month[a.month.str()][a.family]++;
  }
  for (const auto& [month, families] : per_month) {
    int lo = 1 << 30, hi = 0, malware = 0, goodware = 0;
    for (const auto& [family, count] : families) {
      if (family == "goodware") {
        goodware = count;
      } else {
        lo = std::min(lo, count);
        hi = std::max(hi, count);
        malware += count;
      }
    }
    if (lo != hi) {
      detail = "family counts unequal in " + month;
      return false;
    }
    int target = static_cast<int>(std::floor(4.0 * malware + 0.5));
    if (std::abs(goodware - target) > 1) {
      detail = "goodware ratio off in " + month + ": " +
               std::to_string(goodware) + " vs " + std::to_string(target);
      return false;
    }
  }

  // byte-identical reruns
  fs::path dir = fs::temp_directory_path() / "apifeat_acc_split";
  fs::create_directories(dir);
  auto render = [&](const char* tag) {
    SplitPlan p = make_split_plan(corpus.reports, sc);
    save_split_plan(dir / (std::string(tag) + ".csv"),
                    dir / (std::string(tag) + ".json"), p);
    std::ifstream in(dir / (std::string(tag) + ".csv"), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool identical = render("a") == render("b");
  fs::remove_all(dir);
  if (!identical) {
    detail = "same-seed reruns differ";
    return false;
  }
  detail = "12 months, balanced, 4:1 within 1, holdout clean, byte-stable";
  return true;
}

bool gradient_check(std::string& detail) {
  CnnConfig cfg;
  cfg.mode = InputMode::Knowledge;
  cfg.input_dim = 6;
  cfg.kernel_widths = {2, 3};
  cfg.channels = 3;
  cfg.hidden = {5, 4};
  cfg.classes = 3;
  cfg.conv_dropout = 0.0;
  cfg.hidden_dropout = 0.0;
  cfg.seed = 71;
  CnnModel<double> model(cfg);

  Rng rng(2025);
  SequenceBatch<double> batch;
  for (int i = 0; i < 4; ++i) {
    Eigen::MatrixXd x(8, 6);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 6; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
    }
    int len = 3 + static_cast<int>(rng.below(6));
    for (int r = len; r < 8; ++r) x.row(r).setZero();
    batch.features.push_back(std::move(x));
    batch.true_lengths.push_back(len);
    batch.labels.push_back(static_cast<int>(rng.below(3)));
  }

  model.zero_grad();
  model.loss_and_grad(batch, nullptr);

  const double eps = 1e-6;
  double worst = 0.0;
  for (auto& p : model.params()) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        double saved = p.value(r, c);
        p.value(r, c) = saved + eps;
        double lp = model.batch_loss(batch);
        p.value(r, c) = saved - eps;
        double lm = model.batch_loss(batch);
        p.value(r, c) = saved;
        double numeric = (lp - lm) / (2 * eps);
        double denom = std::max({std::abs(numeric), std::abs(p.grad(r, c)), 1e-8});
        worst = std::max(worst, std::abs(numeric - p.grad(r, c)) / denom);
      }
    }
  }
  detail = "max rel err " + fmt(worst) + " over " +
           std::to_string(model.parameter_count()) + " params";
  return worst < 1e-4;
}

// shared state across the heavy criteria
struct PipelineResults {
  fs::path root;
  double knowledge_f1[3] = {0, 0, 0};
  double nlp_f1[3] = {0, 0, 0};
  double knowledge_mean = 0, nlp_mean = 0;
  std::map<std::string, double> ablation_auc;  // mask -> AUC
  bool pipelines_ran = false;
  bool ablate_ran = false;
};

PipelineResults g_results;

bool rq1_directional(std::string& detail) {
  g_results.root = fs::temp_directory_path() / "apifeat_acc_e2e";
  fs::remove_all(g_results.root);
  fs::create_directories(g_results.root);

  write_corpus(g_results.root / "corpus", generate_corpus(planted_spec(0.6)));

  const std::uint64_t seeds[3] = {1, 2, 3};
  for (const std::string mode : {"knowledge", "nlp"}) {
    RunConfig config = planted_config(g_results.root, mode);
    run_stage("ingest", config);
    run_stage("split", config);
    run_stage("fit", config);
    run_stage("encode", config);
    for (int s = 0; s < 3; ++s) {
      config.set("seed", std::to_string(seeds[s]));
      run_stage("train", config);
      run_stage("eval", config);
      double f1 = read_metric(
          g_results.root / ("out_" + mode) / "eval" / "metrics.json", "macro_f1");
      (mode == "knowledge" ? g_results.knowledge_f1 : g_results.nlp_f1)[s] = f1;
    }
  }

  double k = (g_results.knowledge_f1[0] + g_results.knowledge_f1[1] +
              g_results.knowledge_f1[2]) /
             3.0;
  double n = (g_results.nlp_f1[0] + g_results.nlp_f1[1] + g_results.nlp_f1[2]) / 3.0;
  g_results.knowledge_mean = k;
  g_results.nlp_mean = n;
  g_results.pipelines_ran = true;

  detail = "knowledge F1 " + fmt(k) + " vs nlp F1 " + fmt(n) + " (3 seeds)";
  return k - n >= 0.03 && k > 0.80 && n > 0.80;
}

bool ablation_directional(std::string& detail) {
  if (!g_results.pipelines_ran) {
    detail = "pipeline criterion did not run";
    return false;
  }

  // mask-zeroing invariant over all six modes
  CorpusSpec tiny = planted_spec(0.6);
  for (FamilySpec& f : tiny.families) f.samples_per_month = 1;
  tiny.goodware_count = 12;
  SynthCorpus sample = generate_corpus(tiny);
  BundleConfig bc;
  bc.skipgram.epochs = 1;
  EncoderBundle bundle = fit_encoder_bundle(sample.reports, bc);
  const FeatureLayout& layout = bundle.config.layout;
  CallEncodeCache cache;
  for (const FeatureMask& mask : ablation_masks()) {
    for (int i = 0; i < 40; ++i) {
      const Report& r = sample.reports[static_cast<std::size_t>(i) %
                                       sample.reports.size()];
      const ApiCall& call = r.calls[static_cast<std::size_t>(i) % r.calls.size()];
      Eigen::VectorXf v = encode_call(call, bundle, mask, &cache);
      bool ok = true;
      if (!mask.api) ok &= v.segment(0, layout.api_dim).isZero(0.0f);
      if (!mask.string) ok &= v.segment(32, 4 * layout.string_k).isZero(0.0f);
      if (!mask.integer)
        ok &= v.segment(layout.integer_offset(), layout.integer_dim).isZero(0.0f);
      if (!mask.address)
        ok &= v.segment(layout.address_offset(), layout.address_dim).isZero(0.0f);
      if (!ok) {
        detail = "mask zeroing violated for " + mask.name();
        return false;
      }
    }
  }

  // the real ablate stage: six masks, comparison table, ROC CSVs
  RunConfig config = planted_config(g_results.root, "knowledge");
  config.set("seed", "1");
  run_stage("ablate", config);

  fs::path ablate_dir = g_results.root / "out_knowledge" / "ablate";
  std::ifstream in(ablate_dir / "comparison.csv");
  std::string line;
  std::getline(in, line);  // provenance comment
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string mask, acc, f1, auc;
    std::getline(ss, mask, ',');
    std::getline(ss, acc, ',');
    std::getline(ss, f1, ',');
    std::getline(ss, auc);
    g_results.ablation_auc[mask] = std::stod(auc);
  }
  for (const FeatureMask& mask : ablation_masks()) {
    std::string dir_name = mask.name();
    for (char& c : dir_name) {
      if (c == '+') c = '_';
    }
    if (!fs::exists(ablate_dir / ("roc_" + dir_name + ".csv"))) {
      detail = "missing ROC CSV for " + mask.name();
      return false;
    }
  }
  g_results.ablate_ran = true;

  double all = g_results.ablation_auc.at("all");
  double api = g_results.ablation_auc.at("api");
  double params = g_results.ablation_auc.at("params");
  detail = "AUC all " + fmt(all) + " >= api " + fmt(api) + " >= params " +
           fmt(params);
  return all >= api + 0.01 && api >= params + 0.01;
}

bool explainability_sanity(std::string& detail) {
  // (a) exact Shapley on a 3-feature additive model
  Eigen::VectorXd w(3);
  w << 1.7, -2.2, 0.9;
  auto f = [&](const Eigen::VectorXd& x) { return w.dot(x) - 3.0; };
  Eigen::VectorXd instance(3), baseline(3);
  instance << 0.8, -0.4, 1.5;
  baseline << 0.1, 0.2, -0.3;
  std::vector<double> phi = shapley_exact(f, instance, baseline);
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    double expect = w[i] * (instance[i] - baseline[i]);
    if (std::abs(phi[static_cast<std::size_t>(i)] - expect) > 1e-6) {
      detail = "additive Shapley mismatch at feature " + std::to_string(i);
      return false;
    }
    sum += phi[static_cast<std::size_t>(i)];
  }
  if (std::abs(sum - (f(instance) - f(baseline))) > 1e-6) {
    detail = "efficiency violated";
    return false;
  }

  // (b) planted-block corpus: permutation importance must rank the string
  // block first and pearson must recover the correlation sign
  FeatureLayout layout;
  Rng rng(0x9e);
  KnowledgeDataset data;
  data.seq_len = 6;
  data.dim = layout.total_dim();
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < 40; ++i) {
      Eigen::MatrixXf x = Eigen::MatrixXf::Zero(6, data.dim);
      for (int r = 0; r < 6; ++r) {
        for (int d = 0; d < layout.api_dim; ++d) {
          x(r, d) = static_cast<float>(rng.uniform(-0.5, 0.5));
        }
        if (cls == 1) {
          for (int d = 0; d < 4 * layout.string_k; ++d) {
            x(r, 32 + d) = static_cast<float>(rng.uniform(0.4, 1.0));
          }
        }
      }
      data.sample_ids.push_back("p" + std::to_string(cls * 100 + i));
      data.features.push_back(std::move(x));
      data.true_len.push_back(6);
      data.labels.push_back(cls);
    }
  }

  LabelDict dict;
  dict.names = {"goodware", "planted", "otherfam"};
  BlockCorrelation corr = pearson_blocks(data, layout, dict);
  const BlockCorrelationCell* cell = corr.find("planted", "string");
  if (!cell || !cell->defined || cell->r < 0.9) {
    detail = "pearson failed to recover the planted block";
    return false;
  }
  const BlockCorrelationCell* anti = corr.find("otherfam", "string");
  if (!anti || anti->r >= 0.0) {
    detail = "pearson sign wrong for the complement class";
    return false;
  }

  CnnConfig cfg;
  cfg.input_dim = data.dim;
  cfg.kernel_widths = {2};
  cfg.channels = 6;
  cfg.hidden = {12};
  cfg.classes = 3;
  cfg.conv_dropout = 0.0;
  cfg.hidden_dropout = 0.0;
  cfg.seed = 5;
  CnnModel<float> model(cfg);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 16;
  tc.learning_rate = 2e-3;
  tc.seed = 5;
  train_model(model, to_batch<float>(data), to_batch<float>(data), tc);
  AttributionReport blocks =
      permutation_importance_blocks(model, data, layout, 42, 3);
  if (blocks.entries.empty() || blocks.entries[0].unit != "string") {
    detail = "permutation importance did not rank the planted block first";
    return false;
  }

  // (c) planted-token corpus in nlp mode: a discriminative API name that
  // exists only in one family must rank first
  CorpusSpec spec;
  spec.seed = 55;
  spec.min_calls = 10;
  spec.max_calls = 16;
  spec.goodware_count = 80;
  FamilySpec fam;
  fam.name = "beacon";
  fam.samples_per_month = 20;
  fam.first_month = {2019, 1};
  fam.last_month = {2019, 4};
  fam.motif_strength = 0.9;
  // argument-light mix so no background word rivals the discriminator
  fam.p_string = 0.1;
  fam.p_integer = 0.6;
  fam.p_vaddr = 0.3;
  MotifSpec motif;
  // a name absent from the background pool, repeated across the motif, is
  // the single-token discriminator
  motif.apis = {"NtUserRegisterRawInputDevices", "NtUserRegisterRawInputDevices",
                "NtUserRegisterRawInputDevices"};
  fam.motifs = {motif};
  spec.families = {fam};
  SynthCorpus corpus = generate_corpus(spec);

  // strip the structural key words so frequent scaffolding tokens cannot
  // outrank the planted discriminator
  std::vector<std::string> all_tokens;
  for (const Report& r : corpus.reports) {
    std::vector<std::string> words =
        report_words(r, FeatureMask::all(), true, true);
    all_tokens.insert(all_tokens.end(), words.begin(), words.end());
  }
  Vocabulary vocab = build_vocab(all_tokens, 800);
  TokenDataset token_data;
  token_data.seq_len = 128;
  token_data.vocab_size = vocab.size();
  for (const Report& r : corpus.reports) {
    std::vector<std::string> words =
        report_words(r, FeatureMask::all(), true, true);
    TokenSequence seq = encode_tokens(vocab, words, 128);
    token_data.sample_ids.push_back(r.sample_id);
    token_data.ids.push_back(seq.ids);
    token_data.true_len.push_back(seq.true_length);
    token_data.labels.push_back(r.label == "beacon" ? 1 : 0);
  }

  CnnConfig ncfg;
  ncfg.mode = InputMode::Nlp;
  ncfg.vocab_size = vocab.size();
  ncfg.input_dim = 24;
  ncfg.kernel_widths = {2, 3};
  ncfg.channels = 8;
  ncfg.hidden = {16};
  ncfg.classes = 2;
  ncfg.conv_dropout = 0.0;
  ncfg.hidden_dropout = 0.0;
  ncfg.seed = 6;
  CnnModel<float> nmodel(ncfg);
  TrainConfig ntc;
  ntc.epochs = 10;
  ntc.batch_size = 16;
  ntc.weight_decay = 0.02;  // keeps incidental token features small
  ntc.seed = 6;
  train_model(nmodel, to_batch<float>(token_data), to_batch<float>(token_data), ntc);

  AttributionReport tokens =
      permutation_importance_tokens(nmodel, token_data, vocab, 77, 2, 40);
  if (tokens.entries.empty() ||
      tokens.entries[0].unit != "ntuserregisterrawinputdevices") {
    detail = "planted token not ranked first (got '" +
             (tokens.entries.empty() ? "none" : tokens.entries[0].unit) + "')";
    return false;
  }

  detail = "shapley exact, planted block + token recovered, pearson sign ok";
  return true;
}

bool chance_floor(std::string& detail) {
  fs::path root = fs::temp_directory_path() / "apifeat_acc_chance";
  fs::remove_all(root);
  fs::create_directories(root);

  CorpusSpec spec = planted_spec(0.0);  // no signal anywhere
  write_corpus(root / "corpus", generate_corpus(spec));

  RunConfig config = planted_config(root, "knowledge");
  // one test month keeps the interval honest for a single training run
  config.set("train_end", "2019-08");
  config.set("val_end", "2019-09");
  config.set("epochs", "6");
  config.set("seed", "1");
  run_stage("ingest", config);
  run_stage("split", config);
  run_stage("fit", config);
  run_stage("encode", config);
  run_stage("train", config);
  run_stage("eval", config);

  double f1 = read_metric(root / "out_knowledge" / "eval" / "metrics.json",
                          "macro_f1");

  // test-split size for the binomial interval
  SplitPlan plan = load_split_plan(root / "out_knowledge" / "split" / "manifest.csv",
                                   root / "out_knowledge" / "split" / "summary.json");
  double n = static_cast<double>(plan.kept_count(Split::Test));
  double p = 1.0 / 7.0;
  double half_width = 1.96 * std::sqrt(p * (1 - p) / n);
  fs::remove_all(root);

  detail = "macro F1 " + fmt(f1) + " vs 1/7 in [" + fmt(p - half_width) + ", " +
           fmt(p + half_width) + "] (n=" + std::to_string(static_cast<int>(n)) +
           ")";
  return f1 >= p - half_width && f1 <= p + half_width;
}

}  // namespace

int main() {
  Harness harness;
  std::printf("apifeat acceptance suite (%s)\n", kToolVersion);

  harness.run("dimension-contract", 10.0, dimension_contract);
  harness.run("eq1-cosine-oracle", 0.0, cosine_oracle);
  harness.run("eq2-hashing-properties", 0.0, hashing_properties);
  harness.run("bpe-oracle", 0.0, bpe_oracle);
  harness.run("splitter-invariants", 5.0, splitter_invariants);
  harness.run("gradient-check", 30.0, gradient_check);
  harness.run("rq1-directional", 900.0, rq1_directional);
  harness.run("ablation-directional", 0.0, ablation_directional);
  harness.run("explainability-sanity", 0.0, explainability_sanity);
  harness.run("chance-floor", 0.0, chance_floor);

  if (g_results.pipelines_ran) {
    std::printf("  knowledge F1 by seed: %.4f %.4f %.4f\n",
                g_results.knowledge_f1[0], g_results.knowledge_f1[1],
                g_results.knowledge_f1[2]);
    std::printf("  nlp F1 by seed:       %.4f %.4f %.4f\n", g_results.nlp_f1[0],
                g_results.nlp_f1[1], g_results.nlp_f1[2]);
  }
  if (g_results.ablate_ran) {
    std::printf("  ablation AUC:");
    for (const auto& [mask, auc] : g_results.ablation_auc) {
      std::printf(" %s=%.4f", mask.c_str(), auc);
    }
    std::printf("\n");
  }

  std::printf("%d passed, %d failed\n", harness.passed, harness.failed);
  if (g_results.pipelines_ran) {
    std::error_code ec;
    fs::remove_all(g_results.root, ec);
  }
  return harness.failed == 0 ? 0 : 1;
}
