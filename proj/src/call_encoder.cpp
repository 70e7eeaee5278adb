#include "apifeat/call_encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apifeat/errors.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

using nlohmann::json;

int FeatureLayout::string_offset(StringCategory cat) const {
  switch (cat) {
    case StringCategory::FilePath: return api_dim;
    case StringCategory::DllName: return api_dim + string_k;
    case StringCategory::RegistryKey: return api_dim + 2 * string_k;
    case StringCategory::Url: return api_dim + 3 * string_k;
    case StringCategory::Other: break;
  }
  return -1;
}

FeatureMask FeatureMask::parse(const std::string& name) {
  if (name == "all") return all();
  if (name == "api") return api_only();
  if (name == "params") return params_only();
  if (name == "api+address") return {true, false, false, true};
  if (name == "api+string") return {true, true, false, false};
  if (name == "api+integer") return {true, false, true, false};
  throw ConfigError("unknown feature mask '" + name + "'");
}

std::string FeatureMask::name() const {
  if (api && string && integer && address) return "all";
  if (api && !string && !integer && !address) return "api";
  if (!api && string && integer && address) return "params";
  if (api && !string && !integer && address) return "api+address";
  if (api && string && !integer && !address) return "api+string";
  if (api && !string && integer && !address) return "api+integer";
  std::string out;
  if (api) out += "api+";
  if (string) out += "string+";
  if (integer) out += "integer+";
  if (address) out += "address+";
  if (!out.empty()) out.pop_back();
  return out.empty() ? "none" : out;
}

const std::array<FeatureMask, 6>& ablation_masks() {
  static const std::array<FeatureMask, 6> masks = {
      FeatureMask::api_only(),        FeatureMask::params_only(),
      FeatureMask::parse("api+address"), FeatureMask::parse("api+string"),
      FeatureMask::parse("api+integer"), FeatureMask::all()};
  return masks;
}

const SimilarityEncoder& EncoderBundle::encoder_for(StringCategory cat) const {
  switch (cat) {
    case StringCategory::FilePath: return file_paths;
    case StringCategory::DllName: return dlls;
    case StringCategory::RegistryKey: return registry_keys;
    case StringCategory::Url: return urls;
    case StringCategory::Other: break;
  }
  throw ConfigError("no similarity encoder for category 'other'");
}

namespace {

SimilarityEncoder fit_category(const std::vector<std::string>& strings,
                               StringCategory cat, int k,
                               std::vector<std::string>* warnings) {
  if (strings.empty()) {
    if (warnings) {
      warnings->push_back(std::string("no training strings for category ") +
                          to_string(cat) + "; block will encode to zeros");
    }
    return SimilarityEncoder::from_dictionary({}, cat, k);
  }
  return SimilarityEncoder::fit(strings, cat, k);
}

}  // namespace

EncoderBundle fit_encoder_bundle(const std::vector<Report>& train_reports,
                                 const BundleConfig& config,
                                 std::vector<std::string>* warnings) {
  if (train_reports.empty()) {
    throw EmptyCorpusError("fit_encoder_bundle: no training reports");
  }

  std::vector<std::vector<std::string>> name_corpus;
  name_corpus.reserve(train_reports.size());
  std::vector<std::string> pools[4];

  for (const Report& r : train_reports) {
    std::vector<std::string> names;
    names.reserve(r.calls.size());
    for (const ApiCall& call : r.calls) {
      names.push_back(call.api);
      for (const Argument& arg : call.arguments) {
        if (!arg.value.is_str()) continue;
        StringCategory cat = classify_string(arg.value.str());
        if (cat == StringCategory::Other) continue;
        pools[static_cast<int>(cat)].push_back(arg.value.str());
      }
    }
    name_corpus.push_back(std::move(names));
  }

  EncoderBundle bundle;
  bundle.config = config;
  SkipGramConfig sg = config.skipgram;
  sg.dim = config.layout.api_dim;
  bundle.skipgram = train_skipgram(name_corpus, sg);

  int k = config.layout.string_k;
  bundle.file_paths = fit_category(pools[static_cast<int>(StringCategory::FilePath)],
                                   StringCategory::FilePath, k, warnings);
  bundle.dlls = fit_category(pools[static_cast<int>(StringCategory::DllName)],
                             StringCategory::DllName, k, warnings);
  bundle.registry_keys =
      fit_category(pools[static_cast<int>(StringCategory::RegistryKey)],
                   StringCategory::RegistryKey, k, warnings);
  bundle.urls = fit_category(pools[static_cast<int>(StringCategory::Url)],
                             StringCategory::Url, k, warnings);

  bundle.integer_hash = HashEncoder::for_integers(config.integer_hash_dim);
  bundle.address_hash = HashEncoder::for_addresses(config.address_hash_dim);
  bundle.address_hash.segment_boundary = config.segment_boundary;

  if (config.standardize_blocks) {
    const int dim = config.layout.total_dim();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
    std::int64_t n = 0;
    CallEncodeCache cache;
    EncoderBundle raw = bundle;  // stats are computed on unstandardized vectors
    for (const Report& r : train_reports) {
      for (const ApiCall& call : r.calls) {
        Eigen::VectorXd v =
            encode_call(call, raw, FeatureMask::all(), &cache).cast<double>();
        sum += v;
        sq += v.cwiseProduct(v);
        ++n;
      }
    }
    if (n > 0) {
      Eigen::VectorXd mean = sum / static_cast<double>(n);
      Eigen::VectorXd var = sq / static_cast<double>(n) - mean.cwiseProduct(mean);
      bundle.feature_mean = mean.cast<float>();
      bundle.feature_scale =
          var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6).cast<float>();
    }
  }

  return bundle;
}

namespace {

const Eigen::VectorXf& cached_api(const SkipGramModel& model,
                                  const std::string& name,
                                  CallEncodeCache* cache) {
  static thread_local Eigen::VectorXf scratch;
  if (!cache) {
    scratch = embed_api(model, name);
    return scratch;
  }
  auto it = cache->api.find(name);
  if (it == cache->api.end()) {
    it = cache->api.emplace(name, embed_api(model, name)).first;
  }
  return it->second;
}

const Eigen::VectorXf& cached_string(const SimilarityEncoder& enc,
                                     StringCategory cat, const std::string& s,
                                     CallEncodeCache* cache) {
  static thread_local Eigen::VectorXf scratch;
  if (!cache) {
    scratch = enc.encode(s);
    return scratch;
  }
  auto& memo = cache->strings[static_cast<int>(cat)];
  auto it = memo.find(s);
  if (it == memo.end()) {
    it = memo.emplace(s, enc.encode(s)).first;
  }
  return it->second;
}

}  // namespace

Eigen::VectorXf encode_call(const ApiCall& call, const EncoderBundle& bundle,
                            const FeatureMask& mask, CallEncodeCache* cache) {
  const FeatureLayout& layout = bundle.config.layout;
  Eigen::VectorXf out = Eigen::VectorXf::Zero(layout.total_dim());

  if (mask.api) {
    out.segment(layout.api_offset(), layout.api_dim) =
        cached_api(bundle.skipgram, call.api, cache);
  }

  if (mask.string) {
    Eigen::VectorXf pooled[4];
    int counts[4] = {0, 0, 0, 0};
    for (const Argument& arg : call.arguments) {
      if (!arg.value.is_str()) continue;
      StringCategory cat = classify_string(arg.value.str());
      if (cat == StringCategory::Other) continue;
      int c = static_cast<int>(cat);
      const Eigen::VectorXf& v =
          cached_string(bundle.encoder_for(cat), cat, arg.value.str(), cache);
      if (counts[c] == 0) {
        pooled[c] = v;
      } else {
        pooled[c] += v;
      }
      ++counts[c];
    }
    for (int c = 0; c < 4; ++c) {
      if (counts[c] == 0) continue;
      out.segment(layout.string_offset(static_cast<StringCategory>(c)),
                  layout.string_k) = pooled[c] / static_cast<float>(counts[c]);
    }
  }

  if (mask.integer) {
    out.segment(layout.integer_offset(), layout.integer_dim) =
        hash_encode(call.arguments, HashKind::Integer, bundle.integer_hash)
            .cast<float>();
  }
  if (mask.address) {
    out.segment(layout.address_offset(), layout.address_dim) =
        hash_encode(call.arguments, HashKind::Address, bundle.address_hash)
            .cast<float>();
  }

  if (bundle.config.standardize_blocks && bundle.feature_mean.size() == out.size()) {
    // standardize only selected blocks so masked blocks stay exactly zero
    auto standardize = [&](int offset, int len) {
      out.segment(offset, len) =
          (out.segment(offset, len) - bundle.feature_mean.segment(offset, len))
              .cwiseQuotient(bundle.feature_scale.segment(offset, len));
    };
    if (mask.api) standardize(layout.api_offset(), layout.api_dim);
    if (mask.string) standardize(layout.string_offset(StringCategory::FilePath), 4 * layout.string_k);
    if (mask.integer) standardize(layout.integer_offset(), layout.integer_dim);
    if (mask.address) standardize(layout.address_offset(), layout.address_dim);
  }

  return out;
}

int encode_report(const Report& report, const EncoderBundle& bundle,
                  const FeatureMask& mask, int max_calls, Eigen::MatrixXf& out,
                  CallEncodeCache* cache) {
  const int dim = bundle.config.layout.total_dim();
  if (out.rows() != max_calls || out.cols() != dim) {
    out.resize(max_calls, dim);
  }
  out.setZero();
  int n = static_cast<int>(std::min<std::size_t>(report.calls.size(),
                                                 static_cast<std::size_t>(max_calls)));
  for (int i = 0; i < n; ++i) {
    out.row(i) = encode_call(report.calls[i], bundle, mask, cache).transpose();
  }
  return n;
}

namespace {

json matrix_to_json(const Eigen::MatrixXf& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXf matrix_from_json(const json& rows) {
  Eigen::MatrixXf m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<float>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXf& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXf vector_from_json(const json& arr) {
  Eigen::VectorXf v(arr.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = arr[static_cast<std::size_t>(i)].get<float>();
  }
  return v;
}

json similarity_to_json(const SimilarityEncoder& enc) {
  return json{{"category", to_string(enc.category())},
              {"k", enc.k()},
              {"dictionary", enc.dictionary()}};
}

StringCategory category_from_name(const std::string& name) {
  if (name == "file_path") return StringCategory::FilePath;
  if (name == "dll_name") return StringCategory::DllName;
  if (name == "registry_key") return StringCategory::RegistryKey;
  if (name == "url") return StringCategory::Url;
  return StringCategory::Other;
}

SimilarityEncoder similarity_from_json(const json& doc) {
  return SimilarityEncoder::from_dictionary(
      doc.at("dictionary").get<std::vector<std::string>>(),
      category_from_name(doc.at("category").get<std::string>()),
      doc.at("k").get<int>());
}

json hash_to_json(const HashEncoder& enc) {
  return json{{"dim", enc.dim},
              {"segment_aware", enc.segment_aware},
              {"bucket_seed", enc.bucket_seed},
              {"sign_seed", enc.sign_seed},
              {"segment_boundary", enc.segment_boundary}};
}

HashEncoder hash_from_json(const json& doc) {
  HashEncoder enc;
  enc.dim = doc.at("dim").get<int>();
  enc.segment_aware = doc.at("segment_aware").get<bool>();
  enc.bucket_seed = doc.at("bucket_seed").get<std::uint64_t>();
  enc.sign_seed = doc.at("sign_seed").get<std::uint64_t>();
  enc.segment_boundary = doc.at("segment_boundary").get<std::uint64_t>();
  return enc;
}

json bundle_to_json(const EncoderBundle& bundle) {
  const BundleConfig& cfg = bundle.config;
  json skipgram{{"window", bundle.skipgram.window},
                {"negatives", bundle.skipgram.negatives},
                {"names", bundle.skipgram.names},
                {"input_vectors", matrix_to_json(bundle.skipgram.input_vectors)},
                {"output_vectors", matrix_to_json(bundle.skipgram.output_vectors)}};
  json doc{
      {"format", "apifeat.encoders"},
      {"version", 1},
      {"layout",
       {{"api_dim", cfg.layout.api_dim},
        {"string_k", cfg.layout.string_k},
        {"integer_dim", cfg.layout.integer_dim},
        {"address_dim", cfg.layout.address_dim}}},
      {"standardize_blocks", cfg.standardize_blocks},
      {"skipgram", std::move(skipgram)},
      {"file_paths", similarity_to_json(bundle.file_paths)},
      {"dlls", similarity_to_json(bundle.dlls)},
      {"registry_keys", similarity_to_json(bundle.registry_keys)},
      {"urls", similarity_to_json(bundle.urls)},
      {"integer_hash", hash_to_json(bundle.integer_hash)},
      {"address_hash", hash_to_json(bundle.address_hash)}};
  if (bundle.feature_mean.size() > 0) {
    doc["feature_mean"] = vector_to_json(bundle.feature_mean);
    doc["feature_scale"] = vector_to_json(bundle.feature_scale);
  }
  return doc;
}

}  // namespace

std::string encoder_bundle_hash(const EncoderBundle& bundle) {
  std::string serialized = bundle_to_json(bundle).dump();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialized)));
  return buf;
}

std::string save_encoder_bundle(const std::filesystem::path& path,
                                const EncoderBundle& bundle) {
  json doc = bundle_to_json(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write encoder bundle " + path.string());
  std::string serialized = doc.dump(2);
  out << serialized << '\n';
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

EncoderBundle load_encoder_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open encoder bundle " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = json::parse(buf.str());
  if (doc.value("format", "") != "apifeat.encoders" || doc.value("version", 0) != 1) {
    throw SchemaError("unsupported encoder bundle", path.string());
  }

  EncoderBundle bundle;
  const json& layout = doc.at("layout");
  bundle.config.layout.api_dim = layout.at("api_dim").get<int>();
  bundle.config.layout.string_k = layout.at("string_k").get<int>();
  bundle.config.layout.integer_dim = layout.at("integer_dim").get<int>();
  bundle.config.layout.address_dim = layout.at("address_dim").get<int>();
  bundle.config.standardize_blocks = doc.value("standardize_blocks", false);

  const json& sg = doc.at("skipgram");
  bundle.skipgram.window = sg.at("window").get<int>();
  bundle.skipgram.negatives = sg.at("negatives").get<int>();
  bundle.skipgram.names = sg.at("names").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < bundle.skipgram.names.size(); ++i) {
    bundle.skipgram.vocab.emplace(bundle.skipgram.names[i], static_cast<int>(i));
  }
  bundle.skipgram.input_vectors = matrix_from_json(sg.at("input_vectors"));
  bundle.skipgram.output_vectors = matrix_from_json(sg.at("output_vectors"));

  bundle.file_paths = similarity_from_json(doc.at("file_paths"));
  bundle.dlls = similarity_from_json(doc.at("dlls"));
  bundle.registry_keys = similarity_from_json(doc.at("registry_keys"));
  bundle.urls = similarity_from_json(doc.at("urls"));
  bundle.integer_hash = hash_from_json(doc.at("integer_hash"));
  bundle.address_hash = hash_from_json(doc.at("address_hash"));
  bundle.config.integer_hash_dim = bundle.integer_hash.dim;
  bundle.config.address_hash_dim = bundle.address_hash.dim;
  bundle.config.segment_boundary = bundle.address_hash.segment_boundary;
  if (doc.contains("feature_mean")) {
    bundle.feature_mean = vector_from_json(doc.at("feature_mean"));
    bundle.feature_scale = vector_from_json(doc.at("feature_scale"));
  }
  return bundle;
}

}  // namespace apifeat
