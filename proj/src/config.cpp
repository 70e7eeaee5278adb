#include "apifeat/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "apifeat/errors.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

const std::map<std::string, std::string>& RunConfig::default_table() {
  static const std::map<std::string, std::string> defaults = {
      // paths
      {"corpus_dir", ""},
      {"manifest", ""},
      {"out_dir", "out"},
      {"synth_spec", ""},
      // pipeline
      {"mode", "knowledge"},
      {"mask", "all"},
      {"seed", "1"},
      {"seq_len", "1024"},
      // knowledge encoders
      {"embed_dim", "32"},
      {"string_k", "16"},
      {"integer_hash_dim", "16"},
      {"address_hash_dim", "20"},
      {"segment_boundary", "2147483648"},
      {"standardize_blocks", "false"},
      {"skipgram_window", "5"},
      {"skipgram_negatives", "5"},
      {"skipgram_epochs", "5"},
      {"skipgram_lr", "0.025"},
      {"skipgram_corpus", "train"},
      // nlp pipeline
      {"tokenizer", "whitespace"},
      {"vocab_cap", "70000"},
      {"bpe_merges", "200"},
      {"nlp_seq_len", "1024"},
      {"nlp_lowercase", "true"},
      {"nlp_strip_keys", "false"},
      {"nlp_embed_dim", "96"},
      // split
      {"train_end", ""},
      {"val_end", ""},
      {"goodware_ratio", "4.0"},
      {"ratio_per_month", "true"},
      {"goodware_label", "goodware"},
      {"drift_threshold", "0.25"},
      // model
      {"kernel_widths", "2,3,4,5"},
      {"channels", "128"},
      {"conv_dropout", "0.3"},
      {"hidden", "128,64"},
      {"hidden_dropout", "0.2"},
      // training
      {"learning_rate", "0.001"},
      {"weight_decay", "0.01"},
      {"batch_size", "32"},
      {"epochs", "30"},
      // explainability
      {"explain_repeats", "3"},
      {"explain_max_tokens", "50"},
      {"shapley_features", "12"},
  };
  return defaults;
}

RunConfig::RunConfig() = default;

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());

  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key = value: " + line);
    }
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t");
      std::size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!default_table().count(key)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

bool RunConfig::is_set(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  auto def = default_table().find(key);
  if (def == default_table().end()) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  return def->second;
}

long long RunConfig::get_int(const std::string& key) const {
  std::string s = get(key);
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' is not an integer: " + s);
  }
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  std::string s = get(key);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " + s);
  }
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  std::string s = get(key);
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + s);
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  std::string s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + s);
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::string s = get(key);
  std::vector<int> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer list: " + s);
    }
  }
  if (out.empty()) {
    throw ConfigError("config key '" + key + "' is an empty list");
  }
  return out;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [key, def] : default_table()) {
    auto it = values_.find(key);
    out += key;
    out += '=';
    out += it != values_.end() ? it->second : def;
    out += '\n';
  }
  return out;
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical())));
  return buf;
}

void RunConfig::dump(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config dump " + path.string());
  out << "# effective configuration (" << kToolVersion << ", hash " << hash()
      << ")\n";
  out << canonical();
}

}  // namespace apifeat
