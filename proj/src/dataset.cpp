#include "apifeat/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

#include "apifeat/errors.hpp"

namespace apifeat {

int LabelDict::id_of(const std::string& name) const {
  auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) {
    throw SchemaError("unknown class label", name);
  }
  return static_cast<int>(it - names.begin());
}

LabelDict LabelDict::from_labels(const std::vector<std::string>& labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  LabelDict dict;
  dict.names.assign(unique.begin(), unique.end());
  return dict;
}

namespace {

// explicit little-endian scalar IO so files are identical across platforms

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  // host is assumed little-endian for memcpy; reorder if needed
  static_assert(sizeof(T) <= 8);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint32_t n = read_le<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

constexpr std::uint32_t kKnowledgeMagic = 0x4b464441;  // "ADFK"
constexpr std::uint32_t kTokenMagic = 0x54464441;      // "ADFT"
constexpr std::uint32_t kVersion = 1;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

}  // namespace

void save_knowledge_dataset(const std::filesystem::path& path,
                            const KnowledgeDataset& data) {
  std::ofstream out = open_out(path);
  write_le(out, kKnowledgeMagic);
  write_le(out, kVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.seq_len));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim));
  for (std::size_t i = 0; i < data.size(); ++i) {
    write_string(out, data.sample_ids[i]);
    write_le<std::int32_t>(out, data.true_len[i]);
    write_le<std::int32_t>(out, data.labels[i]);
    const Eigen::MatrixXf& m = data.features[i];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        write_le<float>(out, m(r, c));
      }
    }
  }
}

KnowledgeDataset load_knowledge_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  if (read_le<std::uint32_t>(in) != kKnowledgeMagic ||
      read_le<std::uint32_t>(in) != kVersion) {
    throw SchemaError("unsupported knowledge dataset file", path.string());
  }
  KnowledgeDataset data;
  std::uint32_t n = read_le<std::uint32_t>(in);
  data.seq_len = static_cast<int>(read_le<std::uint32_t>(in));
  data.dim = static_cast<int>(read_le<std::uint32_t>(in));
  data.sample_ids.reserve(n);
  data.features.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    data.sample_ids.push_back(read_string(in));
    data.true_len.push_back(read_le<std::int32_t>(in));
    data.labels.push_back(read_le<std::int32_t>(in));
    Eigen::MatrixXf m(data.seq_len, data.dim);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = read_le<float>(in);
      }
    }
    data.features.push_back(std::move(m));
  }
  if (!in) throw ParseError("truncated knowledge dataset " + path.string(), 0);
  return data;
}

void save_token_dataset(const std::filesystem::path& path,
                        const TokenDataset& data) {
  std::ofstream out = open_out(path);
  write_le(out, kTokenMagic);
  write_le(out, kVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.seq_len));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.vocab_size));
  for (std::size_t i = 0; i < data.size(); ++i) {
    write_string(out, data.sample_ids[i]);
    write_le<std::int32_t>(out, data.true_len[i]);
    write_le<std::int32_t>(out, data.labels[i]);
    for (int id : data.ids[i]) write_le<std::int32_t>(out, id);
  }
}

TokenDataset load_token_dataset(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  if (read_le<std::uint32_t>(in) != kTokenMagic ||
      read_le<std::uint32_t>(in) != kVersion) {
    throw SchemaError("unsupported token dataset file", path.string());
  }
  TokenDataset data;
  std::uint32_t n = read_le<std::uint32_t>(in);
  data.seq_len = static_cast<int>(read_le<std::uint32_t>(in));
  data.vocab_size = static_cast<int>(read_le<std::uint32_t>(in));
  for (std::uint32_t i = 0; i < n; ++i) {
    data.sample_ids.push_back(read_string(in));
    data.true_len.push_back(read_le<std::int32_t>(in));
    data.labels.push_back(read_le<std::int32_t>(in));
    std::vector<int> ids(static_cast<std::size_t>(data.seq_len));
    for (int& id : ids) id = read_le<std::int32_t>(in);
    data.ids.push_back(std::move(ids));
  }
  if (!in) throw ParseError("truncated token dataset " + path.string(), 0);
  return data;
}

void save_label_dict(const std::filesystem::path& path, const LabelDict& dict) {
  std::ofstream out = open_out(path);
  for (const std::string& name : dict.names) out << name << '\n';
}

LabelDict load_label_dict(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  LabelDict dict;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) dict.names.push_back(line);
  }
  if (dict.names.empty()) throw SchemaError("empty label dictionary", path.string());
  return dict;
}

Eigen::MatrixXd mean_pooled_features(const KnowledgeDataset& data) {
  Eigen::MatrixXd pooled =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), data.dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    int len = data.true_len[i];
    if (len <= 0) continue;
    pooled.row(static_cast<Eigen::Index>(i)) =
        data.features[i].topRows(len).colwise().mean().cast<double>();
  }
  return pooled;
}

}  // namespace apifeat
