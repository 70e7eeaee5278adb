#include "apifeat/train.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace apifeat {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'A', 'P', 'F', 'C', 'K', 'P', 'T', '1'};

json config_to_json(const CnnConfig& config) {
  return json{{"mode", config.mode == InputMode::Knowledge ? "knowledge" : "nlp"},
              {"input_dim", config.input_dim},
              {"vocab_size", config.vocab_size},
              {"kernel_widths", config.kernel_widths},
              {"channels", config.channels},
              {"conv_dropout", config.conv_dropout},
              {"hidden", config.hidden},
              {"hidden_dropout", config.hidden_dropout},
              {"classes", config.classes},
              {"seed", config.seed}};
}

CnnConfig config_from_json(const json& doc) {
  CnnConfig config;
  config.mode = doc.at("mode").get<std::string>() == "nlp" ? InputMode::Nlp
                                                           : InputMode::Knowledge;
  config.input_dim = doc.at("input_dim").get<int>();
  config.vocab_size = doc.at("vocab_size").get<int>();
  config.kernel_widths = doc.at("kernel_widths").get<std::vector<int>>();
  config.channels = doc.at("channels").get<int>();
  config.conv_dropout = doc.at("conv_dropout").get<double>();
  config.hidden = doc.at("hidden").get<std::vector<int>>();
  config.hidden_dropout = doc.at("hidden_dropout").get<double>();
  config.classes = doc.at("classes").get<int>();
  config.seed = doc.at("seed").get<std::uint64_t>();
  return config;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64_le(out, bits);
}

double read_f64_le(std::istream& in) {
  std::uint64_t bits = read_u64_le(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

template <typename Scalar>
void save_checkpoint_impl(const std::filesystem::path& path,
                          const CnnConfig& config,
                          const std::vector<Param<Scalar>>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());

  json arrays = json::array();
  for (const Param<Scalar>& p : params) {
    arrays.push_back(json{{"name", p.name}, {"rows", p.value.rows()},
                          {"cols", p.value.cols()}});
  }
  std::string header =
      json{{"config", config_to_json(config)}, {"arrays", arrays}}.dump();

  out.write(kMagic, sizeof(kMagic));
  write_u64_le(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Param<Scalar>& p : params) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        write_f64_le(out, static_cast<double>(p.value(r, c)));
      }
    }
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CnnConfig& config,
                     const std::vector<Param<float>>& params) {
  save_checkpoint_impl(path, config, params);
}

void save_checkpoint(const std::filesystem::path& path, const CnnConfig& config,
                     const std::vector<Param<double>>& params) {
  save_checkpoint_impl(path, config, params);
}

CnnModel<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw SchemaError("bad checkpoint magic", path.string());
  }
  std::uint64_t header_len = read_u64_le(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  json doc = json::parse(header);

  CnnModel<float> model(config_from_json(doc.at("config")));
  auto& params = model.params();
  const json& arrays = doc.at("arrays");
  if (arrays.size() != params.size()) {
    throw SchemaError("checkpoint parameter list mismatch", path.string());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& meta = arrays[i];
    if (meta.at("name").get<std::string>() != params[i].name ||
        meta.at("rows").get<Eigen::Index>() != params[i].value.rows() ||
        meta.at("cols").get<Eigen::Index>() != params[i].value.cols()) {
      throw SchemaError("checkpoint array mismatch for " + params[i].name,
                        path.string());
    }
    for (Eigen::Index r = 0; r < params[i].value.rows(); ++r) {
      for (Eigen::Index c = 0; c < params[i].value.cols(); ++c) {
        params[i].value(r, c) = static_cast<float>(read_f64_le(in));
      }
    }
  }
  if (!in) throw ParseError("truncated checkpoint " + path.string(), 0);
  return model;
}

}  // namespace apifeat
