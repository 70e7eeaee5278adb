#include "apifeat/synth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apifeat/errors.hpp"
#include "apifeat/rng.hpp"
#include "apifeat/stable_hash.hpp"

namespace apifeat {

using nlohmann::json;

void CorpusSpec::validate() const {
  if (families.empty() && goodware_count == 0) {
    throw ConfigError("corpus spec: no families and no goodware");
  }
  if (min_calls < 3 || max_calls < min_calls) {
    throw ConfigError("corpus spec: bad call-count range");
  }
  if (motif_slot_stride < 3) {
    throw ConfigError("corpus spec: motif slot stride must be >= 3");
  }
  for (const FamilySpec& f : families) {
    if (f.name.empty()) throw ConfigError("corpus spec: family without name");
    if (f.name == goodware_label) {
      throw ConfigError("corpus spec: family may not reuse the goodware label");
    }
    if (f.samples_per_month < 1) {
      throw ConfigError("corpus spec: samples_per_month must be >= 1 for " + f.name);
    }
    if (f.last_month < f.first_month) {
      throw ConfigError("corpus spec: empty month range for " + f.name);
    }
    double total = f.p_string + f.p_integer + f.p_vaddr;
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("corpus spec: argument-type mix must sum to 1 for " + f.name);
    }
    if (f.motif_strength < 0.0 || f.motif_strength > 1.0) {
      throw ConfigError("corpus spec: motif strength out of [0,1] for " + f.name);
    }
    for (const MotifSpec& m : f.motifs) {
      if (m.apis.empty()) throw ConfigError("corpus spec: empty motif for " + f.name);
      if (m.kernel_address_bias < 0.0 || m.kernel_address_bias > 1.0) {
        throw ConfigError("corpus spec: kernel bias out of [0,1] for " + f.name);
      }
      if (m.api_noise < 0.0 || m.api_noise > 1.0) {
        throw ConfigError("corpus spec: api noise out of [0,1] for " + f.name);
      }
      if (m.integer_probability < 0.0 || m.integer_probability > 1.0) {
        throw ConfigError("corpus spec: integer probability out of [0,1] for " +
                          f.name);
      }
    }
  }
}

namespace {

YearMonth next_month(YearMonth m) {
  if (++m.month > 12) {
    m.month = 1;
    ++m.year;
  }
  return m;
}

std::vector<YearMonth> month_range(YearMonth first, YearMonth last) {
  std::vector<YearMonth> months;
  for (YearMonth m = first; m <= last; m = next_month(m)) months.push_back(m);
  return months;
}

const std::vector<std::string>& int_arg_names() {
  static const std::vector<std::string> names = {
      "Size",    "Ordinal", "Milliseconds", "Flags",  "Length",
      "Count",   "Offset",  "ProcessId",    "ThreadId", "Timeout",
      "Access",  "Options", "Disposition",  "Index",  "Protect"};
  return names;
}

const std::vector<std::string>& addr_arg_names() {
  static const std::vector<std::string> names = {
      "ModuleHandle", "FunctionAddress", "BaseAddress",  "KeyHandle",
      "FileHandle",   "ProcessHandle",   "ThreadHandle", "Buffer",
      "StartAddress", "SectionHandle",   "TokenHandle",  "EventHandle"};
  return names;
}

const std::vector<std::string>& string_arg_names() {
  static const std::vector<std::string> names = {
      "ModuleName", "FunctionName", "FileName",  "KeyName",
      "LibraryName", "CommandLine", "ValueName", "ObjectName",
      "Path",        "DirectoryName"};
  return names;
}

const std::vector<std::string>& background_dlls() {
  static const std::vector<std::string> pool = {
      "kernel32.dll", "ntdll.dll",  "user32.dll",  "advapi32.dll",
      "IMM32.DLL",    "ole32.dll",  "shell32.dll", "ws2_32.dll",
      "gdi32.dll",    "msvcrt.dll", "oleaut32.dll", "shlwapi.dll"};
  return pool;
}

const std::vector<std::string>& background_words() {
  static const std::vector<std::string> pool = {
      "GENERIC_READ",  "GENERIC_WRITE", "CryptDeriveKey", "OpenExisting",
      "FILE_SHARE_READ", "MutexLocal",  "EventGlobal",    "DefaultUser",
      "QueryInterface", "StackPivoted", "ContextSwitch",  "LocalService"};
  return pool;
}

std::string hex_suffix(Rng& rng, int digits = 4) {
  static const char* alphabet = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < digits; ++i) {
    s += alphabet[rng.below(16)];
  }
  return s;
}

std::string background_file_path(Rng& rng) {
  switch (rng.below(3)) {
    case 0:
      return "C:\\Windows\\System32\\" + background_dlls()[rng.below(background_dlls().size())];
    case 1:
      return "C:\\Users\\user\\AppData\\Local\\Temp\\tmp" + hex_suffix(rng) + ".dat";
    default:
      return "C:\\ProgramData\\cache\\entry" + hex_suffix(rng) + ".log";
  }
}

std::string background_registry_key(Rng& rng) {
  switch (rng.below(3)) {
    case 0:
      return "HKEY_LOCAL_MACHINE\\Software\\Microsoft\\Windows\\CurrentVersion\\Run";
    case 1:
      return "HKEY_CURRENT_USER\\Software\\Classes\\Local Settings\\MuiCache";
    default:
      return "HKEY_LOCAL_MACHINE\\System\\CurrentControlSet\\Services\\Tcpip";
  }
}

std::string background_url(Rng& rng) {
  switch (rng.below(3)) {
    case 0:
      return "http://update.vendor" + std::to_string(rng.below(9)) + ".com/check";
    case 1:
      return "https://cdn.files" + std::to_string(rng.below(9)) + ".net/data";
    default:
      return "http://www.telemetry" + std::to_string(rng.below(9)) + ".org/ping";
  }
}

constexpr std::uint64_t kUserLow = 0x00010000;
constexpr std::uint64_t kUserHigh = 0x7fff0000;
constexpr std::uint64_t kKernelLow = 0x80000000;
constexpr std::uint64_t kKernelHigh = 0xffff0000;

// addresses straddle the 2^31 user/kernel boundary so the segment-aware
// hashing actually sees both segments
std::uint64_t draw_address(Rng& rng, double kernel_prob) {
  if (rng.next_unit() < kernel_prob) {
    return kKernelLow + rng.below(kKernelHigh - kKernelLow);
  }
  return kUserLow + rng.below(kUserHigh - kUserLow);
}

std::int64_t draw_integer(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return 0;
    case 1: return static_cast<std::int64_t>(rng.below(128));
    case 2: return static_cast<std::int64_t>(rng.below(65536));
    default: return static_cast<std::int64_t>(rng.below(1u << 30));
  }
}

Argument background_string_arg(Rng& rng) {
  const auto& names = string_arg_names();
  std::string name = names[rng.below(names.size())];
  std::string value;
  switch (rng.below(10)) {
    case 0: case 1: case 2:
      value = background_dlls()[rng.below(background_dlls().size())];
      break;
    case 3: case 4: case 5:
      value = background_file_path(rng);
      break;
    case 6: case 7:
      value = background_registry_key(rng);
      break;
    case 8:
      value = background_url(rng);
      break;
    default:
      value = background_words()[rng.below(background_words().size())];
      break;
  }
  return make_argument(std::move(name), ArgValue::str(std::move(value)));
}

Argument draw_argument(Rng& rng, const FamilySpec& family, double kernel_prob) {
  double u = rng.next_unit();
  if (u < family.p_string) {
    return background_string_arg(rng);
  }
  if (u < family.p_string + family.p_integer) {
    const auto& names = int_arg_names();
    return make_argument(names[rng.below(names.size())],
                         ArgValue::integer(draw_integer(rng)));
  }
  const auto& names = addr_arg_names();
  return make_argument(names[rng.below(names.size())],
                       ArgValue::vaddr(draw_address(rng, kernel_prob)));
}

ApiCall background_call(Rng& rng, const FamilySpec& family) {
  const auto& apis = windows_api_names();
  // rank-decaying weights: draw two uniforms and keep the smaller rank,
  // which biases toward the head of the list
  std::size_t a = rng.below(apis.size());
  std::size_t b = rng.below(apis.size());
  ApiCall call;
  call.api = apis[std::min(a, b)];
  std::uint64_t n_args = rng.below(5);
  for (std::uint64_t i = 0; i < n_args; ++i) {
    call.arguments.push_back(draw_argument(rng, family, 0.3));
  }
  return call;
}

// pick one signature string of the motif, with a noisy suffix glued onto the
// final path component so raw-token pipelines see a long tail of distinct
// words while n-gram similarity still matches the shared stem
void add_signature_args(ApiCall& call, const MotifSpec& motif, Rng& rng) {
  if (!motif.dll_names.empty()) {
    std::string base = motif.dll_names[rng.below(motif.dll_names.size())];
    std::string value = base.substr(0, base.size() - 4) + hex_suffix(rng) + ".dll";
    call.arguments.push_back(make_argument("ModuleName", ArgValue::str(value)));
  }
  if (!motif.file_paths.empty()) {
    std::string value = motif.file_paths[rng.below(motif.file_paths.size())] +
                        hex_suffix(rng) + ".bin";
    call.arguments.push_back(make_argument("FileName", ArgValue::str(value)));
  }
  if (!motif.registry_keys.empty()) {
    std::string value = motif.registry_keys[rng.below(motif.registry_keys.size())] +
                        hex_suffix(rng);
    call.arguments.push_back(make_argument("KeyName", ArgValue::str(value)));
  }
  if (!motif.urls.empty()) {
    std::string value = motif.urls[rng.below(motif.urls.size())] +
                        hex_suffix(rng);
    call.arguments.push_back(make_argument("ObjectName", ArgValue::str(value)));
  }
  for (const auto& [name, value] : motif.integers) {
    if (rng.next_unit() < motif.integer_probability) {
      call.arguments.push_back(make_argument(name, ArgValue::integer(value)));
    }
  }
  call.arguments.push_back(make_argument(
      "ModuleHandle", ArgValue::vaddr(draw_address(rng, motif.kernel_address_bias))));
}

}  // namespace

SynthCorpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  SynthCorpus corpus;

  YearMonth global_first{9999, 12}, global_last{0, 1};
  for (const FamilySpec& f : spec.families) {
    global_first = std::min(global_first, f.first_month);
    global_last = std::max(global_last, f.last_month);
  }

  auto emit_sample = [&](const FamilySpec& family, const std::string& label,
                         YearMonth month, int index) {
    char id_buf[160];
    std::snprintf(id_buf, sizeof(id_buf), "%s-%s-%04d", label.c_str(),
                  month.str().c_str(), index);
    std::string sample_id = id_buf;
    Rng rng(splitmix64(spec.seed ^ fnv1a64(sample_id)));

    Report report;
    report.sample_id = sample_id;
    report.label = label;
    report.month = month;

    int length = spec.min_calls +
                 static_cast<int>(rng.below(
                     static_cast<std::uint64_t>(spec.max_calls - spec.min_calls + 1)));
    report.calls.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) {
      report.calls.push_back(background_call(rng, family));
    }

    // motif injection at fixed slots, gated by strength
    if (!family.motifs.empty() && family.motif_strength > 0.0) {
      int slot_index = 0;
      for (int pos = 0; pos + 3 <= length; pos += spec.motif_slot_stride) {
        if (rng.next_unit() < family.motif_strength) {
          const MotifSpec& motif =
              family.motifs[static_cast<std::size_t>(slot_index) %
                            family.motifs.size()];
          for (std::size_t k = 0; k < motif.apis.size(); ++k) {
            int target = pos + static_cast<int>(k);
            if (target >= length) break;
            ApiCall call;
            if (motif.api_noise > 0.0 && rng.next_unit() < motif.api_noise) {
              const auto& apis = windows_api_names();
              call.api = apis[rng.below(apis.size())];
            } else {
              call.api = motif.apis[k];
            }
            call.arguments.push_back(draw_argument(rng, family, 0.3));
            add_signature_args(call, motif, rng);
            report.calls[static_cast<std::size_t>(target)] = std::move(call);
          }
        }
        ++slot_index;
      }
    }

    corpus.manifest.push_back({sample_id, label, month});
    corpus.reports.push_back(std::move(report));
  };

  for (const FamilySpec& family : spec.families) {
    for (YearMonth month : month_range(family.first_month, family.last_month)) {
      for (int i = 0; i < family.samples_per_month; ++i) {
        emit_sample(family, family.name, month, i);
      }
    }
  }

  if (spec.goodware_count > 0) {
    if (spec.families.empty()) {
      throw ConfigError("corpus spec: goodware needs a family month span");
    }
    FamilySpec goodware;
    goodware.name = spec.goodware_label;
    goodware.motif_strength = 0.0;
    std::vector<YearMonth> months = month_range(global_first, global_last);
    for (int i = 0; i < spec.goodware_count; ++i) {
      YearMonth month = months[static_cast<std::size_t>(i) % months.size()];
      emit_sample(goodware, spec.goodware_label, month, i);
    }
  }

  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  for (const Report& report : corpus.reports) {
    std::ofstream out(dir / (report.sample_id + ".json"), std::ios::binary);
    if (!out) {
      throw ConfigError("cannot write report " +
                        (dir / (report.sample_id + ".json")).string());
    }
    out << serialize_report(report) << '\n';
  }
  write_manifest(dir / "manifest.csv", corpus.manifest);
}

namespace {

json month_to_json(const YearMonth& m) { return m.str(); }

MotifSpec motif_from_json(const json& doc) {
  MotifSpec motif;
  motif.apis = doc.at("apis").get<std::vector<std::string>>();
  motif.dll_names = doc.value("dll_names", std::vector<std::string>{});
  motif.file_paths = doc.value("file_paths", std::vector<std::string>{});
  motif.registry_keys = doc.value("registry_keys", std::vector<std::string>{});
  motif.urls = doc.value("urls", std::vector<std::string>{});
  for (const json& entry : doc.value("integers", json::array())) {
    motif.integers.emplace_back(entry.at("name").get<std::string>(),
                                entry.at("value").get<std::int64_t>());
  }
  motif.integer_probability = doc.value("integer_probability", 1.0);
  motif.kernel_address_bias = doc.value("kernel_address_bias", 0.5);
  motif.api_noise = doc.value("api_noise", 0.0);
  return motif;
}

json motif_to_json(const MotifSpec& motif) {
  json integers = json::array();
  for (const auto& [name, value] : motif.integers) {
    integers.push_back(json{{"name", name}, {"value", value}});
  }
  return json{{"apis", motif.apis},
              {"dll_names", motif.dll_names},
              {"file_paths", motif.file_paths},
              {"registry_keys", motif.registry_keys},
              {"urls", motif.urls},
              {"integers", std::move(integers)},
              {"integer_probability", motif.integer_probability},
              {"kernel_address_bias", motif.kernel_address_bias},
              {"api_noise", motif.api_noise}};
}

}  // namespace

CorpusSpec load_corpus_spec(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus spec " + json_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }

  CorpusSpec spec;
  spec.goodware_count = doc.value("goodware_count", 0);
  spec.goodware_label = doc.value("goodware_label", "goodware");
  spec.min_calls = doc.value("min_calls", 30);
  spec.max_calls = doc.value("max_calls", 60);
  spec.motif_slot_stride = doc.value("motif_slot_stride", 8);
  spec.seed = doc.value("seed", std::uint64_t{1});
  for (const json& fam : doc.value("families", json::array())) {
    FamilySpec family;
    family.name = fam.at("name").get<std::string>();
    family.samples_per_month = fam.value("samples_per_month", 10);
    family.first_month = YearMonth::parse(fam.at("first_month").get<std::string>());
    family.last_month = YearMonth::parse(fam.at("last_month").get<std::string>());
    family.motif_strength = fam.value("motif_strength", 0.5);
    family.p_string = fam.value("p_string", 0.4);
    family.p_integer = fam.value("p_integer", 0.3);
    family.p_vaddr = fam.value("p_vaddr", 0.3);
    for (const json& m : fam.value("motifs", json::array())) {
      family.motifs.push_back(motif_from_json(m));
    }
    spec.families.push_back(std::move(family));
  }
  spec.validate();
  return spec;
}

void save_corpus_spec(const std::filesystem::path& json_path,
                      const CorpusSpec& spec) {
  json families = json::array();
  for (const FamilySpec& f : spec.families) {
    json motifs = json::array();
    for (const MotifSpec& m : f.motifs) motifs.push_back(motif_to_json(m));
    families.push_back(json{{"name", f.name},
                            {"samples_per_month", f.samples_per_month},
                            {"first_month", month_to_json(f.first_month)},
                            {"last_month", month_to_json(f.last_month)},
                            {"motif_strength", f.motif_strength},
                            {"p_string", f.p_string},
                            {"p_integer", f.p_integer},
                            {"p_vaddr", f.p_vaddr},
                            {"motifs", std::move(motifs)}});
  }
  json doc{{"families", std::move(families)},
           {"goodware_count", spec.goodware_count},
           {"goodware_label", spec.goodware_label},
           {"min_calls", spec.min_calls},
           {"max_calls", spec.max_calls},
           {"motif_slot_stride", spec.motif_slot_stride},
           {"seed", spec.seed}};
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw ConfigError("cannot write corpus spec " + json_path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace apifeat
