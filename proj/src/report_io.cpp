#include "apifeat/report_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "apifeat/errors.hpp"

namespace apifeat {

using nlohmann::json;

namespace {

json parse_json(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

Report report_from_json(const json& doc) {
  Report report;
  if (!doc.is_object()) throw SchemaError("report is not an object", "/");
  auto calls_it = doc.find("calls");
  if (calls_it == doc.end() || !calls_it->is_array()) {
    throw SchemaError("missing 'calls' array", "/calls");
  }
  std::size_t call_idx = 0;
  for (const json& call_json : *calls_it) {
    std::string path = "/calls/" + std::to_string(call_idx);
    if (!call_json.is_object()) throw SchemaError("call is not an object", path);
    auto api_it = call_json.find("api");
    if (api_it == call_json.end() || !api_it->is_string()) {
      throw SchemaError("missing 'api' key", path + "/api");
    }
    ApiCall call;
    call.api = api_it->get<std::string>();
    if (call.api.empty()) throw SchemaError("empty 'api' name", path + "/api");

    auto args_it = call_json.find("arguments");
    if (args_it != call_json.end()) {
      if (!args_it->is_array()) {
        throw SchemaError("'arguments' is not an array", path + "/arguments");
      }
      std::size_t arg_idx = 0;
      for (const json& arg_json : *args_it) {
        std::string arg_path = path + "/arguments/" + std::to_string(arg_idx);
        if (!arg_json.is_object() || !arg_json.contains("name") ||
            !arg_json["name"].is_string()) {
          throw SchemaError("missing argument 'name'", arg_path + "/name");
        }
        Argument arg;
        arg.name = arg_json["name"].get<std::string>();
        if (arg.name.empty()) {
          throw SchemaError("empty argument name", arg_path + "/name");
        }
        // values arrive as strings in CAPE-style reports; tolerate bare
        // numbers by rendering them back to their literal form
        if (arg_json.contains("value")) {
          const json& v = arg_json["value"];
          arg.raw = v.is_string() ? v.get<std::string>() : v.dump();
        }
        arg.value = classify_arg_value(arg.raw);
        call.arguments.push_back(std::move(arg));
        ++arg_idx;
      }
    }
    report.calls.push_back(std::move(call));
    ++call_idx;
  }
  report.empty_calls_warning = report.calls.empty();
  return report;
}

json calls_to_json(const Report& report) {
  json calls = json::array();
  for (const ApiCall& call : report.calls) {
    json args = json::array();
    for (const Argument& a : call.arguments) {
      args.push_back(json{{"name", a.name}, {"value", a.raw}});
    }
    calls.push_back(json{{"api", call.api}, {"arguments", std::move(args)}});
  }
  return calls;
}

}  // namespace

Report parse_report(const std::string& raw) {
  return report_from_json(parse_json(raw));
}

std::string serialize_report(const Report& report) {
  return json{{"calls", calls_to_json(report)}}.dump();
}

std::string render_arg_value(const ArgValue& value) {
  if (value.is_str()) return value.str();
  if (value.is_int()) return std::to_string(value.int_value());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%08llx",
                static_cast<unsigned long long>(value.address()));
  return buf;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open manifest " + csv_path.string(), 0);

  std::vector<ManifestRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != "sample_id,label,month") {
        throw ParseError("manifest header must be sample_id,label,month", 0);
      }
      continue;
    }
    std::istringstream ss(line);
    ManifestRow row;
    std::string month;
    if (!std::getline(ss, row.sample_id, ',') ||
        !std::getline(ss, row.label, ',') || !std::getline(ss, month)) {
      throw ParseError("bad manifest row: " + line, 0);
    }
    row.month = YearMonth::parse(month);
    rows.push_back(std::move(row));
  }
  if (first) throw ParseError("empty manifest " + csv_path.string(), 0);
  return rows;
}

void write_manifest(const std::filesystem::path& csv_path,
                    const std::vector<ManifestRow>& rows) {
  std::ofstream out(csv_path, std::ios::binary);
  out << "sample_id,label,month\n";
  for (const ManifestRow& row : rows) {
    out << row.sample_id << ',' << row.label << ',' << row.month.str() << '\n';
  }
}

std::vector<Report> load_corpus(const std::filesystem::path& corpus_dir,
                                const std::filesystem::path& manifest_csv) {
  std::vector<Report> reports;
  for (const ManifestRow& row : read_manifest(manifest_csv)) {
    std::filesystem::path file = corpus_dir / (row.sample_id + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      throw SchemaError("manifest lists sample without report file",
                        file.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    Report report = parse_report(buf.str());
    report.sample_id = row.sample_id;
    report.label = row.label;
    report.month = row.month;
    reports.push_back(std::move(report));
  }
  return reports;
}

void save_report_store(const std::filesystem::path& path,
                       const std::vector<Report>& reports) {
  std::ofstream out(path, std::ios::binary);
  out << json{{"format", "apifeat.reports"}, {"version", 1}}.dump() << '\n';
  for (const Report& r : reports) {
    json line{{"sample_id", r.sample_id},
              {"label", r.label},
              {"month", r.month.str()},
              {"calls", calls_to_json(r)}};
    out << line.dump() << '\n';
  }
}

std::vector<Report> load_report_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open report store " + path.string(), 0);

  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("empty report store " + path.string(), 0);
  }
  json header = parse_json(line);
  if (header.value("format", "") != "apifeat.reports" ||
      header.value("version", 0) != 1) {
    throw SchemaError("unsupported report store header", path.string());
  }

  std::vector<Report> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = parse_json(line);
    Report r = report_from_json(doc);
    r.sample_id = doc.value("sample_id", "");
    r.label = doc.value("label", "");
    r.month = YearMonth::parse(doc.value("month", ""));
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace apifeat
