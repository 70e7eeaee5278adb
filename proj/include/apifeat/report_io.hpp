#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "apifeat/report.hpp"

namespace apifeat {

// Parses one sandbox report in the external JSON schema
//   {"calls":[{"api":str,"arguments":[{"name":str,"value":str}]}]}
// Argument values are classified via classify_arg_value; call order equals
// file order. Malformed JSON throws ParseError with the byte offset, a
// missing "api" key throws SchemaError with the JSON path. Unknown fields
// are ignored. Label and month are not part of this schema; they come from
// the manifest (see load_corpus).
Report parse_report(const std::string& raw);

// Inverse of parse_report modulo whitespace: emits the external schema with
// each argument's original literal value string.
std::string serialize_report(const Report& report);

struct ManifestRow {
  std::string sample_id;
  std::string label;
  YearMonth month;
};

// Sidecar manifest CSV with header sample_id,label,month.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& csv_path);
void write_manifest(const std::filesystem::path& csv_path,
                    const std::vector<ManifestRow>& rows);

// Loads every manifest row's <sample_id>.json from corpus_dir. The manifest
// defines corpus membership; a listed sample without a report file is a
// SchemaError.
std::vector<Report> load_corpus(const std::filesystem::path& corpus_dir,
                                const std::filesystem::path& manifest_csv);

// Internal on-disk report store: JSON-lines, first line a header record
// {"format":"apifeat.reports","version":1}, then one report per line with
// sample_id, label, month and calls. Stable within a major version.
void save_report_store(const std::filesystem::path& path,
                       const std::vector<Report>& reports);
std::vector<Report> load_report_store(const std::filesystem::path& path);

// Renders an ArgValue back to its literal form: Int as decimal, VAddr as
// lowercase 0x hex, Str verbatim. Used when building arguments in code.
std::string render_arg_value(const ArgValue& value);

inline Argument make_argument(std::string name, ArgValue value) {
  std::string raw = render_arg_value(value);
  return Argument{std::move(name), std::move(value), std::move(raw)};
}

}  // namespace apifeat
