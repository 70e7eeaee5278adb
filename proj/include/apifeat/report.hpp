#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace apifeat {

// One typed argument value from a sandbox report. Exactly one alternative is
// active; VAddr comes only from hex-prefixed literals, Int only from decimal
// literals, everything else stays Str.
struct ArgValue {
  struct Str {
    std::string text;
    bool operator==(const Str&) const = default;
  };
  struct Int {
    std::int64_t value = 0;
    bool operator==(const Int&) const = default;
  };
  struct VAddr {
    std::uint64_t address = 0;
    bool operator==(const VAddr&) const = default;
  };

  std::variant<Str, Int, VAddr> v;

  bool is_str() const { return std::holds_alternative<Str>(v); }
  bool is_int() const { return std::holds_alternative<Int>(v); }
  bool is_vaddr() const { return std::holds_alternative<VAddr>(v); }

  const std::string& str() const { return std::get<Str>(v).text; }
  std::int64_t int_value() const { return std::get<Int>(v).value; }
  std::uint64_t address() const { return std::get<VAddr>(v).address; }

  bool operator==(const ArgValue&) const = default;

  static ArgValue str(std::string s) { return {Str{std::move(s)}}; }
  static ArgValue integer(std::int64_t i) { return {Int{i}}; }
  static ArgValue vaddr(std::uint64_t a) { return {VAddr{a}}; }
};

struct Argument {
  std::string name;  // preserved verbatim from the report
  ArgValue value;
  // the literal value string as it appeared in the report; kept so reports
  // serialize back byte-faithfully and the NLP pipeline sees raw text
  std::string raw;

  bool operator==(const Argument&) const = default;
};

struct ApiCall {
  std::string api;
  std::vector<Argument> arguments;  // order preserved

  bool operator==(const ApiCall&) const = default;
};

// Year-month timestamp, e.g. "2019-05". Ordered chronologically.
struct YearMonth {
  int year = 0;
  int month = 0;  // 1..12

  auto operator<=>(const YearMonth&) const = default;

  std::string str() const;
  // Throws ParseError unless the input is YYYY-MM with month in 01..12.
  static YearMonth parse(const std::string& s);
};

struct Report {
  std::string sample_id;
  std::string label;  // family label; "goodware" for benign samples
  YearMonth month;
  std::vector<ApiCall> calls;
  bool empty_calls_warning = false;  // empty call list is flagged, not rejected

  bool operator==(const Report&) const = default;
};

// Classifies a literal value string into one of the three ArgValue variants.
// Total and deterministic: 0x + 1..16 hex digits -> VAddr, optional-sign
// decimal -> Int, anything else (including out-of-range literals) -> Str.
ArgValue classify_arg_value(const std::string& raw);

struct TypeProportions {
  double api_name = 0.0;
  double string = 0.0;
  double integer = 0.0;
  double vaddr = 0.0;
};

// Corpus-level unit counts: one unit per call for the API name, one unit per
// argument by its value type. Fractions sum to 1. Throws EmptyCorpusError on
// an empty corpus (a corpus with zero total units also counts as empty).
TypeProportions type_proportions(const std::vector<Report>& corpus);

// Same counting rule restricted to the first max_calls calls of each report;
// used by the covariate-shift profile.
TypeProportions type_proportions_truncated(const std::vector<Report>& corpus,
                                           std::size_t max_calls);

// Keeps the first min(limit, size) calls, order untouched.
Report truncate_calls(const Report& report, std::size_t limit);

}  // namespace apifeat
