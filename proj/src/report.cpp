#include "apifeat/report.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "apifeat/errors.hpp"

namespace apifeat {

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

YearMonth YearMonth::parse(const std::string& s) {
  auto bad = [&] { throw ParseError("invalid year-month '" + s + "'", 0); };
  if (s.size() != 7 || s[4] != '-') bad();
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) bad();
  }
  YearMonth m;
  m.year = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
  m.month = (s[5] - '0') * 10 + (s[6] - '0');
  if (m.month < 1 || m.month > 12) bad();
  return m;
}

namespace {

bool is_hex_digit(char c) {
  return std::isxdigit(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

ArgValue classify_arg_value(const std::string& raw) {
  // Hex literal: case-insensitive 0x prefix, 1..16 hex digits. Longer
  // literals exceed the 64-bit address ceiling and stay strings.
  if (raw.size() >= 3 && raw[0] == '0' && (raw[1] == 'x' || raw[1] == 'X')) {
    std::size_t digits = raw.size() - 2;
    if (digits <= 16) {
      bool all_hex = true;
      for (std::size_t i = 2; i < raw.size(); ++i) {
        if (!is_hex_digit(raw[i])) {
          all_hex = false;
          break;
        }
      }
      if (all_hex) {
        std::uint64_t addr = 0;
        std::from_chars(raw.data() + 2, raw.data() + raw.size(), addr, 16);
        return ArgValue::vaddr(addr);
      }
    }
  }

  // Decimal literal with optional sign. Values outside int64 fall to Str.
  std::size_t start = (!raw.empty() && (raw[0] == '-' || raw[0] == '+')) ? 1 : 0;
  if (start < raw.size()) {
    bool all_dec = true;
    for (std::size_t i = start; i < raw.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
        all_dec = false;
        break;
      }
    }
    if (all_dec) {
      std::int64_t value = 0;
      const char* first = raw.data() + (raw[0] == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(first, raw.data() + raw.size(), value, 10);
      if (ec == std::errc() && ptr == raw.data() + raw.size()) {
        return ArgValue::integer(value);
      }
    }
  }

  return ArgValue::str(raw);
}

namespace {

TypeProportions proportions_impl(const std::vector<Report>& corpus,
                                 std::size_t max_calls) {
  if (corpus.empty()) throw EmptyCorpusError("type_proportions: empty corpus");

  std::uint64_t api = 0, str = 0, integer = 0, vaddr = 0;
  for (const Report& r : corpus) {
    std::size_t n = std::min(r.calls.size(), max_calls);
    for (std::size_t i = 0; i < n; ++i) {
      const ApiCall& call = r.calls[i];
      ++api;
      for (const Argument& a : call.arguments) {
        if (a.value.is_str()) {
          ++str;
        } else if (a.value.is_int()) {
          ++integer;
        } else {
          ++vaddr;
        }
      }
    }
  }

  std::uint64_t total = api + str + integer + vaddr;
  if (total == 0) throw EmptyCorpusError("type_proportions: corpus has no calls");

  TypeProportions p;
  p.api_name = static_cast<double>(api) / static_cast<double>(total);
  p.string = static_cast<double>(str) / static_cast<double>(total);
  p.integer = static_cast<double>(integer) / static_cast<double>(total);
  p.vaddr = static_cast<double>(vaddr) / static_cast<double>(total);
  return p;
}

}  // namespace

TypeProportions type_proportions(const std::vector<Report>& corpus) {
  return proportions_impl(corpus, static_cast<std::size_t>(-1));
}

TypeProportions type_proportions_truncated(const std::vector<Report>& corpus,
                                           std::size_t max_calls) {
  return proportions_impl(corpus, max_calls);
}

Report truncate_calls(const Report& report, std::size_t limit) {
  if (report.calls.size() <= limit) return report;
  Report out = report;
  out.calls.resize(limit);
  return out;
}

}  // namespace apifeat
