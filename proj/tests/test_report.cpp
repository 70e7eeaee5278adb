#include <doctest.h>

#include "apifeat/errors.hpp"
#include "apifeat/report.hpp"
#include "apifeat/report_io.hpp"

using namespace apifeat;

namespace {

const char* kFig4Record = R"({
  "calls": [{
    "api": "LdrGetProcedureAddress",
    "arguments": [
      {"name": "ModuleName", "value": "ADVAPI32.dll"},
      {"name": "ModuleHandle", "value": "0x76520000"},
      {"name": "FunctionName", "value": "CryptDeriveKey"},
      {"name": "Ordinal", "value": "0"},
      {"name": "FunctionAddress", "value": "0x76563464"}
    ]
  }]
})";

}  // namespace

TEST_CASE("parse_report handles a realistic loader record") {
  Report r = parse_report(kFig4Record);
  REQUIRE(r.calls.size() == 1);
  const ApiCall& call = r.calls[0];
  CHECK(call.api == "LdrGetProcedureAddress");
  REQUIRE(call.arguments.size() == 5);
  CHECK(call.arguments[0].name == "ModuleName");
  CHECK(call.arguments[0].value == ArgValue::str("ADVAPI32.dll"));
  CHECK(call.arguments[1].value == ArgValue::vaddr(0x76520000));
  CHECK(call.arguments[3].value == ArgValue::integer(0));
  CHECK(call.arguments[4].value == ArgValue::vaddr(0x76563464));
  CHECK_FALSE(r.empty_calls_warning);
}

TEST_CASE("parse_report flags an empty call list instead of rejecting it") {
  Report r = parse_report(R"({"calls": []})");
  CHECK(r.calls.empty());
  CHECK(r.empty_calls_warning);
}

TEST_CASE("parse_report reports the offset of truncated JSON") {
  std::string truncated(kFig4Record, 40);
  CHECK_THROWS_AS(parse_report(truncated), ParseError);
  try {
    parse_report(truncated);
  } catch (const ParseError& e) {
    CHECK(e.byte_offset() > 0);
    CHECK(e.byte_offset() <= truncated.size());
  }
}

TEST_CASE("parse_report requires the api key") {
  CHECK_THROWS_AS(parse_report(R"({"calls": [{"arguments": []}]})"), SchemaError);
  try {
    parse_report(R"({"calls": [{"arguments": []}]})");
  } catch (const SchemaError& e) {
    CHECK(e.path() == "/calls/0/api");
  }
}

TEST_CASE("parse_report ignores unknown fields") {
  Report r = parse_report(
      R"({"calls": [{"api": "NtClose", "category": "system", "arguments": []}],
          "info": {"duration": 120}})");
  REQUIRE(r.calls.size() == 1);
  CHECK(r.calls[0].api == "NtClose");
}

TEST_CASE("classify_arg_value partitions by surface syntax") {
  CHECK(classify_arg_value("0x76563464") == ArgValue::vaddr(0x76563464));
  CHECK(classify_arg_value("0XDEADBEEF") == ArgValue::vaddr(0xdeadbeefull));
  CHECK(classify_arg_value("0") == ArgValue::integer(0));
  CHECK(classify_arg_value("-42") == ArgValue::integer(-42));
  CHECK(classify_arg_value("+7") == ArgValue::integer(7));
  CHECK(classify_arg_value("IMM32.DLL") == ArgValue::str("IMM32.DLL"));
  CHECK(classify_arg_value("") == ArgValue::str(""));
  // 17 hex digits exceed the 64-bit address ceiling
  CHECK(classify_arg_value("0x12345678901234567").is_str());
  CHECK(classify_arg_value("0x").is_str());
  CHECK(classify_arg_value("0xg1").is_str());
  // decimal overflow falls back to string
  CHECK(classify_arg_value("99999999999999999999999").is_str());
  CHECK(classify_arg_value("12a").is_str());
}

TEST_CASE("type_proportions counts one unit per call plus one per argument") {
  Report r = parse_report(kFig4Record);
  r.sample_id = "s";
  r.month = YearMonth{2019, 1};

  TypeProportions p = type_proportions({r});
  CHECK(p.api_name == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(p.string == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(p.integer == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(p.vaddr == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(p.api_name + p.string + p.integer + p.vaddr == doctest::Approx(1.0).epsilon(1e-9));

  SUBCASE("single call with no arguments") {
    Report bare;
    bare.calls.push_back(ApiCall{"NtClose", {}});
    TypeProportions q = type_proportions({bare});
    CHECK(q.api_name == 1.0);
    CHECK(q.string == 0.0);
    CHECK(q.integer == 0.0);
    CHECK(q.vaddr == 0.0);
  }

  SUBCASE("invariant under duplication") {
    TypeProportions q = type_proportions({r, r});
    CHECK(q.api_name == doctest::Approx(p.api_name).epsilon(1e-12));
    CHECK(q.vaddr == doctest::Approx(p.vaddr).epsilon(1e-12));
  }

  SUBCASE("empty corpus is an error") {
    CHECK_THROWS_AS(type_proportions({}), EmptyCorpusError);
  }
}

TEST_CASE("truncate_calls keeps a prefix and never reorders") {
  Report r;
  for (int i = 0; i < 2000; ++i) {
    r.calls.push_back(ApiCall{"Api" + std::to_string(i), {}});
  }
  Report cut = truncate_calls(r, 1024);
  REQUIRE(cut.calls.size() == 1024);
  CHECK(cut.calls.front().api == "Api0");
  CHECK(cut.calls.back().api == "Api1023");

  Report small;
  for (int i = 0; i < 10; ++i) small.calls.push_back(ApiCall{"X", {}});
  CHECK(truncate_calls(small, 1024).calls.size() == 10);

  Report one;
  one.calls.push_back(ApiCall{"X", {}});
  CHECK(truncate_calls(one, 1).calls.size() == 1);
}

TEST_CASE("report serialization round-trips") {
  Report a = parse_report(kFig4Record);
  Report b = parse_report(serialize_report(a));
  CHECK(a == b);
  // idempotence: a second cycle changes nothing
  CHECK(parse_report(serialize_report(b)) == b);
}

TEST_CASE("report store round-trips labels and months") {
  Report r = parse_report(kFig4Record);
  r.sample_id = "sample-1";
  r.label = "emotet";
  r.month = YearMonth{2019, 3};

  auto dir = std::filesystem::temp_directory_path() / "apifeat_store_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "reports.jsonl";
  save_report_store(path, {r});
  std::vector<Report> loaded = load_report_store(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0] == r);
  std::filesystem::remove_all(dir);
}

TEST_CASE("year-month parsing validates format and range") {
  YearMonth m = YearMonth::parse("2019-05");
  CHECK(m.year == 2019);
  CHECK(m.month == 5);
  CHECK(m.str() == "2019-05");
  CHECK(YearMonth{2019, 4} < YearMonth{2019, 5});
  CHECK(YearMonth{2018, 12} < YearMonth{2019, 1});
  CHECK_THROWS_AS(YearMonth::parse("2019-13"), ParseError);
  CHECK_THROWS_AS(YearMonth::parse("2019-00"), ParseError);
  CHECK_THROWS_AS(YearMonth::parse("201905"), ParseError);
  CHECK_THROWS_AS(YearMonth::parse("2019-5"), ParseError);
}
