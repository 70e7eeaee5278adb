#include <doctest.h>

#include "apifeat/errors.hpp"
#include "apifeat/text.hpp"

using namespace apifeat;

TEST_CASE("clean_text strips structure characters into single spaces") {
  CHECK(clean_text(R"({"api":"NtClose"})") == "api NtClose");
  CHECK(clean_text("C:/Windows/System32") == "C Windows System32");
  CHECK(clean_text("") == "");
  CHECK(clean_text("[{(:')}]\\,/\"") == "");
  CHECK(clean_text("a   b\t\tc") == "a b c");
  CHECK(clean_text("path\\to\\file.txt") == "path to file.txt");
  // case is preserved at this stage
  CHECK(clean_text("LdrGetProcedureAddress") == "LdrGetProcedureAddress");
}

TEST_CASE("whitespace tokenizer splits on spaces, tabs and newlines") {
  auto tokens = tokenize("a b\tc\nd", TokenizerMethod::Whitespace);
  CHECK(tokens == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(tokenize("", TokenizerMethod::Whitespace).empty());
  CHECK(tokenize("  x  ", TokenizerMethod::Whitespace) ==
        std::vector<std::string>{"x"});
}

TEST_CASE("wordpunct tokenizer splits punctuation runs into tokens") {
  CHECK(tokenize("IMM32.DLL", TokenizerMethod::WordPunct) ==
        std::vector<std::string>{"IMM32", ".", "DLL"});
  CHECK(tokenize("a-b--c", TokenizerMethod::WordPunct) ==
        std::vector<std::string>{"a", "-", "b", "--", "c"});
  CHECK(tokenize("0x76520000", TokenizerMethod::WordPunct) ==
        std::vector<std::string>{"0x76520000"});  // no punctuation inside
  CHECK(tokenize("name: value", TokenizerMethod::WordPunct) ==
        std::vector<std::string>{"name", ":", "value"});
}

TEST_CASE("bpe tokenizer applies merges within token boundaries") {
  BpeMerges merges;
  merges.rules = {{"a", "a"}, {"aa", "a"}};
  CHECK(tokenize("aaab", TokenizerMethod::Bpe, &merges) ==
        std::vector<std::string>{"aaa", "b"});
  CHECK(tokenize("aa ab", TokenizerMethod::Bpe, &merges) ==
        std::vector<std::string>{"aa", "a", "b"});

  BpeMerges empty;
  CHECK(tokenize("abc de", TokenizerMethod::Bpe, &empty) ==
        std::vector<std::string>{"a", "b", "c", "d", "e"});

  CHECK_THROWS_AS(tokenize("x", TokenizerMethod::Bpe, nullptr), ConfigError);
}

TEST_CASE("lowercasing and key stripping helpers") {
  CHECK(to_lower_ascii("LdrGetProcedureAddress") == "ldrgetprocedureaddress");
  CHECK(to_lower_ascii("0xFF") == "0xff");

  std::vector<std::string> words = {"calls", "api",   "NtClose", "arguments",
                                    "name",  "Size",  "value",   "21"};
  CHECK(strip_json_keys(words) ==
        std::vector<std::string>{"NtClose", "Size", "21"});
}

TEST_CASE("tokenizer names parse") {
  CHECK(tokenizer_from_name("whitespace") == TokenizerMethod::Whitespace);
  CHECK(tokenizer_from_name("wordpunct") == TokenizerMethod::WordPunct);
  CHECK(tokenizer_from_name("bpe") == TokenizerMethod::Bpe);
  CHECK_THROWS_AS(tokenizer_from_name("unigram"), ConfigError);
}
