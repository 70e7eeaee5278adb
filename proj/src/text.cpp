#include "apifeat/text.hpp"

#include <cctype>

#include "apifeat/errors.hpp"

namespace apifeat {

namespace {

bool is_stripped_char(char c) {
  switch (c) {
    case '[': case ']': case '{': case '}': case '(': case ')':
    case ':': case ',': case '\'': case '"': case '/': case '\\':
      return true;
    default:
      return false;
  }
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string clean_text(std::string_view report_json) {
  std::string out;
  out.reserve(report_json.size());
  bool pending_space = false;
  for (char c : report_json) {
    if (is_stripped_char(c) || is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

TokenizerMethod tokenizer_from_name(const std::string& name) {
  if (name == "whitespace") return TokenizerMethod::Whitespace;
  if (name == "wordpunct") return TokenizerMethod::WordPunct;
  if (name == "bpe") return TokenizerMethod::Bpe;
  throw ConfigError("unknown tokenizer '" + name + "'");
}

const char* to_string(TokenizerMethod method) {
  switch (method) {
    case TokenizerMethod::Whitespace: return "whitespace";
    case TokenizerMethod::WordPunct: return "wordpunct";
    case TokenizerMethod::Bpe: return "bpe";
  }
  return "whitespace";
}

namespace {

std::vector<std::string> split_whitespace(std::string_view stream) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < stream.size()) {
    while (i < stream.size() && is_space(stream[i])) ++i;
    std::size_t start = i;
    while (i < stream.size() && !is_space(stream[i])) ++i;
    if (i > start) tokens.emplace_back(stream.substr(start, i - start));
  }
  return tokens;
}

// runs of word characters and runs of punctuation become separate tokens
std::vector<std::string> split_wordpunct(std::string_view stream) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < stream.size()) {
    if (is_space(stream[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    bool word = is_word_char(stream[i]);
    while (i < stream.size() && !is_space(stream[i]) &&
           is_word_char(stream[i]) == word) {
      ++i;
    }
    tokens.emplace_back(stream.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view stream, TokenizerMethod method,
                                  const BpeMerges* merges) {
  switch (method) {
    case TokenizerMethod::Whitespace:
      return split_whitespace(stream);
    case TokenizerMethod::WordPunct:
      return split_wordpunct(stream);
    case TokenizerMethod::Bpe: {
      if (!merges) throw ConfigError("bpe tokenizer requires trained merges");
      std::vector<std::string> out;
      for (const std::string& token : split_whitespace(stream)) {
        for (std::string& piece : apply_bpe(token, *merges)) {
          out.push_back(std::move(piece));
        }
      }
      return out;
    }
  }
  return {};
}

std::vector<std::string> strip_json_keys(std::vector<std::string> words) {
  auto is_key = [](const std::string& w) {
    return w == "api" || w == "name" || w == "value" || w == "arguments" ||
           w == "calls";
  };
  std::erase_if(words, is_key);
  return words;
}

}  // namespace apifeat
