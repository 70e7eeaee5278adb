#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "apifeat/bpe.hpp"

namespace apifeat {

// Turns raw report JSON text into a word stream: JSON structure characters
// (brackets, braces, colons, commas, quotes) and path separators become
// single spaces, runs of whitespace collapse. Case is preserved here; the
// pipeline lowercases the stream before vocabulary work.
std::string clean_text(std::string_view report_json);

std::string to_lower_ascii(std::string_view s);

enum class TokenizerMethod { Whitespace, WordPunct, Bpe };

TokenizerMethod tokenizer_from_name(const std::string& name);
const char* to_string(TokenizerMethod method);

// whitespace: split on spaces/tabs/newlines. wordpunct: additionally split
// runs of punctuation into their own tokens. bpe: whitespace split, then
// merge rules applied within each token (merges required, ConfigError
// otherwise).
std::vector<std::string> tokenize(std::string_view stream, TokenizerMethod method,
                                  const BpeMerges* merges = nullptr);

// Drops the JSON key words (api, name, value, arguments, calls) from a
// cleaned word stream; used by the optional strip-keys pipeline toggle.
std::vector<std::string> strip_json_keys(std::vector<std::string> words);

}  // namespace apifeat
