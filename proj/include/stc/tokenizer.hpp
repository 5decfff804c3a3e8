#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stc {

/// Splits text into tokens. Implementations must be deterministic and never
/// emit empty tokens.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
};

/// Lowercases and splits UTF-8 text on anything that is not a letter or digit.
/// Letters outside ASCII (Hangul, CJK, accented Latin, ...) count as word
/// characters; common Unicode punctuation and symbol blocks are separators.
/// Invalid UTF-8 bytes are treated as separators.
class UnicodeWordTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

inline std::vector<std::string> tokenize(std::string_view text) {
  return default_tokenizer().tokenize(text);
}

}  // namespace stc
