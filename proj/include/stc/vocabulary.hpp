#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace stc {

/// Token to dense id mapping. Ids are assigned by descending frequency, ties
/// broken by byte order of the token, so a vocabulary is a pure function of
/// its token counts.
class Vocabulary {
 public:
  static constexpr std::uint32_t kUnknownId = std::numeric_limits<std::uint32_t>::max();

  Vocabulary() = default;

  /// Keeps exactly the tokens seen at least min_count times. min_count >= 1.
  static Vocabulary build(std::span<const std::string> tokens, std::uint32_t min_count);
  static Vocabulary build(std::span<const std::vector<std::string>> docs, std::uint32_t min_count);

  /// Rebuilds a vocabulary from (token, frequency) entries already in id order.
  static Vocabulary from_entries(std::vector<std::pair<std::string, std::uint64_t>> entries,
                                 std::uint32_t min_count);

  std::uint32_t lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return lookup(token) != kUnknownId; }

  /// Maps tokens to ids, dropping out-of-vocabulary tokens.
  std::vector<std::uint32_t> encode(std::span<const std::string> tokens) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::uint64_t frequency(std::uint32_t id) const { return frequencies_.at(id); }
  std::uint32_t min_count() const noexcept { return min_count_; }

 private:
  static Vocabulary from_counts(const std::unordered_map<std::string, std::uint64_t>& counts,
                                std::uint32_t min_count);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequencies_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint32_t min_count_ = 1;
};

}  // namespace stc
