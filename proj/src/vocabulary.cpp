#include "stc/vocabulary.hpp"

#include <algorithm>
#include <stdexcept>

namespace stc {

Vocabulary Vocabulary::build(std::span<const std::string> tokens, std::uint32_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return from_counts(counts, min_count);
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> docs,
                             std::uint32_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs) {
    for (const auto& t : doc) ++counts[t];
  }
  return from_counts(counts, min_count);
}

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, std::uint64_t>& counts,
                                   std::uint32_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (const auto& [token, n] : counts) {
    if (n >= min_count) entries.emplace_back(token, n);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return from_entries(std::move(entries), min_count);
}

Vocabulary Vocabulary::from_entries(std::vector<std::pair<std::string, std::uint64_t>> entries,
                                    std::uint32_t min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.tokens_.reserve(entries.size());
  vocab.frequencies_.reserve(entries.size());
  for (auto& [token, n] : entries) {
    if (token.empty()) throw std::invalid_argument("vocabulary token is empty");
    if (n < min_count) {
      throw std::invalid_argument("token '" + token + "' has frequency below min_count");
    }
    const auto id = static_cast<std::uint32_t>(vocab.tokens_.size());
    if (!vocab.index_.emplace(token, id).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + token + "'");
    }
    vocab.tokens_.push_back(std::move(token));
    vocab.frequencies_.push_back(n);
  }
  return vocab;
}

std::uint32_t Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknownId : it->second;
}

std::vector<std::uint32_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto id = lookup(t); id != kUnknownId) ids.push_back(id);
  }
  return ids;
}

}  // namespace stc
