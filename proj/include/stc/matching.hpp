#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stc/corpus.hpp"
#include "stc/tfidf.hpp"
#include "stc/tokenizer.hpp"

namespace stc {

enum class MatchField { Title, TitleBody };

struct Candidate {
  std::string response_text;
  std::vector<float> reply_vec;
  std::string post_id;
  std::uint32_t reply_index = 0;
  std::int64_t net_score = 0;
  double match_score = 0.0;  // TF-IDF cosine of the query and the reply's post
};

/// Query q and its candidate replies C, in match order.
struct CandidateSet {
  std::string query_text;
  std::vector<float> query_vec;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> true_reply_index;  // training episodes only
  /// Set when no retrieved post shared a weighted term with the query and the
  /// dense retrieval order was kept.
  bool dense_order_fallback = false;

  std::size_t size() const noexcept { return candidates.size(); }
};

struct MatchOptions {
  std::size_t k2 = 10;   // posts kept after TF-IDF re-scoring
  std::size_t cap = 10;  // maximum number of candidates
  MatchField field = MatchField::Title;
  const Tokenizer* tokenizer = nullptr;  // default tokenizer when null

  void validate() const;
};

/// Supplies the reply embedding for (post_id, reply_index). May be empty, in
/// which case candidates carry no reply vector.
using ReplyVectorLookup =
    std::function<std::vector<float>(const std::string& post_id, std::uint32_t reply_index)>;

/// Re-scores the retrieved posts (given in dense order) by TF-IDF cosine with
/// the query, keeps the top k2 (stable on ties), then pools their replies in
/// post order and reply order and truncates to cap. When every score is zero
/// the first k2 posts in dense order are kept.
///
/// Throws std::invalid_argument for empty `retrieved` or zero k2/cap, and
/// Error for an unknown post id or a result with no candidates.
CandidateSet match_candidates(std::string_view query_text, std::span<const std::string> retrieved,
                              const Corpus& corpus, const TfIdfModel& tfidf,
                              const MatchOptions& options, const ReplyVectorLookup& reply_vectors = {});

/// The text of a post that takes part in TF-IDF matching.
std::string matching_text(const Post& post, MatchField field);

}  // namespace stc
