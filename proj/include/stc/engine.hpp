#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stc/bundle.hpp"

namespace stc {

struct CandidateTrace {
  std::string post_id;
  std::uint32_t reply_index = 0;
  double match_score = 0.0;
  double probability = 0.0;
  std::string response_text;
};

struct ChatTrace {
  std::vector<RetrievalHit> retrieved;
  std::vector<CandidateTrace> candidates;
  std::size_t selected_index = 0;
  SelectionPolicy policy = SelectionPolicy::Argmax;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Every query token was out of vocabulary; TF-IDF ran over the whole corpus.
  bool fallback = false;
};

struct ChatResponse {
  std::string response_text;
  ChatTrace trace;
};

/// Per-request overrides of the bundle's pipeline config.
struct AnswerOptions {
  std::optional<SelectionPolicy> policy;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;  // drawn at random when absent, reported in the trace
};

/// Output of the first three pipeline steps for one utterance, before selection.
struct RankedCandidates {
  std::vector<RetrievalHit> retrieved;
  CandidateSet set;
  std::vector<double> probabilities;
  bool fallback = false;
};

/// Retrieval, matching and scoring for an utterance. Throws InvalidQuery when
/// the utterance has no tokens.
RankedCandidates rank_candidates(std::string_view utterance, const EngineBundle& bundle);

/// Full pipeline. The served text is always a reply from the corpus.
ChatResponse answer(std::string_view utterance, const EngineBundle& bundle,
                    const AnswerOptions& options = {});

nlohmann::json to_json(const ChatTrace& trace);
nlohmann::json to_json(const ChatResponse& response);

}  // namespace stc
