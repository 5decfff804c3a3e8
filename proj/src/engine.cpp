#include "stc/engine.hpp"

#include <random>

#include "stc/error.hpp"
#include "stc/tokenizer.hpp"

namespace stc {

using nlohmann::json;

RankedCandidates rank_candidates(std::string_view utterance, const EngineBundle& bundle) {
  bundle.require_servable();
  const auto tokens = tokenize(utterance);
  if (tokens.empty()) throw InvalidQuery("empty utterance");

  const auto& cfg = bundle.config;
  const MatchOptions match{cfg.k2, cfg.cap, cfg.match_field, nullptr};
  RankedCandidates out;
  std::vector<float> query_vec;
  try {
    query_vec = bundle.title_model->infer(tokens);
  } catch (const NoKnownTokens&) {
    out.fallback = true;
  }

  if (!out.fallback) {
    out.retrieved = bundle.index->retrieve(query_vec, cfg.k1);
    std::vector<std::string> ids;
    ids.reserve(out.retrieved.size());
    for (const auto& hit : out.retrieved) ids.push_back(hit.post_id);
    out.set = match_candidates(utterance, ids, bundle.corpus, *bundle.tfidf, match,
                               bundle.reply_lookup());
  } else {
    std::vector<std::string> ids;
    ids.reserve(bundle.corpus.size());
    for (const auto& post : bundle.corpus.posts()) ids.push_back(post.post_id);
    out.set = match_candidates(utterance, ids, bundle.corpus, *bundle.tfidf, match,
                               bundle.reply_lookup());
    query_vec.assign(bundle.title_model->dim(), 0.0f);
  }
  out.set.query_vec = std::move(query_vec);

  std::vector<std::vector<float>> replies;
  replies.reserve(out.set.size());
  for (const auto& c : out.set.candidates) replies.push_back(c.reply_vec);
  const auto g = candidate_scores(out.set.query_vec, replies, *bundle.ranker);
  out.probabilities = response_distribution(g);
  return out;
}

ChatResponse answer(std::string_view utterance, const EngineBundle& bundle,
                    const AnswerOptions& options) {
  auto ranked = rank_candidates(utterance, bundle);

  ChatResponse response;
  auto& trace = response.trace;
  trace.policy = options.policy.value_or(bundle.config.policy);
  trace.temperature = options.temperature.value_or(bundle.config.temperature);
  if (options.seed) {
    trace.seed = *options.seed;
  } else {
    std::random_device rd;
    trace.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  trace.fallback = ranked.fallback;
  trace.selected_index =
      select_response(ranked.probabilities, trace.policy, trace.temperature, trace.seed);
  trace.retrieved = std::move(ranked.retrieved);
  for (std::size_t i = 0; i < ranked.set.size(); ++i) {
    auto& c = ranked.set.candidates[i];
    trace.candidates.push_back(
        {c.post_id, c.reply_index, c.match_score, ranked.probabilities[i], std::move(c.response_text)});
  }
  response.response_text = trace.candidates[trace.selected_index].response_text;
  return response;
}

json to_json(const ChatTrace& trace) {
  json retrieved = json::array();
  for (const auto& hit : trace.retrieved) {
    retrieved.push_back({{"post_id", hit.post_id}, {"similarity", hit.similarity}});
  }
  json candidates = json::array();
  for (const auto& c : trace.candidates) {
    candidates.push_back({{"post_id", c.post_id},
                          {"reply_index", c.reply_index},
                          {"match_score", c.match_score},
                          {"p", c.probability},
                          {"response_text", c.response_text}});
  }
  return {{"retrieved", std::move(retrieved)},
          {"candidates", std::move(candidates)},
          {"selected_index", trace.selected_index},
          {"policy", to_string(trace.policy)},
          {"temperature", trace.temperature},
          {"seed", trace.seed},
          {"fallback", trace.fallback}};
}

json to_json(const ChatResponse& response) {
  return {{"response_text", response.response_text}, {"trace", to_json(response.trace)}};
}

}  // namespace stc
