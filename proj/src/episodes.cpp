#include "stc/episodes.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "stc/engine.hpp"
#include "stc/error.hpp"
#include "stc/tokenizer.hpp"

namespace stc {
namespace {

void require_training_inputs(const EngineBundle& bundle) {
  if (bundle.corpus.size() == 0) throw Error("train_ranker: empty corpus");
  if (!bundle.title_model || !bundle.reply_model || !bundle.tfidf) {
    throw Error("train_ranker: bundle has no embeddings; run train-embeddings first");
  }
  if (!bundle.index) throw Error("train_ranker: bundle has no index; run build-index first");
}

std::uint32_t best_reply(const Post& post) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < post.replies.size(); ++i) {
    if (post.replies[i].net_score() > post.replies[best].net_score()) best = i;
  }
  return best;
}

void force_true_reply(CandidateSet& set, const EngineBundle& bundle, const Post& post,
                      std::uint32_t reply, std::size_t cap) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& c = set.candidates[i];
    if (c.post_id == post.post_id && c.reply_index == reply) {
      set.true_reply_index = i;
      return;
    }
  }
  const Tokenizer& tok = default_tokenizer();
  Candidate c;
  c.response_text = post.replies[reply].text;
  c.reply_vec = bundle.reply_vector(post.post_id, reply);
  c.post_id = post.post_id;
  c.reply_index = reply;
  c.net_score = post.replies[reply].net_score();
  c.match_score = cosine(bundle.tfidf->vectorize(tok.tokenize(set.query_text)),
                         bundle.tfidf->vectorize(tok.tokenize(matching_text(post, bundle.config.match_field))));
  if (set.size() >= cap) set.candidates.pop_back();
  auto pos = std::find_if(set.candidates.begin(), set.candidates.end(),
                          [&](const Candidate& other) { return other.match_score < c.match_score; });
  const auto index = static_cast<std::size_t>(pos - set.candidates.begin());
  set.candidates.insert(pos, std::move(c));
  set.true_reply_index = index;
}

}  // namespace

std::vector<TrainingEpisode> assemble_episodes(const EngineBundle& bundle, TargetMode mode) {
  require_training_inputs(bundle);
  const auto& cfg = bundle.config;
  const MatchOptions match{cfg.k2, cfg.cap, cfg.match_field, nullptr};
  const auto& titles = *bundle.title_model;

  std::vector<TrainingEpisode> episodes;
  episodes.reserve(bundle.corpus.size());
  for (const auto& post : bundle.corpus.posts()) {
    const auto row = titles.doc_index(post.post_id);
    if (!row) throw Error("train_ranker: title model has no vector for '" + post.post_id + "'");
    const auto q = titles.doc_vector(*row);
    const auto hits = bundle.index->retrieve(q, cfg.k1);
    std::vector<std::string> ids;
    ids.reserve(hits.size());
    for (const auto& h : hits) ids.push_back(h.post_id);

    CandidateSet set = match_candidates(post.title, ids, bundle.corpus, *bundle.tfidf, match,
                                        bundle.reply_lookup());
    set.query_vec.assign(q.begin(), q.end());
    if (mode == TargetMode::OneHot) force_true_reply(set, bundle, post, best_reply(post), cfg.cap);
    episodes.push_back(make_episode(std::move(set), mode));
  }
  return episodes;
}

TrainResult train_bundle_ranker(EngineBundle& bundle, const TrainConfig& config) {
  auto episodes = assemble_episodes(bundle, config.target_mode);
  auto result = train_ranker(episodes, config);
  result.params.round_to_float();
  bundle.ranker = result.params;
  return result;
}

RecallReport evaluate_recall(const EngineBundle& bundle, std::span<const Post> heldout,
                             std::span<const std::size_t> ks) {
  RecallReport report;
  report.ks.assign(ks.begin(), ks.end());
  std::vector<std::size_t> hits(ks.size(), 0);
  for (const auto& post : heldout) {
    if (post.replies.empty()) {
      ++report.skipped;
      continue;
    }
    RankedCandidates ranked;
    try {
      ranked = rank_candidates(post.title, bundle);
    } catch (const InvalidQuery&) {
      ++report.skipped;
      continue;
    }
    std::unordered_set<std::string> truth;
    for (const auto& r : post.replies) truth.insert(r.text);

    std::vector<std::size_t> order(ranked.set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ranked.probabilities[a] > ranked.probabilities[b];
    });
    std::size_t first_hit = order.size();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (truth.contains(ranked.set.candidates[order[rank]].response_text)) {
        first_hit = rank;
        break;
      }
    }
    for (std::size_t k = 0; k < ks.size(); ++k) {
      if (first_hit < ks[k]) ++hits[k];
    }
    ++report.queries;
  }
  for (std::size_t k = 0; k < ks.size(); ++k) {
    report.recall.push_back(report.queries == 0 ? 0.0
                                                : static_cast<double>(hits[k]) /
                                                      static_cast<double>(report.queries));
  }
  return report;
}

}  // namespace stc
