#include "stc/matching.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "stc/error.hpp"

namespace stc {

void MatchOptions::validate() const {
  if (k2 < 1) throw std::invalid_argument("match: k2 must be >= 1");
  if (cap < 1) throw std::invalid_argument("match: cap must be >= 1");
}

std::string matching_text(const Post& post, MatchField field) {
  if (field == MatchField::Title) return post.title;
  return post.title + "\n" + post.body;
}

CandidateSet match_candidates(std::string_view query_text, std::span<const std::string> retrieved,
                              const Corpus& corpus, const TfIdfModel& tfidf,
                              const MatchOptions& options, const ReplyVectorLookup& reply_vectors) {
  options.validate();
  if (retrieved.empty()) throw std::invalid_argument("match: no retrieved posts");
  const Tokenizer& tok = options.tokenizer ? *options.tokenizer : default_tokenizer();

  std::vector<const Post*> posts;
  posts.reserve(retrieved.size());
  for (const auto& id : retrieved) {
    const Post* post = corpus.find(id);
    if (!post) throw Error("match: retrieved post '" + id + "' is not in the corpus");
    posts.push_back(post);
  }

  const SparseVector query = tfidf.vectorize(tok.tokenize(query_text));
  std::vector<double> scores(posts.size(), 0.0);
  bool any_match = false;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    scores[i] = cosine(query, tfidf.vectorize(tok.tokenize(matching_text(*posts[i], options.field))));
    any_match = any_match || scores[i] > 0.0;
  }

  std::vector<std::size_t> order(posts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (any_match) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  }
  order.resize(std::min(order.size(), options.k2));

  CandidateSet set;
  set.query_text = std::string(query_text);
  set.dense_order_fallback = !any_match;
  for (const auto i : order) {
    const Post& post = *posts[i];
    for (std::size_t r = 0; r < post.replies.size() && set.candidates.size() < options.cap; ++r) {
      Candidate c;
      c.response_text = post.replies[r].text;
      c.post_id = post.post_id;
      c.reply_index = static_cast<std::uint32_t>(r);
      c.net_score = post.replies[r].net_score();
      c.match_score = scores[i];
      if (reply_vectors) c.reply_vec = reply_vectors(post.post_id, c.reply_index);
      set.candidates.push_back(std::move(c));
    }
    if (set.candidates.size() >= options.cap) break;
  }
  if (set.candidates.empty()) throw Error("match: retrieved posts have no replies");
  return set;
}

}  // namespace stc
