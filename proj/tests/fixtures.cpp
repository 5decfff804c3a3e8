#include "fixtures.hpp"

#include <cmath>
#include <sstream>

#include "stc/episodes.hpp"
#include "stc/rng.hpp"
#include "stc/synthetic.hpp"

namespace stc::fixtures {

TopicCorpus two_topic_corpus(std::size_t n_docs, std::uint64_t seed) {
  constexpr std::size_t kWordsPerTopic = 60;
  Rng rng(seed);
  TopicCorpus corpus;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const int topic = static_cast<int>(i % 2);
    const char* prefix = topic == 0 ? "sun" : "moon";
    PvdmDoc doc;
    doc.id = "doc" + std::to_string(i);
    const auto len = 14 + rng.below(8);
    for (std::size_t t = 0; t < len; ++t) {
      doc.tokens.push_back(prefix + std::to_string(rng.below(kWordsPerTopic)));
    }
    corpus.docs.push_back(std::move(doc));
    corpus.topic.push_back(topic);
  }
  return corpus;
}

PvdmConfig two_topic_config() {
  PvdmConfig c;
  c.dim = 32;
  c.window = 3;
  c.epochs = 30;
  c.learning_rate = 0.05;
  c.negative = 5;
  c.seed = 5;
  c.infer_steps = 100;
  return c;
}

std::vector<TrainingEpisode> planted_signal_episodes(std::size_t n, std::size_t candidates,
                                                     std::size_t d_q, std::size_t d_r,
                                                     std::uint64_t seed) {
  Rng rng(seed);
  // r = P q + noise with P entries ~ N(0, 1/d_q), so true and distractor
  // replies have the same per-entry scale.
  std::vector<double> P(d_r * d_q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_q));
  for (auto& x : P) x = rng.normal() * scale;

  std::vector<TrainingEpisode> episodes;
  episodes.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    CandidateSet set;
    set.query_text = "planted " + std::to_string(e);
    set.query_vec.resize(d_q);
    for (auto& x : set.query_vec) x = static_cast<float>(rng.normal());
    const auto truth = static_cast<std::size_t>(rng.below(candidates));
    for (std::size_t i = 0; i < candidates; ++i) {
      Candidate c;
      c.post_id = "p" + std::to_string(e);
      c.reply_index = static_cast<std::uint32_t>(i);
      c.response_text = "reply " + std::to_string(e) + "." + std::to_string(i);
      c.reply_vec.resize(d_r);
      if (i == truth) {
        for (std::size_t a = 0; a < d_r; ++a) {
          double v = 0.0;
          for (std::size_t b = 0; b < d_q; ++b) v += P[a * d_q + b] * set.query_vec[b];
          c.reply_vec[a] = static_cast<float>(v + 0.1 * rng.normal());
        }
      } else {
        for (auto& x : c.reply_vec) x = static_cast<float>(rng.normal());
      }
      set.candidates.push_back(std::move(c));
    }
    set.true_reply_index = truth;
    episodes.push_back(make_episode(std::move(set), TargetMode::OneHot));
  }
  return episodes;
}

std::vector<Post> ten_post_fixture() {
  const auto post = [](std::string id, std::string title, std::string body,
                       std::vector<Reply> replies) {
    return Post{std::move(id), std::move(title), std::move(body), "fixture", std::move(replies)};
  };
  return {
      post("p1", "how do I ask her out", "we met at the library last week", {{"just ask", 4, 0}}),
      post("p2", "nervous about first date", "what should I wear", {{"be yourself", 2, 1}, {"jeans", 0, 0}}),
      post("p3", "no replies here", "anyone?", {}),
      post("p4", "he stopped texting", "", {{"move on", 5, 0}}),
      post("p5", "cheap roses BUY NOW", "limited offer", {{"spam", 0, 7}}),
      post("p6", "long distance tips", "she moved abroad", {{"call every day", 3, 0}}),
      post("p7", "anniversary gift ideas", "two years together", {{"handmade album", 6, 0}}),
      post("p8", "should I confess", "my classmate smiles at me", {{"go for it", 1, 0}}),
      post("p9", "parents disapprove", "they want me to break up", {{"talk to them", 2, 2}}),
      post("p10", "how to apologize", "I forgot her birthday", {{"flowers and a card", 3, 1}}),
  };
}

std::vector<Post> random_posts(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const char* texts[] = {"", "  ", "hello there", "<img src=x>", "http://ads.example", "buy now!",
                         "how are you", "call me", "\t\n", "a real question", "BUY NOW cheap"};
  const auto pick = [&] { return std::string(texts[rng.below(std::size(texts))]); };
  std::vector<Post> posts;
  for (std::size_t i = 0; i < n; ++i) {
    Post p;
    p.post_id = "r" + std::to_string(i);
    p.title = pick();
    p.body = pick();
    const auto replies = rng.below(4);
    for (std::size_t r = 0; r < replies; ++r) {
      p.replies.push_back({pick(), static_cast<std::int64_t>(rng.below(5)),
                           static_cast<std::int64_t>(rng.below(5))});
    }
    posts.push_back(std::move(p));
  }
  return posts;
}

EngineBundle build_desk_bundle() {
  SyntheticCorpusOptions opts;
  opts.posts_per_topic = 30;
  opts.include_noise = true;
  std::stringstream records;
  const auto posts = synthetic_forum_corpus(opts);
  write_corpus(records, posts);
  auto ingested = ingest_corpus(records, NoiseFilter({"buy now"}));
  EngineBundle bundle = std::move(ingested.bundle);

  PvdmConfig titles;
  titles.dim = 256;
  titles.epochs = 15;
  titles.seed = 3;
  PvdmConfig replies = titles;
  replies.dim = 128;
  train_embeddings(bundle, titles, replies);
  build_index(bundle);

  TrainConfig rank;
  rank.epochs = 5;
  rank.seed = 3;
  rank.target_mode = TargetMode::Likes;
  train_bundle_ranker(bundle, rank);
  bundle.config.policy = SelectionPolicy::Argmax;
  return bundle;
}

const EngineBundle& desk_bundle() {
  static const EngineBundle bundle = build_desk_bundle();
  return bundle;
}

std::vector<std::string> probe_utterances(std::size_t n) {
  const auto& bundle = desk_bundle();
  const std::vector<std::string> extra = {
      "how do I plan a nice dinner date",
      "my ex wants to reunite, should I forgive",
      "I have a crush on my classmate",
      "she is studying abroad and I miss her",
      "my parents want us to get engaged",
      "what gift for our anniversary",
      "zxqv blorp fnord",
      "Coffee?? Weekend!!",
      "결혼 준비 어떻게 해요",
      "ring ring ring ring",
  };
  std::vector<std::string> probes;
  const auto posts = bundle.corpus.posts();
  for (std::size_t i = 0; probes.size() < n; ++i) {
    if (i % 2 == 0 && i / 2 < extra.size()) {
      probes.push_back(extra[i / 2]);
    } else {
      probes.push_back(posts[(i * 7) % posts.size()].title);
    }
  }
  return probes;
}

}  // namespace stc::fixtures
