#include "stc/synthetic.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "stc/rng.hpp"

namespace stc {
namespace {

struct Topic {
  std::string_view name;
  std::vector<std::string_view> words;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> kTopics = {
      {"first_date",
       {"date", "dinner", "cafe", "movie", "nervous", "outfit", "restaurant", "conversation",
        "awkward", "invite", "weekend", "coffee", "plan", "walk", "park", "laugh", "menu",
        "pay", "bill", "second", "impression", "smile", "question", "topic", "silence"}},
      {"breakup",
       {"breakup", "ex", "heartbroken", "closure", "cry", "apology", "memories", "block",
        "contact", "heal", "forgive", "lonely", "cheated", "ended", "reunite", "regret",
        "photos", "unfollow", "space", "grief", "blame", "past", "rebound", "closure", "pain"}},
      {"confession",
       {"confess", "crush", "feelings", "classmate", "signal", "courage", "reject", "brave",
        "shy", "hint", "tell", "mutual", "friendship", "risk", "club", "lecture", "notice",
        "eye", "blush", "secret", "admit", "likes", "sign", "nervously", "timing"}},
      {"long_distance",
       {"distance", "visit", "call", "video", "miss", "timezone", "flight", "abroad",
        "exchange", "semester", "trust", "jealous", "airport", "ticket", "hours", "apart",
        "reunion", "calls", "schedule", "country", "letters", "countdown", "overseas", "far",
        "waiting"}},
      {"marriage",
       {"marriage", "proposal", "ring", "parents", "wedding", "engaged", "family", "future",
        "savings", "ceremony", "approval", "propose", "kneel", "venue", "inlaws", "mortgage",
        "children", "commitment", "vows", "budget", "guests", "dowry", "traditions", "honeymoon",
        "engagement"}},
      {"gifts",
       {"gift", "anniversary", "birthday", "flowers", "present", "surprise", "necklace",
        "handmade", "card", "chocolate", "roses", "bracelet", "perfume", "wrap", "shop",
        "cake", "candles", "album", "scarf", "couple", "matching", "cheap", "expensive",
        "wishlist", "delivery"}},
  };
  return kTopics;
}

constexpr std::array<std::string_view, 16> kQuestionWords = {
    "how", "what", "should", "why", "is", "can", "help", "advice",
    "when", "does", "anyone", "tips", "need", "please", "really", "which"};

constexpr std::array<std::string_view, 18> kReplyWords = {
    "you", "should", "just", "honestly", "try", "talk", "think", "maybe", "be",
    "yourself", "i", "would", "it", "is", "okay", "good", "luck", "time"};

std::string sentence(Rng& rng, const Topic& topic, std::size_t topic_words,
                     std::span<const std::string_view> fillers, std::size_t filler_words) {
  std::string out;
  const auto push = [&](std::string_view w) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  };
  std::size_t t = topic_words;
  std::size_t f = filler_words;
  while (t + f > 0) {
    const bool take_topic = f == 0 || (t > 0 && rng.below(t + f) < t);
    if (take_topic) {
      push(topic.words[rng.below(topic.words.size())]);
      --t;
    } else {
      push(fillers[rng.below(fillers.size())]);
      --f;
    }
  }
  return out;
}

}  // namespace

std::vector<Post> synthetic_forum_corpus(const SyntheticCorpusOptions& options) {
  Rng rng(options.seed);
  std::vector<Post> posts;
  const auto& all = topics();
  for (std::size_t n = 0; n < options.posts_per_topic; ++n) {
    for (std::size_t t = 0; t < all.size(); ++t) {
      const Topic& topic = all[t];
      Post post;
      post.post_id = std::string(topic.name) + "-" + std::to_string(n);
      post.source = "desk";
      post.title = sentence(rng, topic, 5 + rng.below(3), kQuestionWords, 2 + rng.below(2)) + "?";
      post.body = sentence(rng, topic, 8 + rng.below(6), kQuestionWords, 3);
      const auto n_replies = 2 + rng.below(4);
      for (std::size_t r = 0; r < n_replies; ++r) {
        Reply reply;
        reply.text = sentence(rng, topic, 5 + rng.below(5), kReplyWords, 3 + rng.below(4)) + ".";
        reply.likes = static_cast<std::int64_t>(rng.below(30));
        reply.dislikes = static_cast<std::int64_t>(rng.below(10));
        post.replies.push_back(std::move(reply));
      }
      posts.push_back(std::move(post));
    }
  }
  if (options.include_noise) {
    posts.push_back({"noise-no-reply", "how to plan a first date", "any ideas?", "desk", {}});
    posts.push_back({"noise-no-body", "photo of my date", "<img src=\"a.jpg\"> https://example.com/p.jpg",
                     "desk", {{"nice", 1, 0}}});
    posts.push_back({"noise-blank-title", "   ", "body text", "desk", {{"reply", 0, 0}}});
    posts.push_back({"noise-ad", "cheap flowers buy now", "roses delivered fast, buy now",
                     "desk", {{"spam reply", 0, 3}}});
  }
  return posts;
}

}  // namespace stc
