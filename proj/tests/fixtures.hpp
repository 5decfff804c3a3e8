#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stc/bundle.hpp"
#include "stc/corpus.hpp"
#include "stc/pvdm.hpp"
#include "stc/ranker.hpp"

namespace stc::fixtures {

struct TopicCorpus {
  std::vector<PvdmDoc> docs;
  std::vector<int> topic;  // 0 or 1, parallel to docs
};

/// Documents drawn from two disjoint vocabularies, alternating topics.
TopicCorpus two_topic_corpus(std::size_t n_docs = 200, std::uint64_t seed = 11);
PvdmConfig two_topic_config();

/// One-hot episodes where the true reply vector is a fixed linear projection
/// of the query vector plus small noise and the distractors are random.
std::vector<TrainingEpisode> planted_signal_episodes(std::size_t n, std::size_t candidates,
                                                     std::size_t d_q, std::size_t d_r,
                                                     std::uint64_t seed);

/// Ten posts: one without replies, one with an empty body, one advertising
/// "buy now", and seven clean ones.
std::vector<Post> ten_post_fixture();

/// Random posts exercising every drop rule, for conservation properties.
std::vector<Post> random_posts(std::size_t n, std::uint64_t seed);

/// Fully trained bundle over the synthetic forum corpus. Built once per process.
const EngineBundle& desk_bundle();
EngineBundle build_desk_bundle();

/// Probe utterances: corpus titles, paraphrases, unseen words and mixed text.
std::vector<std::string> probe_utterances(std::size_t n);

}  // namespace stc::fixtures
