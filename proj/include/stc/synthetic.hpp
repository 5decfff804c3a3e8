#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stc/corpus.hpp"

namespace stc {

struct SyntheticCorpusOptions {
  std::size_t posts_per_topic = 40;
  std::uint64_t seed = 7;
  /// Adds posts that cleaning must drop: no replies, empty body, blank
  /// title, advertisement text ("buy now").
  bool include_noise = false;
};

/// A small English relationship-advice forum with six topics. Titles and
/// replies draw mostly from their topic's vocabulary, so topic structure is
/// recoverable by the embedding and matching stages.
std::vector<Post> synthetic_forum_corpus(const SyntheticCorpusOptions& options = {});

}  // namespace stc
