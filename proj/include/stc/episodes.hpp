#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stc/bundle.hpp"
#include "stc/ranker.hpp"

namespace stc {

/// One training episode per corpus post: the post title (through its trained
/// title vector) is the query and stages 1-2 produce the candidates.
///
/// In one_hot mode the true reply is the post's highest net-score reply; when
/// matching did not surface it, it is inserted at its match-score position,
/// displacing the last candidate if the set is full.
std::vector<TrainingEpisode> assemble_episodes(const EngineBundle& bundle, TargetMode mode);

/// Assembles episodes, trains, and stores float-rounded parameters in the bundle.
TrainResult train_bundle_ranker(EngineBundle& bundle, const TrainConfig& config);

struct RecallReport {
  std::vector<std::size_t> ks;
  std::vector<double> recall;  // parallel to ks
  std::size_t queries = 0;     // held-out posts evaluated
  std::size_t skipped = 0;     // posts with no replies or no usable tokens
};

/// For each held-out post, ranks the pipeline's candidates for its title by
/// probability and counts a hit at k when one of the top k candidates has
/// exactly the text of one of the post's replies.
RecallReport evaluate_recall(const EngineBundle& bundle, std::span<const Post> heldout,
                             std::span<const std::size_t> ks);

}  // namespace stc
