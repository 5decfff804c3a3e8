#pragma once

// An engine bundle is everything needed to serve the pipeline: the cleaned
// corpus, title and reply paragraph-vector models, the TF-IDF model, the dense
// title index and the ranker parameters. Bundles are built in stages
// (ingest, embeddings, index, ranker), so every part after the corpus is
// optional until the bundle is served.
//
// On-disk layout of a bundle directory:
//
//   manifest              JSON: dims, configs, per-file checksums
//   config                key = value pipeline settings
//   corpus.jsonl          cleaned corpus, one post per line
//   stats.json            ingestion statistics
//   title/ reply/         vocab.txt, vectors.bin (doc vectors), doc_ids.txt,
//                         words.bin (input word vectors), output.bin
//   tfidf.txt             "N<TAB>count" then token<TAB>df lines
//   index.bin             normalized title rows, same layout as vectors.bin
//   post_ids.txt
//   ranker.bin

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stc/corpus.hpp"
#include "stc/dense_index.hpp"
#include "stc/matching.hpp"
#include "stc/pvdm.hpp"
#include "stc/ranker.hpp"
#include "stc/tfidf.hpp"

namespace stc {

struct PipelineConfig {
  std::size_t k1 = 100;
  std::size_t k2 = 10;
  std::size_t cap = 10;
  MatchField match_field = MatchField::Title;
  SelectionPolicy policy = SelectionPolicy::Sample;
  double temperature = 1.0;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Reads "key = value" lines; unknown keys are an error, '#' starts a comment.
PipelineConfig parse_pipeline_config(std::istream& in, PipelineConfig base = {});
void write_pipeline_config(std::ostream& out, const PipelineConfig& config);

struct EngineBundle {
  Corpus corpus;
  CorpusStats stats;
  std::optional<PvdmModel> title_model;
  std::optional<PvdmModel> reply_model;
  std::optional<TfIdfModel> tfidf;
  std::optional<DenseIndex> index;
  std::optional<RankerParams> ranker;
  PipelineConfig config;

  bool servable() const noexcept;
  /// Throws Error naming the first missing stage.
  void require_servable() const;
  /// Throws Error when present parts disagree (index ids outside the corpus,
  /// index width vs title dim, ranker dims vs embedding dims).
  void check_consistency() const;

  /// Reply embedding for a corpus reply; zeros when the reply model lacks it.
  std::vector<float> reply_vector(const std::string& post_id, std::uint32_t reply_index) const;
  ReplyVectorLookup reply_lookup() const;
};

/// Document id of a reply inside the reply paragraph-vector model.
std::string reply_doc_id(const std::string& post_id, std::uint32_t reply_index);

struct IngestResult {
  EngineBundle bundle;
  std::vector<ParseError> errors;
};

IngestResult ingest_corpus(std::istream& records, const NoiseFilter& noise);

/// Trains the title and reply paragraph-vector models and fits TF-IDF on the
/// matching text of every post. Clears any index and ranker, which would be
/// stale afterwards.
void train_embeddings(EngineBundle& bundle, const PvdmConfig& title_config,
                      const PvdmConfig& reply_config);

/// Builds the dense index from the title model's document vectors, in corpus
/// order. Clears any ranker.
void build_index(EngineBundle& bundle);

/// Writes every present part and returns the manifest that was written.
nlohmann::json save_bundle(const EngineBundle& bundle, const std::filesystem::path& dir);

/// Loads the parts listed in the manifest, verifying checksums and dims.
/// Throws LoadError naming the offending file.
EngineBundle load_bundle(const std::filesystem::path& dir);

nlohmann::json stats_to_json(const CorpusStats& stats);

}  // namespace stc
