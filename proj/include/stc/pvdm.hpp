#pragma once

// Distributed-memory paragraph vectors: each training window predicts its
// centre word from the mean of the document vector and the surrounding word
// vectors, trained with negative sampling.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stc/matrix.hpp"
#include "stc/vocabulary.hpp"

namespace stc {

struct PvdmConfig {
  std::uint32_t dim = 256;  // document and word vector size
  std::uint32_t window = 5;  // context words on each side of the centre
  std::uint32_t epochs = 20;
  double learning_rate = 0.025;  // decays linearly towards learning_rate * 1e-4
  std::uint32_t negative = 5;
  std::uint32_t min_count = 1;
  std::uint64_t seed = 1;
  /// 1 is single-threaded and bit-reproducible; more threads train lock-free
  /// in parallel and give up reproducibility.
  std::uint32_t threads = 1;
  /// Gradient passes used when inferring a vector for unseen text.
  std::uint32_t infer_steps = 50;

  void validate() const;
  bool operator==(const PvdmConfig&) const = default;
};

struct PvdmDoc {
  std::string id;
  std::vector<std::string> tokens;
};

class PvdmModel {
 public:
  PvdmModel() = default;

  /// Assembles a trained model from its parts (used when loading a bundle).
  PvdmModel(PvdmConfig config, Vocabulary vocab, Matrix word_vectors, Matrix output_weights,
            Matrix doc_vectors, std::vector<std::string> doc_ids,
            std::vector<double> epoch_losses = {});

  /// Throws TrainingError("no training windows") when no document has at
  /// least window + 1 in-vocabulary tokens. Shorter documents keep their
  /// random initial vector and are counted in degenerate_docs().
  static PvdmModel train(std::span<const PvdmDoc> docs, const PvdmConfig& config);

  /// Fits a fresh document vector for tokens with every other weight frozen.
  /// Throws InvalidQuery for an empty token list and NoKnownTokens when every
  /// token is out of vocabulary. Deterministic for a given model.
  std::vector<float> infer(std::span<const std::string> tokens) const;
  std::vector<float> infer(std::span<const std::string> tokens, std::uint32_t steps) const;

  const PvdmConfig& config() const noexcept { return config_; }
  std::uint32_t dim() const noexcept { return config_.dim; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const Matrix& word_vectors() const noexcept { return word_vectors_; }
  const Matrix& output_weights() const noexcept { return output_weights_; }
  const Matrix& doc_vectors() const noexcept { return doc_vectors_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  std::optional<std::size_t> doc_index(std::string_view doc_id) const;
  std::span<const float> doc_vector(std::size_t i) const { return doc_vectors_.row(i); }

  /// Mean negative-sampling loss per training window, one entry per epoch.
  const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }
  std::size_t degenerate_docs() const noexcept { return degenerate_docs_; }

 private:
  void build_lookup();
  void build_noise_table();
  std::uint32_t sample_noise(double u) const;

  PvdmConfig config_;
  Vocabulary vocab_;
  Matrix word_vectors_;    // |V| x dim, input side
  Matrix output_weights_;  // |V| x dim, negative-sampling output side
  Matrix doc_vectors_;     // N_docs x dim
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::size_t> doc_lookup_;
  std::vector<double> noise_cdf_;  // unigram^0.75
  std::vector<double> epoch_losses_;
  std::size_t degenerate_docs_ = 0;

  friend class PvdmTrainer;
};

inline PvdmModel train_pvdm(std::span<const PvdmDoc> docs, const PvdmConfig& config) {
  return PvdmModel::train(docs, config);
}

inline std::vector<float> infer_doc_vector(const PvdmModel& model,
                                           std::span<const std::string> tokens,
                                           std::uint32_t steps) {
  return model.infer(tokens, steps);
}

}  // namespace stc
