#pragma once

// Response selection. For query q and candidate reply r_i:
//
//   f_ij = act(q^T W_j r_i + b_j)      j = 0..m-1   relational features
//   g_i  = act(f_i^T s + c)                         candidate score
//   p    = softmax(g)                               selection distribution
//
// W_j is d_q x d_r so title and reply embeddings may differ in size. The
// parameters are fit by plain SGD on the mean squared error between p and a
// target distribution built from reply like counts or from a known true reply.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stc/matching.hpp"

namespace stc {

enum class Activation : std::uint8_t { Relu = 0, Softplus = 1 };

double activate(Activation act, double x);
/// Derivative of the activation; the ReLU subgradient at 0 is 0.
double activate_derivative(Activation act, double x);

struct RankerParams {
  std::size_t m = 0;
  std::size_t d_q = 0;
  std::size_t d_r = 0;
  Activation activation = Activation::Relu;
  std::vector<double> W;  // m blocks of d_q x d_r, row-major
  std::vector<double> b;  // m
  std::vector<double> s;  // m
  double c = 0.0;

  static RankerParams zeros(std::size_t m, std::size_t d_q, std::size_t d_r, Activation act);
  /// W and s uniform in (-0.05, 0.05); b and c zero.
  static RankerParams random(std::size_t m, std::size_t d_q, std::size_t d_r, Activation act,
                             std::uint64_t seed);

  std::span<const double> W_block(std::size_t j) const { return {W.data() + j * d_q * d_r, d_q * d_r}; }
  std::span<double> W_block(std::size_t j) { return {W.data() + j * d_q * d_r, d_q * d_r}; }

  std::size_t parameter_count() const noexcept { return W.size() + b.size() + s.size() + 1; }
  /// Throws ShapeError on inconsistent shapes, Error on non-finite entries.
  void validate() const;
  /// Rounds every entry to float precision, the precision ranker.bin stores.
  void round_to_float();

  bool operator==(const RankerParams&) const = default;
};

/// Feature vector f_i for one candidate. Throws ShapeError on size mismatch.
std::vector<double> relational_features(std::span<const float> q, std::span<const float> r,
                                        const RankerParams& params);

/// Scores g for every candidate reply vector.
std::vector<double> candidate_scores(std::span<const float> q,
                                     std::span<const std::vector<float>> replies,
                                     const RankerParams& params);

/// Numerically stable softmax. Throws Error when g is empty or not finite.
std::vector<double> response_distribution(std::span<const double> g);

enum class TargetMode { Likes, OneHot };

/// Likes mode clamps net scores at 0 and normalizes, falling back to uniform
/// when nothing is positive. OneHot mode is the indicator of true_index.
std::vector<double> target_distribution(std::span<const std::int64_t> net_scores, TargetMode mode,
                                        std::optional<std::size_t> true_index = std::nullopt);
std::vector<double> target_distribution(const CandidateSet& set, TargetMode mode);

struct TrainingEpisode {
  CandidateSet set;
  std::vector<double> targets;  // sums to 1, one entry per candidate
};

TrainingEpisode make_episode(CandidateSet set, TargetMode mode);

struct LossAndGrad {
  double loss = 0.0;
  RankerParams grad;  // same shape as the parameters
};

/// loss = mean_i (p_i - t_i)^2 with exact gradients through softmax and both
/// activation layers.
LossAndGrad mse_loss_and_grad(const TrainingEpisode& episode, const RankerParams& params);

struct TrainConfig {
  double learning_rate = 0.05;
  std::uint32_t epochs = 30;
  std::uint64_t seed = 1;
  TargetMode target_mode = TargetMode::Likes;
  std::optional<double> gradient_clip;  // max global L2 norm per step
  std::size_t m = 8;
  Activation activation = Activation::Relu;

  void validate() const;
};

struct TrainResult {
  RankerParams params;
  std::vector<double> epoch_losses;  // mean episode loss, one per epoch
};

/// Plain per-episode SGD, episode order reshuffled every epoch from the seed.
/// Dimensions come from the first episode. Throws TrainingError when the loss
/// becomes non-finite.
TrainResult train_ranker(std::span<const TrainingEpisode> episodes, const TrainConfig& config);

/// Continues training from existing parameters.
TrainResult train_ranker(std::span<const TrainingEpisode> episodes, const TrainConfig& config,
                         RankerParams initial);

enum class SelectionPolicy { Argmax, Sample };

/// Argmax returns the lowest index attaining the maximum. Sample draws from
/// softmax(ln p / temperature) with a generator seeded by `seed`.
std::size_t select_response(std::span<const double> p, SelectionPolicy policy,
                            double temperature = 1.0, std::uint64_t seed = 0);

const char* to_string(Activation act);
const char* to_string(SelectionPolicy policy);
const char* to_string(TargetMode mode);
Activation parse_activation(std::string_view name);
SelectionPolicy parse_policy(std::string_view name);
TargetMode parse_target_mode(std::string_view name);

}  // namespace stc
