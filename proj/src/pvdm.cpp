#include "stc/pvdm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "stc/error.hpp"
#include "stc/rng.hpp"

namespace stc {

void PvdmConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("pvdm: dim must be >= 1");
  if (epochs < 1) throw std::invalid_argument("pvdm: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("pvdm: learning_rate must be > 0");
  if (min_count < 1) throw std::invalid_argument("pvdm: min_count must be >= 1");
  if (threads < 1) throw std::invalid_argument("pvdm: threads must be >= 1");
  if (infer_steps < 1) throw std::invalid_argument("pvdm: infer_steps must be >= 1");
}

namespace {

constexpr double kMinLearningRateRatio = 1e-4;
constexpr std::uint64_t kSamplingStream = 0x9E3779B97F4A7C15ULL;

struct PlainAccess {
  static float load(const float& x) { return x; }
  static void add(float& x, float delta) { x += delta; }
};

// Lock-free parallel training: racy updates are still well-defined.
struct RelaxedAccess {
  static float load(const float& x) {
    return std::atomic_ref<float>(const_cast<float&>(x)).load(std::memory_order_relaxed);
  }
  static void add(float& x, float delta) {
    std::atomic_ref<float> ref(x);
    ref.store(ref.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
  }
};

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void init_uniform(std::span<float> values, std::size_t dim, Rng& rng) {
  const double half = 0.5 / static_cast<double>(dim);
  for (auto& v : values) v = static_cast<float>(rng.uniform(-half, half));
}

}  // namespace

/// Shared window update used by both training and inference.
class PvdmTrainer {
 public:
  struct Kernel {
    const PvdmModel* model;
    float* words_mut;   // nullptr when word vectors are frozen
    float* output_mut;  // nullptr when output weights are frozen
  };

  template <class Access>
  static double window_step(const Kernel& k, std::span<float> doc,
                            std::span<const std::uint32_t> ids, std::size_t pos, float alpha,
                            Rng& rng, std::span<float> h, std::span<float> grad) {
    const PvdmModel& m = *k.model;
    const std::size_t d = m.config_.dim;
    const std::size_t window = m.config_.window;
    const float* words = m.word_vectors_.data().data();
    const float* output = m.output_weights_.data().data();
    const std::size_t lo = pos >= window ? pos - window : 0;
    const std::size_t hi = std::min(ids.size(), pos + window + 1);

    std::copy(doc.begin(), doc.end(), h.begin());
    std::size_t count = 1;
    for (std::size_t c = lo; c < hi; ++c) {
      if (c == pos) continue;
      const float* w = words + static_cast<std::size_t>(ids[c]) * d;
      for (std::size_t i = 0; i < d; ++i) h[i] += Access::load(w[i]);
      ++count;
    }
    const float inv = 1.0f / static_cast<float>(count);
    for (auto& x : h) x *= inv;
    std::fill(grad.begin(), grad.end(), 0.0f);

    double loss = 0.0;
    const std::uint32_t centre = ids[pos];
    for (std::uint32_t s = 0; s <= m.config_.negative; ++s) {
      std::uint32_t target = centre;
      float label = 1.0f;
      if (s > 0) {
        target = m.sample_noise(rng.uniform());
        if (target == centre) continue;
        label = 0.0f;
      }
      const std::size_t off = static_cast<std::size_t>(target) * d;
      double f = 0.0;
      for (std::size_t i = 0; i < d; ++i) f += static_cast<double>(h[i]) * Access::load(output[off + i]);
      loss += label > 0 ? softplus(-f) : softplus(f);
      const float g = static_cast<float>((label - sigmoid(f)) * alpha);
      for (std::size_t i = 0; i < d; ++i) grad[i] += g * Access::load(output[off + i]);
      if (k.output_mut) {
        for (std::size_t i = 0; i < d; ++i) Access::add(k.output_mut[off + i], g * h[i]);
      }
    }

    // The summed input receives the full error on each of its parts.
    for (std::size_t i = 0; i < d; ++i) doc[i] += grad[i];
    if (k.words_mut) {
      for (std::size_t c = lo; c < hi; ++c) {
        if (c == pos) continue;
        float* w = k.words_mut + static_cast<std::size_t>(ids[c]) * d;
        for (std::size_t i = 0; i < d; ++i) Access::add(w[i], grad[i]);
      }
    }
    return loss;
  }
};

PvdmModel::PvdmModel(PvdmConfig config, Vocabulary vocab, Matrix word_vectors,
                     Matrix output_weights, Matrix doc_vectors, std::vector<std::string> doc_ids,
                     std::vector<double> epoch_losses)
    : config_(config),
      vocab_(std::move(vocab)),
      word_vectors_(std::move(word_vectors)),
      output_weights_(std::move(output_weights)),
      doc_vectors_(std::move(doc_vectors)),
      doc_ids_(std::move(doc_ids)),
      epoch_losses_(std::move(epoch_losses)) {
  config_.validate();
  const auto check = [&](const Matrix& mat, std::size_t rows, const char* what) {
    if (mat.rows() != rows || mat.cols() != config_.dim) {
      throw ShapeError(std::string("pvdm ") + what + " is " + std::to_string(mat.rows()) + "x" +
                       std::to_string(mat.cols()) + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(config_.dim));
    }
  };
  check(word_vectors_, vocab_.size(), "word vectors");
  check(output_weights_, vocab_.size(), "output weights");
  check(doc_vectors_, doc_ids_.size(), "doc vectors");
  build_lookup();
  build_noise_table();
}

void PvdmModel::build_lookup() {
  doc_lookup_.clear();
  doc_lookup_.reserve(doc_ids_.size());
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    if (!doc_lookup_.emplace(doc_ids_[i], i).second) {
      throw Error("pvdm: duplicate doc id '" + doc_ids_[i] + "'");
    }
  }
}

void PvdmModel::build_noise_table() {
  noise_cdf_.resize(vocab_.size());
  double acc = 0.0;
  for (std::uint32_t i = 0; i < vocab_.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab_.frequency(i)), 0.75);
    noise_cdf_[i] = acc;
  }
}

std::uint32_t PvdmModel::sample_noise(double u) const {
  const double x = u * noise_cdf_.back();
  auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), x);
  if (it == noise_cdf_.end()) --it;
  return static_cast<std::uint32_t>(it - noise_cdf_.begin());
}

std::optional<std::size_t> PvdmModel::doc_index(std::string_view doc_id) const {
  auto it = doc_lookup_.find(std::string(doc_id));
  if (it == doc_lookup_.end()) return std::nullopt;
  return it->second;
}

PvdmModel PvdmModel::train(std::span<const PvdmDoc> docs, const PvdmConfig& config) {
  config.validate();
  if (docs.empty()) throw std::invalid_argument("train_pvdm: no documents");

  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(docs.size());
  for (const auto& doc : docs) token_lists.push_back(doc.tokens);

  PvdmModel model;
  model.config_ = config;
  model.vocab_ = Vocabulary::build(token_lists, config.min_count);
  for (const auto& doc : docs) model.doc_ids_.push_back(doc.id);
  model.build_lookup();

  const std::size_t d = config.dim;
  const std::size_t vocab_size = model.vocab_.size();
  std::vector<std::vector<std::uint32_t>> encoded;
  encoded.reserve(docs.size());
  std::vector<std::size_t> trainable;
  std::uint64_t windows_per_epoch = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    encoded.push_back(model.vocab_.encode(docs[i].tokens));
    if (encoded.back().size() >= static_cast<std::size_t>(config.window) + 1) {
      trainable.push_back(i);
      windows_per_epoch += encoded.back().size();
    } else {
      ++model.degenerate_docs_;
    }
  }
  if (trainable.empty() || vocab_size == 0) throw TrainingError("no training windows");

  Rng init_rng(config.seed);
  model.word_vectors_ = Matrix(vocab_size, d);
  model.output_weights_ = Matrix(vocab_size, d);
  model.doc_vectors_ = Matrix(docs.size(), d);
  init_uniform(model.word_vectors_.data(), d, init_rng);
  init_uniform(model.doc_vectors_.data(), d, init_rng);
  model.build_noise_table();

  const double total = static_cast<double>(windows_per_epoch) * config.epochs;
  const auto alpha_at = [&](std::uint64_t processed) {
    const double frac = std::max(kMinLearningRateRatio, 1.0 - static_cast<double>(processed) / total);
    return static_cast<float>(config.learning_rate * frac);
  };
  const PvdmTrainer::Kernel kernel{&model, model.word_vectors_.data().data(),
                                   model.output_weights_.data().data()};

  Rng order_rng(config.seed ^ kSamplingStream);
  std::vector<std::size_t> order = trainable;

  if (config.threads == 1) {
    Rng rng(config.seed + 1);
    std::vector<float> h(d), grad(d);
    std::uint64_t processed = 0;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
      order_rng.shuffle(std::span(order));
      double loss_sum = 0.0;
      for (const auto doc : order) {
        const auto& ids = encoded[doc];
        auto doc_vec = model.doc_vectors_.row(doc);
        for (std::size_t pos = 0; pos < ids.size(); ++pos) {
          loss_sum += PvdmTrainer::window_step<PlainAccess>(kernel, doc_vec, ids, pos,
                                                            alpha_at(processed), rng, h, grad);
          ++processed;
        }
      }
      model.epoch_losses_.push_back(loss_sum / static_cast<double>(windows_per_epoch));
    }
    return model;
  }

  std::atomic<std::uint64_t> processed{0};
  const std::uint32_t n_threads = config.threads;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    std::vector<double> losses(n_threads, 0.0);
    std::vector<std::thread> workers;
    for (std::uint32_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t] {
        Rng rng(config.seed + 1 + epoch * n_threads + t);
        std::vector<float> h(d), grad(d);
        double local = 0.0;
        for (std::size_t k = t; k < order.size(); k += n_threads) {
          const auto& ids = encoded[order[k]];
          auto doc_vec = model.doc_vectors_.row(order[k]);
          for (std::size_t pos = 0; pos < ids.size(); ++pos) {
            const auto done = processed.fetch_add(1, std::memory_order_relaxed);
            local += PvdmTrainer::window_step<RelaxedAccess>(kernel, doc_vec, ids, pos,
                                                             alpha_at(done), rng, h, grad);
          }
        }
        losses[t] = local;
      });
    }
    for (auto& w : workers) w.join();
    double loss_sum = 0.0;
    for (double l : losses) loss_sum += l;
    model.epoch_losses_.push_back(loss_sum / static_cast<double>(windows_per_epoch));
  }
  return model;
}

std::vector<float> PvdmModel::infer(std::span<const std::string> tokens) const {
  return infer(tokens, config_.infer_steps);
}

std::vector<float> PvdmModel::infer(std::span<const std::string> tokens,
                                    std::uint32_t steps) const {
  if (tokens.empty()) throw InvalidQuery("empty query");
  if (steps < 1) throw std::invalid_argument("infer: steps must be >= 1");
  const auto ids = vocab_.encode(tokens);
  if (ids.empty()) throw NoKnownTokens("no known tokens");

  const std::size_t d = config_.dim;
  Rng rng(config_.seed);
  std::vector<float> doc(d), h(d), grad(d);
  init_uniform(doc, d, rng);
  const PvdmTrainer::Kernel kernel{this, nullptr, nullptr};
  for (std::uint32_t step = 0; step < steps; ++step) {
    const double frac =
        std::max(kMinLearningRateRatio, 1.0 - static_cast<double>(step) / static_cast<double>(steps));
    const auto alpha = static_cast<float>(config_.learning_rate * frac);
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      PvdmTrainer::window_step<PlainAccess>(kernel, doc, ids, pos, alpha, rng, h, grad);
    }
  }
  return doc;
}

}  // namespace stc
