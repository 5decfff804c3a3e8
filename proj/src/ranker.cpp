#include "stc/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "stc/error.hpp"
#include "stc/rng.hpp"

namespace stc {

double activate(Activation act, double x) {
  switch (act) {
    case Activation::Relu:
      return x > 0.0 ? x : 0.0;
    case Activation::Softplus:
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return x;
}

double activate_derivative(Activation act, double x) {
  switch (act) {
    case Activation::Relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::Softplus:
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      return std::exp(x) / (1.0 + std::exp(x));
  }
  return 1.0;
}

RankerParams RankerParams::zeros(std::size_t m, std::size_t d_q, std::size_t d_r, Activation act) {
  if (m < 1 || d_q < 1 || d_r < 1) throw ShapeError("ranker: m, d_q and d_r must be >= 1");
  RankerParams p;
  p.m = m;
  p.d_q = d_q;
  p.d_r = d_r;
  p.activation = act;
  p.W.assign(m * d_q * d_r, 0.0);
  p.b.assign(m, 0.0);
  p.s.assign(m, 0.0);
  return p;
}

RankerParams RankerParams::random(std::size_t m, std::size_t d_q, std::size_t d_r, Activation act,
                                  std::uint64_t seed) {
  RankerParams p = zeros(m, d_q, d_r, act);
  Rng rng(seed);
  for (auto& w : p.W) w = rng.uniform(-0.05, 0.05);
  for (auto& x : p.s) x = rng.uniform(-0.05, 0.05);
  return p;
}

void RankerParams::validate() const {
  if (m < 1 || d_q < 1 || d_r < 1) throw ShapeError("ranker: m, d_q and d_r must be >= 1");
  if (W.size() != m * d_q * d_r || b.size() != m || s.size() != m) {
    throw ShapeError("ranker: parameter arrays do not match m=" + std::to_string(m) +
                     ", d_q=" + std::to_string(d_q) + ", d_r=" + std::to_string(d_r));
  }
  const auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(W.begin(), W.end(), finite) || !std::all_of(b.begin(), b.end(), finite) ||
      !std::all_of(s.begin(), s.end(), finite) || !std::isfinite(c)) {
    throw Error("ranker: non-finite parameter");
  }
}

void RankerParams::round_to_float() {
  const auto round = [](double& x) { x = static_cast<double>(static_cast<float>(x)); };
  std::for_each(W.begin(), W.end(), round);
  std::for_each(b.begin(), b.end(), round);
  std::for_each(s.begin(), s.end(), round);
  round(c);
}

namespace {

void check_dims(std::span<const float> q, std::span<const float> r, const RankerParams& params) {
  if (q.size() != params.d_q || r.size() != params.d_r) {
    throw ShapeError("ranker: got q of size " + std::to_string(q.size()) + " and r of size " +
                     std::to_string(r.size()) + ", parameters expect " +
                     std::to_string(params.d_q) + " and " + std::to_string(params.d_r));
  }
}

// v_j = W_j^T q, one d_r vector per feature.
std::vector<double> project_query(std::span<const float> q, const RankerParams& params) {
  if (q.size() != params.d_q) {
    throw ShapeError("ranker: query has size " + std::to_string(q.size()) + ", expected " +
                     std::to_string(params.d_q));
  }
  std::vector<double> v(params.m * params.d_r, 0.0);
  for (std::size_t j = 0; j < params.m; ++j) {
    const auto Wj = params.W_block(j);
    double* vj = v.data() + j * params.d_r;
    for (std::size_t a = 0; a < params.d_q; ++a) {
      const double qa = q[a];
      if (qa == 0.0) continue;
      const double* row = Wj.data() + a * params.d_r;
      for (std::size_t k = 0; k < params.d_r; ++k) vj[k] += qa * row[k];
    }
  }
  return v;
}

// Pre-activations a_ij = q^T W_j r_i + b_j, laid out [i * m + j].
std::vector<double> preactivations(std::span<const float> q,
                                   std::span<const std::span<const float>> replies,
                                   const RankerParams& params) {
  const auto v = project_query(q, params);
  std::vector<double> a(replies.size() * params.m);
  for (std::size_t i = 0; i < replies.size(); ++i) {
    check_dims(q, replies[i], params);
    for (std::size_t j = 0; j < params.m; ++j) {
      const double* vj = v.data() + j * params.d_r;
      double acc = params.b[j];
      for (std::size_t k = 0; k < params.d_r; ++k) acc += vj[k] * replies[i][k];
      a[i * params.m + j] = acc;
    }
  }
  return a;
}

void check_probability(std::span<const double> p) {
  if (p.empty()) throw Error("select_response: empty distribution");
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw Error("select_response: invalid probability");
  }
}

}  // namespace

std::vector<double> relational_features(std::span<const float> q, std::span<const float> r,
                                        const RankerParams& params) {
  check_dims(q, r, params);
  const std::span<const float> one[] = {r};
  auto f = preactivations(q, one, params);
  for (auto& x : f) x = activate(params.activation, x);
  return f;
}

std::vector<double> candidate_scores(std::span<const float> q,
                                     std::span<const std::vector<float>> replies,
                                     const RankerParams& params) {
  if (replies.empty()) throw Error("candidate_scores: no candidates");
  std::vector<std::span<const float>> views(replies.begin(), replies.end());
  const auto a = preactivations(q, views, params);
  std::vector<double> g(replies.size());
  for (std::size_t i = 0; i < replies.size(); ++i) {
    double z = params.c;
    for (std::size_t j = 0; j < params.m; ++j) {
      z += activate(params.activation, a[i * params.m + j]) * params.s[j];
    }
    g[i] = activate(params.activation, z);
  }
  return g;
}

std::vector<double> response_distribution(std::span<const double> g) {
  if (g.empty()) throw Error("response_distribution: empty score vector");
  for (double x : g) {
    if (!std::isfinite(x)) throw Error("response_distribution: non-finite score");
  }
  const double mx = *std::max_element(g.begin(), g.end());
  std::vector<double> p(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) p[i] = std::exp(g[i] - mx);
  // Summing in sorted order makes p exactly equivariant under permutation of g.
  std::vector<double> terms = p;
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double x : terms) total += x;
  for (auto& x : p) x /= total;
  return p;
}

std::vector<double> target_distribution(std::span<const std::int64_t> net_scores, TargetMode mode,
                                        std::optional<std::size_t> true_index) {
  if (net_scores.empty()) throw Error("target_distribution: no candidates");
  const std::size_t n = net_scores.size();
  std::vector<double> t(n, 0.0);
  if (mode == TargetMode::OneHot) {
    if (!true_index) throw Error("target_distribution: one_hot mode needs a true reply index");
    if (*true_index >= n) throw Error("target_distribution: true reply index out of range");
    t[*true_index] = 1.0;
    return t;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(std::max<std::int64_t>(net_scores[i], 0));
    total += t[i];
  }
  if (total == 0.0) {
    std::fill(t.begin(), t.end(), 1.0 / static_cast<double>(n));
  } else {
    for (auto& x : t) x /= total;
  }
  return t;
}

std::vector<double> target_distribution(const CandidateSet& set, TargetMode mode) {
  std::vector<std::int64_t> nets;
  nets.reserve(set.size());
  for (const auto& c : set.candidates) nets.push_back(c.net_score);
  return target_distribution(nets, mode, set.true_reply_index);
}

TrainingEpisode make_episode(CandidateSet set, TargetMode mode) {
  TrainingEpisode ep;
  ep.targets = target_distribution(set, mode);
  ep.set = std::move(set);
  return ep;
}

LossAndGrad mse_loss_and_grad(const TrainingEpisode& episode, const RankerParams& params) {
  const auto& cands = episode.set.candidates;
  const std::size_t n = cands.size();
  const std::size_t m = params.m;
  if (n == 0) throw Error("mse_loss_and_grad: episode has no candidates");
  if (episode.targets.size() != n) throw ShapeError("mse_loss_and_grad: target size mismatch");
  const std::span<const float> q = episode.set.query_vec;

  std::vector<std::span<const float>> replies;
  replies.reserve(n);
  for (const auto& c : cands) replies.emplace_back(c.reply_vec);
  const auto a = preactivations(q, replies, params);

  std::vector<double> f(n * m), z(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = params.c;
    for (std::size_t j = 0; j < m; ++j) {
      f[i * m + j] = activate(params.activation, a[i * m + j]);
      acc += f[i * m + j] * params.s[j];
    }
    z[i] = acc;
    g[i] = activate(params.activation, acc);
  }
  const auto p = response_distribution(g);

  LossAndGrad out;
  out.grad = RankerParams::zeros(m, params.d_q, params.d_r, params.activation);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> dp(n);
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = p[i] - episode.targets[i];
    out.loss += diff * diff * inv_n;
    dp[i] = 2.0 * diff * inv_n;
    weighted += dp[i] * p[i];
  }

  // Softmax Jacobian: dL/dg_k = p_k (dL/dp_k - sum_i dL/dp_i p_i).
  std::vector<double> u(m * params.d_r, 0.0);  // sum_i dL/da_ij r_i
  for (std::size_t i = 0; i < n; ++i) {
    const double dg = p[i] * (dp[i] - weighted);
    const double dz = dg * activate_derivative(params.activation, z[i]);
    if (dz == 0.0) continue;
    out.grad.c += dz;
    for (std::size_t j = 0; j < m; ++j) {
      out.grad.s[j] += dz * f[i * m + j];
      const double da = dz * params.s[j] * activate_derivative(params.activation, a[i * m + j]);
      if (da == 0.0) continue;
      out.grad.b[j] += da;
      double* uj = u.data() + j * params.d_r;
      for (std::size_t k = 0; k < params.d_r; ++k) uj[k] += da * replies[i][k];
    }
  }
  // dL/dW_j = q u_j^T
  for (std::size_t j = 0; j < m; ++j) {
    auto dW = out.grad.W_block(j);
    const double* uj = u.data() + j * params.d_r;
    for (std::size_t a_idx = 0; a_idx < params.d_q; ++a_idx) {
      const double qa = q[a_idx];
      if (qa == 0.0) continue;
      double* row = dW.data() + a_idx * params.d_r;
      for (std::size_t k = 0; k < params.d_r; ++k) row[k] = qa * uj[k];
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train_ranker: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("train_ranker: epochs must be >= 1");
  if (m < 1) throw std::invalid_argument("train_ranker: m must be >= 1");
  if (gradient_clip && !(*gradient_clip > 0.0)) {
    throw std::invalid_argument("train_ranker: gradient_clip must be > 0");
  }
}

TrainResult train_ranker(std::span<const TrainingEpisode> episodes, const TrainConfig& config) {
  if (episodes.empty()) throw std::invalid_argument("train_ranker: no episodes");
  const auto& first = episodes.front().set;
  if (first.candidates.empty()) throw Error("train_ranker: episode has no candidates");
  auto initial = RankerParams::random(config.m, first.query_vec.size(),
                                      first.candidates.front().reply_vec.size(), config.activation,
                                      config.seed);
  return train_ranker(episodes, config, std::move(initial));
}

TrainResult train_ranker(std::span<const TrainingEpisode> episodes, const TrainConfig& config,
                         RankerParams initial) {
  config.validate();
  if (episodes.empty()) throw std::invalid_argument("train_ranker: no episodes");
  initial.validate();

  TrainResult result;
  result.params = std::move(initial);
  auto& params = result.params;
  std::vector<std::size_t> order(episodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed ^ 0xD1B54A32D192ED03ULL);

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    for (const auto k : order) {
      LossAndGrad lg;
      try {
        lg = mse_loss_and_grad(episodes[k], params);
      } catch (const ShapeError&) {
        throw;
      } catch (const Error& e) {
        throw TrainingError("non-finite scores at epoch " + std::to_string(epoch + 1) +
                            " (" + e.what() + "); try a smaller learning rate or gradient_clip");
      }
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                            "; try a smaller learning rate or gradient_clip");
      }
      loss_sum += lg.loss;

      double scale = config.learning_rate;
      if (config.gradient_clip) {
        double sq = lg.grad.c * lg.grad.c;
        for (double x : lg.grad.W) sq += x * x;
        for (double x : lg.grad.b) sq += x * x;
        for (double x : lg.grad.s) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm > *config.gradient_clip) scale *= *config.gradient_clip / norm;
      }
      for (std::size_t i = 0; i < params.W.size(); ++i) params.W[i] -= scale * lg.grad.W[i];
      for (std::size_t j = 0; j < params.m; ++j) {
        params.b[j] -= scale * lg.grad.b[j];
        params.s[j] -= scale * lg.grad.s[j];
      }
      params.c -= scale * lg.grad.c;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(episodes.size()));
  }
  return result;
}

std::size_t select_response(std::span<const double> p, SelectionPolicy policy, double temperature,
                            std::uint64_t seed) {
  check_probability(p);
  if (policy == SelectionPolicy::Argmax) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("select_response: temperature must be > 0");
  std::vector<double> logits(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    logits[i] = p[i] > 0.0 ? std::log(p[i]) / temperature : -std::numeric_limits<double>::infinity();
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw Error("select_response: distribution has no mass");
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += std::exp(logits[i] - mx);
    cdf[i] = acc;
  }
  Rng rng(seed);
  const double x = rng.uniform() * acc;
  auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
  if (idx == p.size()) {
    // x rounded up to the total; take the last entry with mass.
    idx = p.size() - 1;
    while (p[idx] == 0.0) --idx;
  }
  return idx;
}

const char* to_string(Activation act) { return act == Activation::Relu ? "relu" : "softplus"; }
const char* to_string(SelectionPolicy policy) {
  return policy == SelectionPolicy::Argmax ? "argmax" : "sample";
}
const char* to_string(TargetMode mode) { return mode == TargetMode::Likes ? "likes" : "one_hot"; }

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "softplus") return Activation::Softplus;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

SelectionPolicy parse_policy(std::string_view name) {
  if (name == "argmax") return SelectionPolicy::Argmax;
  if (name == "sample") return SelectionPolicy::Sample;
  throw std::invalid_argument("unknown selection policy '" + std::string(name) + "'");
}

TargetMode parse_target_mode(std::string_view name) {
  if (name == "likes") return TargetMode::Likes;
  if (name == "one_hot") return TargetMode::OneHot;
  throw std::invalid_argument("unknown target mode '" + std::string(name) + "'");
}

}  // namespace stc
