#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "stc/error.hpp"
#include "stc/ranker.hpp"
#include "stc/rng.hpp"

using namespace stc;

namespace {

TrainingEpisode episode(std::vector<float> q, std::vector<std::vector<float>> replies,
                        std::vector<std::int64_t> nets, TargetMode mode,
                        std::optional<std::size_t> truth = std::nullopt) {
  CandidateSet set;
  set.query_vec = std::move(q);
  for (std::size_t i = 0; i < replies.size(); ++i) {
    Candidate c;
    c.reply_vec = replies[i];
    c.net_score = i < nets.size() ? nets[i] : 0;
    set.candidates.push_back(c);
  }
  set.true_reply_index = truth;
  return make_episode(std::move(set), mode);
}

std::vector<TrainingEpisode> random_episodes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingEpisode> eps;
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<float> q(6);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    std::vector<std::vector<float>> replies(4, std::vector<float>(5));
    std::vector<std::int64_t> nets;
    for (auto& r : replies) {
      for (auto& x : r) x = static_cast<float>(rng.normal());
      nets.push_back(static_cast<std::int64_t>(rng.below(9)) - 2);
    }
    eps.push_back(episode(q, replies, nets, TargetMode::Likes));
  }
  return eps;
}

}  // namespace

TEST_CASE("activations") {
  CHECK(activate(Activation::Relu, -2.0) == 0.0);
  CHECK(activate(Activation::Relu, 1.5) == 1.5);
  CHECK(activate_derivative(Activation::Relu, 0.0) == 0.0);
  CHECK(activate_derivative(Activation::Relu, 0.1) == 1.0);
  CHECK(activate(Activation::Softplus, -1.0) == doctest::Approx(0.3132616875182228));
  CHECK(activate(Activation::Softplus, 800.0) == doctest::Approx(800.0));
  CHECK(activate(Activation::Softplus, -800.0) >= 0.0);
  CHECK(std::isfinite(activate(Activation::Softplus, -800.0)));
  CHECK(activate_derivative(Activation::Softplus, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("relational_features") {
  auto p = RankerParams::zeros(1, 2, 2, Activation::Relu);
  p.W = {0, 1, 0, 0};
  CHECK(relational_features(std::vector<float>{1, 0}, std::vector<float>{0, 1}, p) == std::vector<double>{1.0});
  p.W = {0, 0, 0, 0};
  p.b = {-1};
  CHECK(relational_features(std::vector<float>{1, 0}, std::vector<float>{0, 1}, p) == std::vector<double>{0.0});
  p.activation = Activation::Softplus;
  CHECK(relational_features(std::vector<float>{1, 0}, std::vector<float>{0, 1}, p)[0] ==
        doctest::Approx(std::log1p(std::exp(-1.0))));
  CHECK_THROWS_AS(relational_features(std::vector<float>{1}, std::vector<float>{0, 1}, p), ShapeError);
  CHECK_THROWS_AS(relational_features(std::vector<float>{1, 0}, std::vector<float>{0, 1, 2}, p), ShapeError);
}

TEST_CASE("relational_features with rectangular W") {
  auto p = RankerParams::zeros(2, 3, 2, Activation::Relu);
  // W_0 = [[1,0],[0,0],[0,0]], W_1 = [[0,0],[0,0],[0,2]]
  p.W = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2};
  const auto f = relational_features(std::vector<float>{2, 0, 3}, std::vector<float>{4, 5}, p);
  CHECK(f == std::vector<double>{8.0, 30.0});
}

TEST_CASE("candidate_scores") {
  auto p = RankerParams::zeros(2, 2, 2, Activation::Relu);
  p.W = {1, 0, 0, 0, 0, 0, 0, 0};
  p.s = {0.5, 2};
  p.c = 0.5;
  const std::vector<std::vector<float>> replies = {{1, 0}, {0, 1}, {3, 0}};
  const auto g = candidate_scores(std::vector<float>{1, 0}, replies, p);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(0.5));
  CHECK(g[2] == doctest::Approx(2.0));
  const auto zero = RankerParams::zeros(3, 2, 2, Activation::Relu);
  CHECK(candidate_scores(std::vector<float>{1, 0}, replies, zero) == std::vector<double>{0, 0, 0});
}

TEST_CASE("response_distribution") {
  const auto half = response_distribution(std::vector<double>{0, 0});
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);
  const auto p = response_distribution(std::vector<double>{std::log(2.0), 0});
  CHECK(p[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(response_distribution(std::vector<double>{42}) == std::vector<double>{1.0});
  const auto big = response_distribution(std::vector<double>{1000, 999});
  CHECK(big[0] == doctest::Approx(1 / (1 + std::exp(-1.0))));
  CHECK_THROWS_AS(response_distribution(std::vector<double>{}), Error);
  CHECK_THROWS_AS(response_distribution(std::vector<double>{1, NAN}), Error);
  CHECK_THROWS_AS(response_distribution(std::vector<double>{INFINITY, 0}), Error);
}

TEST_CASE("target_distribution") {
  CHECK(target_distribution(std::vector<std::int64_t>{3, 1, 0}, TargetMode::Likes) == std::vector<double>{0.75, 0.25, 0});
  CHECK(target_distribution(std::vector<std::int64_t>{-2, -5}, TargetMode::Likes) == std::vector<double>{0.5, 0.5});
  CHECK(target_distribution(std::vector<std::int64_t>{4, -3}, TargetMode::Likes) == std::vector<double>{1, 0});
  CHECK(target_distribution(std::vector<std::int64_t>{-1}, TargetMode::Likes) == std::vector<double>{1});
  CHECK(target_distribution(std::vector<std::int64_t>{0, 0, 0, 0}, TargetMode::OneHot, 2) ==
        std::vector<double>{0, 0, 1, 0});
  CHECK_THROWS_AS(target_distribution(std::vector<std::int64_t>{1, 2}, TargetMode::OneHot), Error);
  CHECK_THROWS_AS(target_distribution(std::vector<std::int64_t>{1, 2}, TargetMode::OneHot, 2), Error);
  CHECK_THROWS_AS(target_distribution(std::vector<std::int64_t>{}, TargetMode::Likes), Error);
}

TEST_CASE("mse_loss_and_grad examples") {
  SUBCASE("p equals t") {
    const auto ep = episode({1}, {{1}, {1}}, {1, 1}, TargetMode::Likes);
    const auto r = mse_loss_and_grad(ep, RankerParams::random(2, 1, 1, Activation::Softplus, 3));
    CHECK(r.loss == doctest::Approx(0.0));
  }
  SUBCASE("opposite distributions") {
    auto p = RankerParams::zeros(1, 1, 1, Activation::Relu);
    p.W = {100};
    p.s = {1};
    const auto ep = episode({1}, {{1}, {0}}, {}, TargetMode::OneHot, 1);
    CHECK(mse_loss_and_grad(ep, p).loss == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("shape mismatch") {
    const auto ep = episode({1, 2}, {{1}}, {}, TargetMode::Likes);
    CHECK_THROWS_AS(mse_loss_and_grad(ep, RankerParams::zeros(1, 3, 1, Activation::Relu)), ShapeError);
  }
}

TEST_CASE("gradients match finite differences") {
  Rng rng(404);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t dq = 1 + rng.below(5), dr = 1 + rng.below(5), m = 1 + rng.below(3);
    auto p = RankerParams::random(m, dq, dr, Activation::Softplus, 100 + inst);
    for (auto& w : p.W) w *= 10;
    std::vector<float> q(dq);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    std::vector<std::vector<float>> replies(1 + rng.below(5), std::vector<float>(dr));
    std::vector<std::int64_t> nets;
    for (auto& r : replies) {
      for (auto& x : r) x = static_cast<float>(rng.normal());
      nets.push_back(static_cast<std::int64_t>(rng.below(6)) - 1);
    }
    const auto ep = episode(q, replies, nets, TargetMode::Likes);
    const auto grad = mse_loss_and_grad(ep, p).grad;
    const double h = 1e-5;
    const auto fd = [&](double& slot) {
      const double saved = slot;
      slot = saved + h;
      const double up = mse_loss_and_grad(ep, p).loss;
      slot = saved - h;
      const double down = mse_loss_and_grad(ep, p).loss;
      slot = saved;
      return (up - down) / (2 * h);
    };
    for (std::size_t k = 0; k < p.W.size(); ++k) CHECK(grad.W[k] == doctest::Approx(fd(p.W[k])).epsilon(1e-4).scale(1e-6));
    for (std::size_t k = 0; k < m; ++k) CHECK(grad.b[k] == doctest::Approx(fd(p.b[k])).epsilon(1e-4).scale(1e-6));
    for (std::size_t k = 0; k < m; ++k) CHECK(grad.s[k] == doctest::Approx(fd(p.s[k])).epsilon(1e-4).scale(1e-6));
    CHECK(grad.c == doctest::Approx(fd(p.c)).epsilon(1e-4).scale(1e-6));
  }
}

TEST_CASE("train_ranker") {
  const auto eps = random_episodes(50, 12);
  TrainConfig cfg;
  cfg.m = 4;
  cfg.seed = 6;
  SUBCASE("deterministic") {
    const auto a = train_ranker(eps, cfg);
    const auto b = train_ranker(eps, cfg);
    CHECK(a.params == b.params);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.epoch_losses.size() == cfg.epochs);
    cfg.seed = 7;
    CHECK_FALSE(train_ranker(eps, cfg).params == a.params);
  }
  SUBCASE("loss decreases over 30 epochs") {
    cfg.learning_rate = 0.5;
    const auto r = train_ranker(eps, cfg);
    CHECK(r.epoch_losses.back() < r.epoch_losses.front());
  }
  SUBCASE("initialization ranges") {
    const auto init = RankerParams::random(4, 6, 5, Activation::Relu, 6);
    for (double w : init.W) CHECK(std::abs(w) < 0.05);
    for (double s : init.s) CHECK(std::abs(s) < 0.05);
    CHECK(init.b == std::vector<double>(4, 0.0));
    CHECK(init.c == 0.0);
  }
  SUBCASE("continues from given parameters") {
    cfg.epochs = 2;
    const auto first = train_ranker(eps, cfg);
    const auto more = train_ranker(eps, cfg, first.params);
    CHECK_FALSE(more.params == first.params);
  }
  SUBCASE("gradient clipping bounds each step") {
    cfg.epochs = 1;
    cfg.learning_rate = 1.0;
    cfg.gradient_clip = 1e-3;
    const auto init = RankerParams::random(4, 6, 5, Activation::Relu, 6);
    const auto one = train_ranker(std::span(eps).first(1), cfg, init);
    double moved = 0;
    for (std::size_t k = 0; k < init.W.size(); ++k) moved += std::pow(one.params.W[k] - init.W[k], 2);
    for (std::size_t k = 0; k < 4; ++k) {
      moved += std::pow(one.params.b[k] - init.b[k], 2) + std::pow(one.params.s[k] - init.s[k], 2);
    }
    moved += std::pow(one.params.c - init.c, 2);
    CHECK(std::sqrt(moved) <= 1e-3 + 1e-12);
  }
  SUBCASE("bad config") {
    cfg.learning_rate = 0;
    CHECK_THROWS(train_ranker(eps, cfg));
    cfg.learning_rate = 0.1;
    cfg.epochs = 0;
    CHECK_THROWS(train_ranker(eps, cfg));
    cfg.epochs = 1;
    CHECK_THROWS(train_ranker(std::vector<TrainingEpisode>{}, cfg));
  }
}

TEST_CASE("divergence is reported") {
  const auto eps = fixtures::planted_signal_episodes(20, 5, 8, 4, 1);
  TrainConfig cfg;
  cfg.target_mode = TargetMode::OneHot;
  cfg.activation = Activation::Softplus;
  auto init = RankerParams::random(cfg.m, 8, 4, Activation::Softplus, 2);
  for (auto& w : init.W) w = 1e300;
  for (auto& s : init.s) s = 1e300;
  CHECK_THROWS_AS(train_ranker(eps, cfg, init), TrainingError);
}

TEST_CASE("select_response") {
  CHECK(select_response(std::vector<double>{0.1, 0.7, 0.2}, SelectionPolicy::Argmax) == 1);
  CHECK(select_response(std::vector<double>{0.5, 0.5}, SelectionPolicy::Argmax) == 0);
  CHECK_THROWS(select_response(std::vector<double>{}, SelectionPolicy::Argmax));
  CHECK_THROWS(select_response(std::vector<double>{1.0}, SelectionPolicy::Sample, 0.0));

  const std::vector<double> p = {0.3, 0.7};
  CHECK(select_response(p, SelectionPolicy::Sample, 1.0, 99) == select_response(p, SelectionPolicy::Sample, 1.0, 99));
  int ones = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) ones += select_response(p, SelectionPolicy::Sample, 1.0, seed) == 1;
  CHECK(std::abs(ones / 10000.0 - 0.7) <= 0.02);

  // Low temperature approaches argmax, high temperature approaches uniform.
  int cold = 0, hot = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    cold += select_response(p, SelectionPolicy::Sample, 0.05, seed) == 1;
    hot += select_response(p, SelectionPolicy::Sample, 100.0, seed) == 1;
  }
  CHECK(cold == 2000);
  CHECK(std::abs(hot / 2000.0 - 0.5) < 0.05);

  const std::vector<double> with_zero = {0.0, 1.0, 0.0};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CHECK(select_response(with_zero, SelectionPolicy::Sample, 1.0, seed) == 1);
  }
}

TEST_CASE("argmax is invariant to scaling s when c = 0") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = RankerParams::random(3, 4, 3, Activation::Relu, 500 + trial);
    for (auto& w : p.W) w *= 20;
    std::vector<float> q(4);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    std::vector<std::vector<float>> replies(6, std::vector<float>(3));
    for (auto& r : replies) {
      for (auto& x : r) x = static_cast<float>(rng.normal());
    }
    const auto g = candidate_scores(q, replies, p);
    auto scaled = p;
    const double alpha = rng.uniform(0.1, 10.0);
    for (auto& s : scaled.s) s *= alpha;
    const auto g2 = candidate_scores(q, replies, scaled);
    CHECK(select_response(response_distribution(g), SelectionPolicy::Argmax) ==
          select_response(response_distribution(g2), SelectionPolicy::Argmax));
  }
}

TEST_CASE("RankerParams validation and rounding") {
  auto p = RankerParams::random(2, 3, 4, Activation::Relu, 1);
  CHECK(p.parameter_count() == 2 * 3 * 4 + 2 + 2 + 1);
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.W.pop_back();
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  bad = p;
  bad.c = NAN;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS(RankerParams::zeros(0, 3, 4, Activation::Relu));

  auto r = p;
  r.W[0] = 0.1;
  r.round_to_float();
  CHECK(r.W[0] == static_cast<double>(0.1f));
}

TEST_CASE("enum names round-trip") {
  for (auto a : {Activation::Relu, Activation::Softplus}) CHECK(parse_activation(to_string(a)) == a);
  for (auto s : {SelectionPolicy::Argmax, SelectionPolicy::Sample}) CHECK(parse_policy(to_string(s)) == s);
  for (auto t : {TargetMode::Likes, TargetMode::OneHot}) CHECK(parse_target_mode(to_string(t)) == t);
  CHECK_THROWS(parse_policy("greedy"));
}
