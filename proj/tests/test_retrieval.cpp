#include <doctest.h>

#include <cmath>
#include <set>

#include "stc/dense_index.hpp"
#include "stc/error.hpp"
#include "stc/rng.hpp"

using namespace stc;

namespace {

Matrix rows(std::vector<std::vector<float>> r) {
  Matrix m(r.size(), r.at(0).size());
  for (std::size_t i = 0; i < r.size(); ++i) std::copy(r[i].begin(), r[i].end(), m.row(i).begin());
  return m;
}

}  // namespace

TEST_CASE("build_index") {
  const auto idx = DenseIndex::build(rows({{3, 4}, {0, 0}, {1, 0}}), {"a", "b", "c"});
  CHECK(idx.size() == 3);
  CHECK(idx.dim() == 2);
  CHECK(idx.is_zero_row(1));
  CHECK_FALSE(idx.is_zero_row(0));
  CHECK(idx.rows().row(0)[0] == doctest::Approx(0.6));
  CHECK(idx.rows().row(0)[1] == doctest::Approx(0.8));
  CHECK(idx.rows().row(1)[0] == 0.0f);
  for (std::size_t i : {0u, 2u}) CHECK(std::abs(l2_norm(idx.rows().row(i)) - 1.0) < 1e-6);

  const auto again = DenseIndex::build(rows({{3, 4}, {0, 0}, {1, 0}}), {"a", "b", "c"});
  CHECK(again.rows() == idx.rows());
  CHECK(again.post_ids() == idx.post_ids());

  CHECK_THROWS_AS(DenseIndex::build(rows({{1, 0}}), {"a", "b"}), ShapeError);
  CHECK_THROWS_AS(DenseIndex::build(Matrix(), {}), ShapeError);
}

TEST_CASE("retrieve") {
  const auto idx = DenseIndex::build(rows({{1, 0}, {0, 0}, {1, 1}, {0, 1}, {2, 0}}), {"a", "z", "b", "c", "d"});
  SUBCASE("identity") {
    const auto hits = idx.retrieve(std::vector<float>{0, 5}, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].post_id == "c");
    CHECK(hits[0].similarity == doctest::Approx(1.0));
  }
  SUBCASE("ties by position and zero rows last") {
    const auto hits = idx.retrieve(std::vector<float>{1, 0}, 10);
    REQUIRE(hits.size() == 5);
    CHECK(hits[0].post_id == "a");
    CHECK(hits[1].post_id == "d");
    CHECK(hits[2].post_id == "b");
    CHECK(hits[4].post_id == "z");
    CHECK(hits[3].similarity == doctest::Approx(0.0));
  }
  SUBCASE("zero row ranks after negative similarity") {
    const auto hits = idx.retrieve(std::vector<float>{-1, 0}, 5);
    CHECK(hits.back().post_id == "z");
    CHECK(hits[3].similarity < 0.0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(idx.retrieve(std::vector<float>{1, 0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(idx.retrieve(std::vector<float>{1, 0, 0}, 1), ShapeError);
    CHECK_THROWS_AS(DenseIndex().retrieve(std::vector<float>{1}, 1), Error);
  }
}

TEST_CASE("retrieve properties on random indexes") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(200), d = 1 + rng.below(16);
    Matrix m(n, d);
    for (auto& x : m.data()) x = static_cast<float>(rng.normal());
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    const auto idx = DenseIndex::build(m, ids);
    std::vector<float> q(d);
    for (auto& x : q) x = static_cast<float>(rng.normal());
    const std::size_t k = 1 + rng.below(2 * n);
    const auto hits = idx.retrieve(q, k);
    CHECK(hits.size() == std::min(k, n));
    std::set<std::string> seen;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(hits[i].post_id == ids[hits[i].position]);
      seen.insert(hits[i].post_id);
      if (i > 0) CHECK(hits[i].similarity <= hits[i - 1].similarity);
    }
    CHECK(seen.size() == hits.size());
  }
}
