#include "stc/dense_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stc/error.hpp"

namespace stc {

DenseIndex DenseIndex::build(const Matrix& vectors, std::vector<std::string> post_ids) {
  if (vectors.rows() != post_ids.size()) {
    throw ShapeError("build_index: " + std::to_string(vectors.rows()) + " vectors but " +
                     std::to_string(post_ids.size()) + " post ids");
  }
  if (post_ids.empty()) throw ShapeError("build_index: no vectors");
  Matrix rows = vectors;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto row = rows.row(i);
    const double n = l2_norm(row);
    if (n == 0.0) continue;
    for (auto& x : row) x = static_cast<float>(x / n);
  }
  return from_normalized(std::move(rows), std::move(post_ids));
}

DenseIndex DenseIndex::from_normalized(Matrix rows, std::vector<std::string> post_ids) {
  if (rows.rows() != post_ids.size()) {
    throw ShapeError("index has " + std::to_string(rows.rows()) + " rows but " +
                     std::to_string(post_ids.size()) + " post ids");
  }
  DenseIndex index;
  index.rows_ = std::move(rows);
  index.post_ids_ = std::move(post_ids);
  index.flag_zero_rows();
  return index;
}

void DenseIndex::flag_zero_rows() {
  zero_rows_.assign(rows_.rows(), 0);
  for (std::size_t i = 0; i < rows_.rows(); ++i) {
    const auto row = rows_.row(i);
    zero_rows_[i] = std::all_of(row.begin(), row.end(), [](float x) { return x == 0.0f; });
  }
}

std::vector<RetrievalHit> DenseIndex::retrieve(std::span<const float> query, std::size_t k1) const {
  if (post_ids_.empty()) throw Error("retrieve: empty index");
  if (k1 == 0) throw std::invalid_argument("retrieve: k1 must be >= 1");
  if (query.size() != dim()) {
    throw ShapeError("retrieve: query has dimension " + std::to_string(query.size()) +
                     ", index has " + std::to_string(dim()));
  }
  const double qn = l2_norm(query);
  std::vector<double> sims(size(), 0.0);
  if (qn > 0.0) {
    for (std::size_t i = 0; i < size(); ++i) sims[i] = dot(query, rows_.row(i)) / qn;
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(k1, size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (zero_rows_[a] != zero_rows_[b]) return zero_rows_[a] < zero_rows_[b];
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return a < b;
                    });
  std::vector<RetrievalHit> hits;
  hits.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const auto i = order[r];
    hits.push_back({post_ids_[i], sims[i], i});
  }
  return hits;
}

}  // namespace stc
