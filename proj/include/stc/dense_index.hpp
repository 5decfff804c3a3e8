#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stc/matrix.hpp"

namespace stc {

struct RetrievalHit {
  std::string post_id;
  double similarity = 0.0;
  std::size_t position = 0;  // row in the index
};

/// Exact cosine top-k over unit-normalized post title vectors. Immutable once
/// built; safe to query from many threads.
///
/// Ordering is by similarity descending, ties broken by ascending row. Rows
/// that were zero vectors at build time are kept as zero rows and always rank
/// after every non-zero row.
class DenseIndex {
 public:
  DenseIndex() = default;

  /// Normalizes each row. Throws ShapeError when the row count differs from
  /// post_ids, or when there are no rows.
  static DenseIndex build(const Matrix& vectors, std::vector<std::string> post_ids);

  /// Wraps rows that are already normalized, as stored in a bundle.
  static DenseIndex from_normalized(Matrix rows, std::vector<std::string> post_ids);

  /// Returns min(k1, size()) hits. Throws Error on an empty index and
  /// std::invalid_argument when k1 == 0.
  std::vector<RetrievalHit> retrieve(std::span<const float> query, std::size_t k1) const;

  std::size_t size() const noexcept { return post_ids_.size(); }
  std::size_t dim() const noexcept { return rows_.cols(); }
  const Matrix& rows() const noexcept { return rows_; }
  const std::vector<std::string>& post_ids() const noexcept { return post_ids_; }
  bool is_zero_row(std::size_t i) const { return zero_rows_.at(i) != 0; }

 private:
  void flag_zero_rows();

  Matrix rows_;
  std::vector<std::string> post_ids_;
  std::vector<unsigned char> zero_rows_;
};

}  // namespace stc
