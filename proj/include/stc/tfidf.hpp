#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace stc {

/// Sparse vector keyed by term id, entries sorted by id with no duplicates.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const noexcept { return entries.empty(); }
  double norm() const;
};

double dot(const SparseVector& u, const SparseVector& v);

/// Zero when either vector has zero norm.
double cosine(const SparseVector& u, const SparseVector& v);

/// Raw-count TF-IDF with idf(t) = ln(N / df(t)) and no smoothing.
class TfIdfModel {
 public:
  TfIdfModel() = default;

  /// Throws std::invalid_argument when docs is empty.
  static TfIdfModel fit(std::span<const std::vector<std::string>> docs);

  /// Restores a fitted model. Each df must satisfy 1 <= df <= document_count.
  TfIdfModel(std::uint64_t document_count,
             std::vector<std::pair<std::string, std::uint64_t>> document_frequencies);

  std::uint64_t document_count() const noexcept { return n_docs_; }
  std::size_t term_count() const noexcept { return terms_.size(); }

  std::optional<std::uint64_t> df(std::string_view token) const;
  /// ln(N / df), or 0 for a token never seen during fitting.
  double idf(std::string_view token) const;

  /// weight(t) = count of t in tokens * idf(t). Unseen tokens are omitted,
  /// which is the same as giving them weight 0.
  SparseVector vectorize(std::span<const std::string> tokens) const;

  /// The vector's entries by term, in term order.
  std::vector<std::pair<std::string, double>> named(const SparseVector& v) const;

  /// Terms in id order (lexicographic) with their document frequencies.
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  const std::vector<std::uint64_t>& document_frequencies() const noexcept { return dfs_; }

 private:
  void index_terms();

  std::uint64_t n_docs_ = 0;
  std::vector<std::string> terms_;
  std::vector<std::uint64_t> dfs_;
  std::vector<double> idfs_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace stc
