#include "stc/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace stc {

double SparseVector::norm() const {
  double acc = 0.0;
  for (const auto& [id, w] : entries) acc += w * w;
  return std::sqrt(acc);
}

double dot(const SparseVector& u, const SparseVector& v) {
  double acc = 0.0;
  auto a = u.entries.begin();
  auto b = v.entries.begin();
  while (a != u.entries.end() && b != v.entries.end()) {
    if (a->first < b->first) {
      ++a;
    } else if (b->first < a->first) {
      ++b;
    } else {
      acc += a->second * b->second;
      ++a;
      ++b;
    }
  }
  return acc;
}

double cosine(const SparseVector& u, const SparseVector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot(u, v) / (nu * nv);
}

TfIdfModel TfIdfModel::fit(std::span<const std::vector<std::string>> docs) {
  if (docs.empty()) throw std::invalid_argument("fit_tfidf: no documents");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      if (seen.insert(t).second) ++counts[t];
    }
  }
  return TfIdfModel(docs.size(), {counts.begin(), counts.end()});
}

TfIdfModel::TfIdfModel(std::uint64_t document_count,
                       std::vector<std::pair<std::string, std::uint64_t>> document_frequencies)
    : n_docs_(document_count) {
  if (n_docs_ == 0) throw std::invalid_argument("tf-idf model needs N >= 1");
  std::sort(document_frequencies.begin(), document_frequencies.end());
  terms_.reserve(document_frequencies.size());
  dfs_.reserve(document_frequencies.size());
  for (auto& [term, df] : document_frequencies) {
    if (df < 1 || df > n_docs_) {
      throw std::invalid_argument("df(" + term + ") = " + std::to_string(df) +
                                  " outside [1, N]");
    }
    if (!terms_.empty() && terms_.back() == term) {
      throw std::invalid_argument("duplicate tf-idf term '" + term + "'");
    }
    terms_.push_back(std::move(term));
    dfs_.push_back(df);
  }
  index_terms();
}

void TfIdfModel::index_terms() {
  index_.clear();
  idfs_.resize(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    index_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    idfs_[i] = std::log(static_cast<double>(n_docs_) / static_cast<double>(dfs_[i]));
  }
}

std::optional<std::uint64_t> TfIdfModel::df(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return dfs_[it->second];
}

double TfIdfModel::idf(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? 0.0 : idfs_[it->second];
}

SparseVector TfIdfModel::vectorize(std::span<const std::string> tokens) const {
  std::map<std::uint32_t, std::uint64_t> tf;
  for (const auto& t : tokens) {
    if (auto it = index_.find(t); it != index_.end()) ++tf[it->second];
  }
  SparseVector v;
  v.entries.reserve(tf.size());
  for (const auto& [id, count] : tf) {
    v.entries.emplace_back(id, static_cast<double>(count) * idfs_[id]);
  }
  return v;
}

std::vector<std::pair<std::string, double>> TfIdfModel::named(const SparseVector& v) const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(v.entries.size());
  for (const auto& [id, w] : v.entries) out.emplace_back(terms_.at(id), w);
  return out;
}

}  // namespace stc
