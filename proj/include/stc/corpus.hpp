#pragma once

// Forum corpus records, the cleaning filters that turn raw dumps into
// question/response knowledge, and the line-delimited corpus format.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stc {

struct Reply {
  std::string text;
  std::int64_t likes = 0;
  std::int64_t dislikes = 0;

  std::int64_t net_score() const noexcept { return likes - dislikes; }
  bool operator==(const Reply&) const = default;
};

struct Post {
  std::string post_id;
  std::string title;
  std::string body;
  std::string source;
  std::vector<Reply> replies;

  bool operator==(const Post&) const = default;
};

/// One (title, reply) unit. net_score is likes - dislikes, never clamped here.
struct QRPair {
  std::string query_text;
  std::string response_text;
  std::string post_id;
  std::uint32_t reply_index = 0;
  std::int64_t net_score = 0;
};

struct CorpusStats {
  std::size_t posts_in = 0;
  std::size_t posts_kept = 0;
  std::size_t posts_dropped_no_reply = 0;
  std::size_t posts_dropped_no_body = 0;
  std::size_t posts_dropped_no_title = 0;
  std::size_t posts_dropped_noise = 0;
  std::size_t replies_kept = 0;

  std::size_t dropped() const noexcept {
    return posts_dropped_no_reply + posts_dropped_no_body + posts_dropped_no_title +
           posts_dropped_noise;
  }
  bool balanced() const noexcept { return posts_in == posts_kept + dropped(); }

  /// Field-wise merge for partitioned ingestion.
  CorpusStats& operator+=(const CorpusStats& other) noexcept;
  bool operator==(const CorpusStats&) const = default;
};

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct ParseResult {
  std::vector<Post> posts;
  std::vector<ParseError> errors;
};

/// Parses one JSON object per line. Blank lines are skipped. Malformed lines
/// and duplicate post ids become ParseErrors; the stream is never aborted.
ParseResult parse_corpus(std::istream& in);

/// Serializes posts in the same line-delimited format parse_corpus reads.
void write_corpus(std::ostream& out, std::span<const Post> posts);

/// Case-insensitive advertisement/noise detector. Each pattern is a literal
/// substring, or a regular expression when prefixed with "re:".
class NoiseFilter {
 public:
  NoiseFilter() = default;
  explicit NoiseFilter(std::vector<std::string> patterns);

  /// One pattern per line; blank lines and lines starting with '#' are ignored.
  static NoiseFilter from_stream(std::istream& in);

  bool matches(std::string_view text) const;
  const std::vector<std::string>& patterns() const noexcept { return patterns_; }

 private:
  std::vector<std::string> patterns_;
  std::vector<std::string> literals_;  // lowercased
  std::vector<std::regex> regexes_;
};

/// True when the text is empty or whitespace only.
bool is_blank(std::string_view text);

/// Removes <...> markup and URLs; what remains is the post's textual content.
std::string strip_markup(std::string_view text);

struct CleanResult {
  std::vector<Post> posts;
  CorpusStats stats;
};

/// Drops posts with no usable replies, no textual body, an empty title, or
/// noise in the title/body. Blank replies are removed first. Every input post
/// is counted in exactly one stats bucket.
CleanResult clean_posts(std::vector<Post> posts, const NoiseFilter& noise);

/// One pair per (post, reply); reply_index is the reply's position in the post.
std::vector<QRPair> build_qr_pairs(std::span<const Post> posts);

/// Cleaned posts with lookup by id.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Post> posts);

  std::span<const Post> posts() const noexcept { return posts_; }
  std::size_t size() const noexcept { return posts_.size(); }
  std::size_t reply_count() const noexcept { return reply_count_; }

  /// nullptr when the id is unknown.
  const Post* find(std::string_view post_id) const;
  const Post& at(std::string_view post_id) const;
  std::size_t position(std::string_view post_id) const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t reply_count_ = 0;
};

}  // namespace stc
