#include "stc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "stc/error.hpp"

namespace stc {

using nlohmann::json;

CorpusStats& CorpusStats::operator+=(const CorpusStats& other) noexcept {
  posts_in += other.posts_in;
  posts_kept += other.posts_kept;
  posts_dropped_no_reply += other.posts_dropped_no_reply;
  posts_dropped_no_body += other.posts_dropped_no_body;
  posts_dropped_no_title += other.posts_dropped_no_title;
  posts_dropped_noise += other.posts_dropped_noise;
  replies_kept += other.replies_kept;
  return *this;
}

namespace {

// Thrown inside the per-line parser and converted to a ParseError.
struct SchemaViolation {
  std::string reason;
};

std::string require_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaViolation{std::string("missing field '") + field + "'"};
  if (!it->is_string()) throw SchemaViolation{std::string("field '") + field + "' must be a string"};
  return it->get<std::string>();
}

std::int64_t optional_count(const json& obj, const char* field, std::size_t reply) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return 0;
  const auto where = "replies[" + std::to_string(reply) + "]." + field;
  if (!it->is_number_integer()) throw SchemaViolation{"field '" + where + "' must be an integer"};
  const auto value = it->get<std::int64_t>();
  if (value < 0) throw SchemaViolation{"field '" + where + "' must be >= 0"};
  return value;
}

Post parse_record(const json& obj) {
  if (!obj.is_object()) throw SchemaViolation{"record is not an object"};
  Post post;
  post.post_id = require_string(obj, "post_id");
  if (post.post_id.empty()) throw SchemaViolation{"field 'post_id' is empty"};
  if (post.post_id.find_first_of("\t\r\n") != std::string::npos) {
    throw SchemaViolation{"field 'post_id' contains a tab or line break"};
  }
  post.title = require_string(obj, "title");
  post.body = require_string(obj, "body");
  if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaViolation{"field 'source' must be a string"};
    post.source = it->get<std::string>();
  }
  auto replies = obj.find("replies");
  if (replies != obj.end() && !replies->is_null()) {
    if (!replies->is_array()) throw SchemaViolation{"field 'replies' must be an array"};
    std::size_t i = 0;
    for (const auto& r : *replies) {
      if (!r.is_object()) {
        throw SchemaViolation{"replies[" + std::to_string(i) + "] is not an object"};
      }
      auto text = r.find("text");
      if (text == r.end() || !text->is_string()) {
        throw SchemaViolation{"field 'replies[" + std::to_string(i) + "].text' must be a string"};
      }
      post.replies.push_back(Reply{text->get<std::string>(), optional_count(r, "likes", i),
                                   optional_count(r, "dislikes", i)});
      ++i;
    }
  }
  return post;
}

std::string lowercase_ascii(std::string_view text) {
  std::string out(text);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[i])) != prefix[i]) return false;
  }
  return true;
}

bool is_space(char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; }

}  // namespace

ParseResult parse_corpus(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    try {
      Post post = parse_record(json::parse(line));
      if (!seen.insert(post.post_id).second) {
        result.errors.push_back({line_no, "duplicate post_id '" + post.post_id + "'"});
        continue;
      }
      result.posts.push_back(std::move(post));
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, std::string("malformed record: ") + e.what()});
    } catch (const SchemaViolation& v) {
      result.errors.push_back({line_no, v.reason});
    }
  }
  return result;
}

void write_corpus(std::ostream& out, std::span<const Post> posts) {
  for (const auto& post : posts) {
    json replies = json::array();
    for (const auto& r : post.replies) {
      replies.push_back({{"text", r.text}, {"likes", r.likes}, {"dislikes", r.dislikes}});
    }
    json obj = {{"post_id", post.post_id},
                {"title", post.title},
                {"body", post.body},
                {"source", post.source},
                {"replies", std::move(replies)}};
    out << obj.dump() << '\n';
  }
}

NoiseFilter::NoiseFilter(std::vector<std::string> patterns) : patterns_(std::move(patterns)) {
  for (const auto& p : patterns_) {
    if (p.rfind("re:", 0) == 0) {
      try {
        regexes_.emplace_back(p.substr(3), std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        throw std::invalid_argument("bad noise pattern '" + p + "': " + e.what());
      }
    } else if (!p.empty()) {
      literals_.push_back(lowercase_ascii(p));
    }
  }
}

NoiseFilter NoiseFilter::from_stream(std::istream& in) {
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line) || line.front() == '#') continue;
    patterns.push_back(line);
  }
  return NoiseFilter(std::move(patterns));
}

bool NoiseFilter::matches(std::string_view text) const {
  if (literals_.empty() && regexes_.empty()) return false;
  const std::string lowered = lowercase_ascii(text);
  for (const auto& lit : literals_) {
    if (lowered.find(lit) != std::string::npos) return true;
  }
  for (const auto& re : regexes_) {
    if (std::regex_search(lowered.begin(), lowered.end(), re)) return true;
  }
  return false;
}

bool is_blank(std::string_view text) { return std::all_of(text.begin(), text.end(), is_space); }

std::string strip_markup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '<') {
      const auto close = text.find('>', i + 1);
      if (close != std::string_view::npos) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    const bool word_start = i == 0 || is_space(text[i - 1]);
    if (word_start && (starts_with_ci(text.substr(i), "http://") ||
                       starts_with_ci(text.substr(i), "https://") ||
                       starts_with_ci(text.substr(i), "www."))) {
      while (i < text.size() && !is_space(text[i])) ++i;
      continue;
    }
    out.push_back(ch);
    ++i;
  }
  return out;
}

CleanResult clean_posts(std::vector<Post> posts, const NoiseFilter& noise) {
  CleanResult result;
  result.stats.posts_in = posts.size();
  for (auto& post : posts) {
    std::erase_if(post.replies, [](const Reply& r) { return is_blank(r.text); });
    if (post.replies.empty()) {
      ++result.stats.posts_dropped_no_reply;
    } else if (is_blank(strip_markup(post.body))) {
      ++result.stats.posts_dropped_no_body;
    } else if (is_blank(post.title)) {
      ++result.stats.posts_dropped_no_title;
    } else if (noise.matches(post.title) || noise.matches(post.body)) {
      ++result.stats.posts_dropped_noise;
    } else {
      ++result.stats.posts_kept;
      result.stats.replies_kept += post.replies.size();
      result.posts.push_back(std::move(post));
    }
  }
  return result;
}

std::vector<QRPair> build_qr_pairs(std::span<const Post> posts) {
  std::vector<QRPair> pairs;
  for (const auto& post : posts) {
    for (std::size_t i = 0; i < post.replies.size(); ++i) {
      const auto& r = post.replies[i];
      pairs.push_back({post.title, r.text, post.post_id, static_cast<std::uint32_t>(i),
                       r.net_score()});
    }
  }
  return pairs;
}

Corpus::Corpus(std::vector<Post> posts) : posts_(std::move(posts)) {
  by_id_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (!by_id_.emplace(posts_[i].post_id, i).second) {
      throw Error("corpus contains duplicate post_id '" + posts_[i].post_id + "'");
    }
    reply_count_ += posts_[i].replies.size();
  }
}

const Post* Corpus::find(std::string_view post_id) const {
  auto it = by_id_.find(std::string(post_id));
  return it == by_id_.end() ? nullptr : &posts_[it->second];
}

const Post& Corpus::at(std::string_view post_id) const {
  return posts_[position(post_id)];
}

std::size_t Corpus::position(std::string_view post_id) const {
  auto it = by_id_.find(std::string(post_id));
  if (it == by_id_.end()) throw Error("unknown post_id '" + std::string(post_id) + "'");
  return it->second;
}

}  // namespace stc
