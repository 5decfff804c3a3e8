#include "stc/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "stc/binary_io.hpp"
#include "stc/error.hpp"
#include "stc/tokenizer.hpp"

namespace stc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>) {
      out = static_cast<T>(std::stod(value, &used));
    } else {
      if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
      out = static_cast<T>(std::stoull(value, &used));
    }
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key);
  }
}

const char* to_string(MatchField f) { return f == MatchField::Title ? "title" : "title_body"; }

MatchField parse_match_field(std::string_view s) {
  if (s == "title") return MatchField::Title;
  if (s == "title_body") return MatchField::TitleBody;
  throw std::invalid_argument("unknown match_field '" + std::string(s) + "'");
}

json pvdm_config_json(const PvdmConfig& c) {
  return {{"dim", c.dim},
          {"window", c.window},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"negative", c.negative},
          {"min_count", c.min_count},
          {"seed", c.seed},
          {"threads", c.threads},
          {"infer_steps", c.infer_steps}};
}

PvdmConfig pvdm_config_from_json(const json& j) {
  PvdmConfig c;
  c.dim = j.at("dim").get<std::uint32_t>();
  c.window = j.at("window").get<std::uint32_t>();
  c.epochs = j.at("epochs").get<std::uint32_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.negative = j.at("negative").get<std::uint32_t>();
  c.min_count = j.at("min_count").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<std::uint32_t>();
  c.infer_steps = j.at("infer_steps").get<std::uint32_t>();
  return c;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const fs::path& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw LoadError(name, "missing or unreadable");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::pair<std::string, std::uint64_t> split_count_line(const std::string& line,
                                                       const std::string& name) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) throw LoadError(name, "malformed line '" + line + "'");
  try {
    std::size_t used = 0;
    const std::string count = line.substr(tab + 1);
    const auto n = std::stoull(count, &used);
    if (used != count.size()) throw std::invalid_argument("trailing");
    return {line.substr(0, tab), n};
  } catch (const std::exception&) {
    throw LoadError(name, "malformed count in line '" + line + "'");
  }
}

void save_pvdm(const PvdmModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> vocab_lines;
  vocab_lines.reserve(model.vocab().size());
  for (std::uint32_t i = 0; i < model.vocab().size(); ++i) {
    vocab_lines.push_back(model.vocab().token(i) + "\t" + std::to_string(model.vocab().frequency(i)));
  }
  write_lines(dir / "vocab.txt", vocab_lines);
  write_lines(dir / "doc_ids.txt", model.doc_ids());
  write_matrix(dir / "vectors.bin", model.doc_vectors());
  write_matrix(dir / "words.bin", model.word_vectors());
  write_matrix(dir / "output.bin", model.output_weights());
}

PvdmModel load_pvdm(const fs::path& root, const std::string& sub, const json& meta) {
  const fs::path dir = root / sub;
  const auto name = [&](const char* f) { return sub + "/" + f; };

  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (const auto& line : read_lines(dir / "vocab.txt", name("vocab.txt"))) {
    if (!line.empty()) entries.push_back(split_count_line(line, name("vocab.txt")));
  }
  PvdmConfig config;
  try {
    config = pvdm_config_from_json(meta.at("config"));
  } catch (const json::exception& e) {
    throw LoadError("manifest", std::string("bad ") + sub + " model config: " + e.what());
  }
  Vocabulary vocab;
  try {
    vocab = Vocabulary::from_entries(std::move(entries), config.min_count);
  } catch (const std::invalid_argument& e) {
    throw LoadError(name("vocab.txt"), e.what());
  }
  auto doc_ids = read_lines(dir / "doc_ids.txt", name("doc_ids.txt"));
  const auto read_mat = [&](const char* f) {
    try {
      return read_matrix(dir / f);
    } catch (const LoadError& e) {
      throw LoadError(name(f), e.reason());
    }
  };
  Matrix docs = read_mat("vectors.bin");
  Matrix words = read_mat("words.bin");
  Matrix output = read_mat("output.bin");
  if (docs.cols() != config.dim) {
    throw LoadError(name("vectors.bin"), "dimension " + std::to_string(docs.cols()) +
                                             " does not match manifest dim " +
                                             std::to_string(config.dim));
  }
  if (docs.rows() != doc_ids.size()) {
    throw LoadError(name("vectors.bin"), "row count does not match doc_ids.txt");
  }
  if (words.rows() != vocab.size() || words.cols() != config.dim) {
    throw LoadError(name("words.bin"), "shape does not match vocab.txt and manifest dim");
  }
  if (output.rows() != vocab.size() || output.cols() != config.dim) {
    throw LoadError(name("output.bin"), "shape does not match vocab.txt and manifest dim");
  }
  auto losses = meta.value("epoch_losses", std::vector<double>{});
  return PvdmModel(config, std::move(vocab), std::move(words), std::move(output), std::move(docs),
                   std::move(doc_ids), std::move(losses));
}

json pvdm_meta(const PvdmModel& model) {
  return {{"config", pvdm_config_json(model.config())},
          {"vocab_size", model.vocab().size()},
          {"documents", model.doc_ids().size()},
          {"degenerate_docs", model.degenerate_docs()},
          {"epoch_losses", model.epoch_losses()}};
}

}  // namespace

void PipelineConfig::validate() const {
  if (k1 < 1 || k2 < 1 || cap < 1) throw std::invalid_argument("config: k1, k2 and cap must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("config: temperature must be > 0");
}

PipelineConfig parse_pipeline_config(std::istream& in, PipelineConfig config) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: expected key = value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "k1") {
      config.k1 = parse_number<std::size_t>(key, value);
    } else if (key == "k2") {
      config.k2 = parse_number<std::size_t>(key, value);
    } else if (key == "cap") {
      config.cap = parse_number<std::size_t>(key, value);
    } else if (key == "match_field") {
      config.match_field = parse_match_field(value);
    } else if (key == "policy") {
      config.policy = parse_policy(value);
    } else if (key == "temperature") {
      config.temperature = parse_number<double>(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

void write_pipeline_config(std::ostream& out, const PipelineConfig& c) {
  std::ostringstream temp;
  temp.precision(17);
  temp << c.temperature;
  out << "k1 = " << c.k1 << '\n'
      << "k2 = " << c.k2 << '\n'
      << "cap = " << c.cap << '\n'
      << "match_field = " << to_string(c.match_field) << '\n'
      << "policy = " << to_string(c.policy) << '\n'
      << "temperature = " << temp.str() << '\n';
}

bool EngineBundle::servable() const noexcept {
  return corpus.size() > 0 && title_model && reply_model && tfidf && index && ranker;
}

void EngineBundle::require_servable() const {
  if (corpus.size() == 0) throw Error("bundle has an empty corpus");
  if (!title_model || !reply_model || !tfidf) {
    throw Error("bundle has no embeddings; run train-embeddings first");
  }
  if (!index) throw Error("bundle has no index; run build-index first");
  if (!ranker) throw Error("bundle has no ranker; run train-ranker first");
}

void EngineBundle::check_consistency() const {
  if (index) {
    for (const auto& id : index->post_ids()) {
      if (!corpus.find(id)) throw Error("index post '" + id + "' is not in the corpus");
    }
    if (title_model && index->dim() != title_model->dim()) {
      throw Error("index width " + std::to_string(index->dim()) + " differs from title dim " +
                  std::to_string(title_model->dim()));
    }
  }
  if (ranker) {
    if (title_model && ranker->d_q != title_model->dim()) {
      throw Error("ranker d_q " + std::to_string(ranker->d_q) + " differs from title dim " +
                  std::to_string(title_model->dim()));
    }
    if (reply_model && ranker->d_r != reply_model->dim()) {
      throw Error("ranker d_r " + std::to_string(ranker->d_r) + " differs from reply dim " +
                  std::to_string(reply_model->dim()));
    }
  }
}

std::string reply_doc_id(const std::string& post_id, std::uint32_t reply_index) {
  return post_id + "#" + std::to_string(reply_index);
}

std::vector<float> EngineBundle::reply_vector(const std::string& post_id,
                                              std::uint32_t reply_index) const {
  if (!reply_model) return {};
  if (auto row = reply_model->doc_index(reply_doc_id(post_id, reply_index))) {
    const auto v = reply_model->doc_vector(*row);
    return {v.begin(), v.end()};
  }
  return std::vector<float>(reply_model->dim(), 0.0f);
}

ReplyVectorLookup EngineBundle::reply_lookup() const {
  return [this](const std::string& post_id, std::uint32_t reply_index) {
    return reply_vector(post_id, reply_index);
  };
}

IngestResult ingest_corpus(std::istream& records, const NoiseFilter& noise) {
  auto parsed = parse_corpus(records);
  auto cleaned = clean_posts(std::move(parsed.posts), noise);
  IngestResult result;
  result.bundle.corpus = Corpus(std::move(cleaned.posts));
  result.bundle.stats = cleaned.stats;
  result.errors = std::move(parsed.errors);
  return result;
}

void train_embeddings(EngineBundle& bundle, const PvdmConfig& title_config,
                      const PvdmConfig& reply_config) {
  if (bundle.corpus.size() == 0) throw Error("train_embeddings: empty corpus");
  const Tokenizer& tok = default_tokenizer();
  std::vector<PvdmDoc> titles;
  std::vector<PvdmDoc> replies;
  std::vector<std::vector<std::string>> match_docs;
  for (const auto& post : bundle.corpus.posts()) {
    titles.push_back({post.post_id, tok.tokenize(post.title)});
    match_docs.push_back(tok.tokenize(matching_text(post, bundle.config.match_field)));
    for (std::size_t i = 0; i < post.replies.size(); ++i) {
      replies.push_back({reply_doc_id(post.post_id, static_cast<std::uint32_t>(i)),
                         tok.tokenize(post.replies[i].text)});
    }
  }
  bundle.title_model = PvdmModel::train(titles, title_config);
  bundle.reply_model = PvdmModel::train(replies, reply_config);
  bundle.tfidf = TfIdfModel::fit(match_docs);
  bundle.index.reset();
  bundle.ranker.reset();
}

void build_index(EngineBundle& bundle) {
  if (!bundle.title_model) throw Error("build_index: bundle has no title model");
  const auto& model = *bundle.title_model;
  Matrix vectors(bundle.corpus.size(), model.dim());
  std::vector<std::string> ids;
  ids.reserve(bundle.corpus.size());
  for (std::size_t i = 0; i < bundle.corpus.size(); ++i) {
    const auto& post = bundle.corpus.posts()[i];
    const auto row = model.doc_index(post.post_id);
    if (!row) throw Error("build_index: title model has no vector for '" + post.post_id + "'");
    const auto v = model.doc_vector(*row);
    std::copy(v.begin(), v.end(), vectors.row(i).begin());
    ids.push_back(post.post_id);
  }
  bundle.index = DenseIndex::build(vectors, std::move(ids));
  bundle.ranker.reset();
}

json stats_to_json(const CorpusStats& s) {
  return {{"posts_in", s.posts_in},
          {"posts_kept", s.posts_kept},
          {"posts_dropped_no_reply", s.posts_dropped_no_reply},
          {"posts_dropped_no_body", s.posts_dropped_no_body},
          {"posts_dropped_no_title", s.posts_dropped_no_title},
          {"posts_dropped_noise", s.posts_dropped_noise},
          {"replies_kept", s.replies_kept}};
}

namespace {

CorpusStats stats_from_json(const json& j) {
  CorpusStats s;
  s.posts_in = j.at("posts_in").get<std::size_t>();
  s.posts_kept = j.at("posts_kept").get<std::size_t>();
  s.posts_dropped_no_reply = j.at("posts_dropped_no_reply").get<std::size_t>();
  s.posts_dropped_no_body = j.at("posts_dropped_no_body").get<std::size_t>();
  s.posts_dropped_no_title = j.at("posts_dropped_no_title").get<std::size_t>();
  s.posts_dropped_noise = j.at("posts_dropped_noise").get<std::size_t>();
  s.replies_kept = j.at("replies_kept").get<std::size_t>();
  return s;
}

}  // namespace

json save_bundle(const EngineBundle& bundle, const fs::path& dir) {
  bundle.check_consistency();
  fs::create_directories(dir);
  std::vector<std::string> files;

  {
    std::ofstream out(dir / "corpus.jsonl", std::ios::trunc);
    if (!out) throw Error("cannot write '" + (dir / "corpus.jsonl").string() + "'");
    write_corpus(out, bundle.corpus.posts());
  }
  files.push_back("corpus.jsonl");
  {
    std::ofstream out(dir / "stats.json", std::ios::trunc);
    out << stats_to_json(bundle.stats).dump(2) << '\n';
  }
  files.push_back("stats.json");
  {
    std::ofstream out(dir / "config", std::ios::trunc);
    write_pipeline_config(out, bundle.config);
  }
  files.push_back("config");

  json manifest = {{"format", "stcbot-bundle"}, {"version", kFormatVersion}};
  manifest["corpus"] = {{"posts", bundle.corpus.size()}, {"replies", bundle.corpus.reply_count()}};

  if (bundle.title_model) {
    save_pvdm(*bundle.title_model, dir / "title");
    manifest["title_model"] = pvdm_meta(*bundle.title_model);
    manifest["title_dim"] = bundle.title_model->dim();
    manifest["seed"] = bundle.title_model->config().seed;
    for (const char* f : {"vocab.txt", "doc_ids.txt", "vectors.bin", "words.bin", "output.bin"}) {
      files.push_back(std::string("title/") + f);
    }
  }
  if (bundle.reply_model) {
    save_pvdm(*bundle.reply_model, dir / "reply");
    manifest["reply_model"] = pvdm_meta(*bundle.reply_model);
    manifest["reply_dim"] = bundle.reply_model->dim();
    for (const char* f : {"vocab.txt", "doc_ids.txt", "vectors.bin", "words.bin", "output.bin"}) {
      files.push_back(std::string("reply/") + f);
    }
  }
  if (bundle.tfidf) {
    std::vector<std::string> lines{"N\t" + std::to_string(bundle.tfidf->document_count())};
    for (std::size_t i = 0; i < bundle.tfidf->term_count(); ++i) {
      lines.push_back(bundle.tfidf->terms()[i] + "\t" +
                      std::to_string(bundle.tfidf->document_frequencies()[i]));
    }
    write_lines(dir / "tfidf.txt", lines);
    files.push_back("tfidf.txt");
  }
  if (bundle.index) {
    write_matrix(dir / "index.bin", bundle.index->rows());
    write_lines(dir / "post_ids.txt", bundle.index->post_ids());
    manifest["index"] = {{"rows", bundle.index->size()}, {"dim", bundle.index->dim()}};
    files.push_back("index.bin");
    files.push_back("post_ids.txt");
  }
  if (bundle.ranker) {
    write_ranker(dir / "ranker.bin", *bundle.ranker);
    manifest["ranker"] = {{"m", bundle.ranker->m},
                          {"d_q", bundle.ranker->d_q},
                          {"d_r", bundle.ranker->d_r},
                          {"activation", to_string(bundle.ranker->activation)}};
    files.push_back("ranker.bin");
  }

  json checksums = json::object();
  for (const auto& f : files) checksums[f] = file_checksum(dir / f);
  manifest["files"] = checksums;

  std::ofstream out(dir / "manifest", std::ios::trunc);
  if (!out) throw Error("cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
  return manifest;
}

EngineBundle load_bundle(const fs::path& dir) {
  json manifest;
  {
    std::ifstream in(dir / "manifest");
    if (!in) throw LoadError("manifest", "missing or unreadable in '" + dir.string() + "'");
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      throw LoadError("manifest", std::string("malformed: ") + e.what());
    }
  }
  if (manifest.value("format", "") != "stcbot-bundle") throw LoadError("manifest", "not a bundle manifest");
  if (manifest.value("version", 0) != kFormatVersion) throw LoadError("manifest", "unsupported version");
  const json files = manifest.value("files", json::object());
  const auto listed = [&](const std::string& f) { return files.contains(f); };
  const auto verify = [&](const std::string& f) {
    if (!listed(f)) throw LoadError(f, "not listed in manifest");
    if (!fs::exists(dir / f)) throw LoadError(f, "missing");
    if (file_checksum(dir / f) != files.at(f).get<std::string>()) {
      throw LoadError(f, "checksum mismatch");
    }
  };

  EngineBundle bundle;
  {
    verify("corpus.jsonl");
    std::ifstream in(dir / "corpus.jsonl");
    if (!in) throw LoadError("corpus.jsonl", "missing or unreadable");
    auto parsed = parse_corpus(in);
    if (!parsed.errors.empty()) {
      throw LoadError("corpus.jsonl", "line " + std::to_string(parsed.errors.front().line) + ": " +
                                          parsed.errors.front().reason);
    }
    bundle.corpus = Corpus(std::move(parsed.posts));
  }
  if (listed("stats.json")) {
    verify("stats.json");
    std::ifstream in(dir / "stats.json");
    try {
      bundle.stats = stats_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw LoadError("stats.json", e.what());
    }
  }
  if (listed("config")) {
    verify("config");
    std::ifstream in(dir / "config");
    try {
      bundle.config = parse_pipeline_config(in);
    } catch (const std::invalid_argument& e) {
      throw LoadError("config", e.what());
    }
  }

  for (const auto& [sub, key, target] :
       {std::tuple{std::string("title"), "title_model", &bundle.title_model},
        std::tuple{std::string("reply"), "reply_model", &bundle.reply_model}}) {
    if (!manifest.contains(key)) continue;
    for (const char* f : {"vocab.txt", "doc_ids.txt", "vectors.bin", "words.bin", "output.bin"}) {
      verify(sub + "/" + f);
    }
    *target = load_pvdm(dir, sub, manifest.at(key));
  }
  if (bundle.title_model && manifest.value("title_dim", 0u) != bundle.title_model->dim()) {
    throw LoadError("manifest", "title_dim does not match title/vectors.bin");
  }
  if (bundle.reply_model && manifest.value("reply_dim", 0u) != bundle.reply_model->dim()) {
    throw LoadError("manifest", "reply_dim does not match reply/vectors.bin");
  }

  if (listed("tfidf.txt")) {
    verify("tfidf.txt");
    const auto lines = read_lines(dir / "tfidf.txt", "tfidf.txt");
    if (lines.empty()) throw LoadError("tfidf.txt", "empty file");
    const auto [tag, n_docs] = split_count_line(lines.front(), "tfidf.txt");
    if (tag != "N") throw LoadError("tfidf.txt", "first line must be the N header");
    std::vector<std::pair<std::string, std::uint64_t>> dfs;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (!lines[i].empty()) dfs.push_back(split_count_line(lines[i], "tfidf.txt"));
    }
    try {
      bundle.tfidf = TfIdfModel(n_docs, std::move(dfs));
    } catch (const std::invalid_argument& e) {
      throw LoadError("tfidf.txt", e.what());
    }
  }

  if (listed("index.bin")) {
    verify("index.bin");
    verify("post_ids.txt");
    Matrix rows = read_matrix(dir / "index.bin");
    auto ids = read_lines(dir / "post_ids.txt", "post_ids.txt");
    if (rows.rows() != ids.size()) throw LoadError("index.bin", "row count does not match post_ids.txt");
    if (bundle.title_model && rows.cols() != bundle.title_model->dim()) {
      throw LoadError("index.bin", "row width does not match the title model dim");
    }
    for (const auto& id : ids) {
      if (!bundle.corpus.find(id)) throw LoadError("post_ids.txt", "unknown post '" + id + "'");
    }
    bundle.index = DenseIndex::from_normalized(std::move(rows), std::move(ids));
  }

  if (listed("ranker.bin")) {
    verify("ranker.bin");
    bundle.ranker = read_ranker(dir / "ranker.bin");
    const auto& r = *bundle.ranker;
    const auto title_dim = manifest.value("title_dim", std::size_t{0});
    const auto reply_dim = manifest.value("reply_dim", std::size_t{0});
    if (r.d_q != title_dim || r.d_r != reply_dim) {
      throw LoadError("ranker.bin", "dimension mismatch: ranker is " + std::to_string(r.d_q) + "x" +
                                        std::to_string(r.d_r) + ", manifest dims are " +
                                        std::to_string(title_dim) + "x" + std::to_string(reply_dim));
    }
  }

  try {
    bundle.check_consistency();
  } catch (const Error& e) {
    throw LoadError("manifest", e.what());
  }
  return bundle;
}

}  // namespace stc
