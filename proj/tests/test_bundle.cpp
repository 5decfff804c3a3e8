#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "stc/binary_io.hpp"
#include "stc/bundle.hpp"
#include "stc/engine.hpp"
#include "stc/episodes.hpp"
#include "stc/error.hpp"

using namespace stc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("stc_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

template <class F>
LoadError expect_load_error(F&& f) {
  try {
    f();
  } catch (const LoadError& e) {
    return e;
  }
  FAIL("expected LoadError");
  return LoadError("", "");
}

void refresh_checksum(const fs::path& dir, const std::string& file) {
  std::ifstream in(dir / "manifest");
  auto manifest = nlohmann::json::parse(in);
  manifest["files"][file] = file_checksum(dir / file);
  write_all(dir / "manifest", manifest.dump(2));
}

}  // namespace

TEST_CASE("matrix files round-trip") {
  TempDir tmp;
  Matrix m(3, 4);
  for (std::size_t i = 0; i < 12; ++i) m.data()[i] = static_cast<float>(i) * 0.25f - 1.0f;
  write_matrix(tmp.path / "m.bin", m);
  CHECK(read_matrix(tmp.path / "m.bin") == m);

  const auto bytes = read_all(tmp.path / "m.bin");
  CHECK(bytes.size() == 4 + 4 + 4 + 12 * 4);
  CHECK(bytes.substr(0, 4) == "PVDM");
  CHECK(static_cast<unsigned char>(bytes[4]) == 3);
  CHECK(static_cast<unsigned char>(bytes[8]) == 4);

  write_matrix(tmp.path / "empty.bin", Matrix(0, 5));
  CHECK(read_matrix(tmp.path / "empty.bin").cols() == 5);

  SUBCASE("bad magic") {
    write_all(tmp.path / "bad.bin", "XXXX" + bytes.substr(4));
    CHECK(expect_load_error([&] { read_matrix(tmp.path / "bad.bin"); }).file() == "bad.bin");
  }
  SUBCASE("truncated") {
    write_all(tmp.path / "short.bin", bytes.substr(0, bytes.size() - 3));
    CHECK(expect_load_error([&] { read_matrix(tmp.path / "short.bin"); }).file() == "short.bin");
  }
  SUBCASE("trailing bytes") {
    write_all(tmp.path / "long.bin", bytes + "x");
    CHECK(expect_load_error([&] { read_matrix(tmp.path / "long.bin"); }).file() == "long.bin");
  }
  SUBCASE("missing") {
    CHECK_THROWS_AS(read_matrix(tmp.path / "nope.bin"), LoadError);
  }
}

TEST_CASE("ranker files round-trip") {
  TempDir tmp;
  auto p = RankerParams::random(3, 5, 4, Activation::Softplus, 8);
  p.b = {0.5, -0.25, 1.0};
  p.c = -0.75;
  p.round_to_float();
  write_ranker(tmp.path / "ranker.bin", p);
  CHECK(read_ranker(tmp.path / "ranker.bin") == p);

  const auto bytes = read_all(tmp.path / "ranker.bin");
  CHECK(bytes.substr(0, 4) == "RNKR");
  CHECK(bytes.size() == 4 + 12 + 1 + 4 * (3 * 5 * 4 + 3 + 3 + 1));
  CHECK(bytes[16] == 1);

  write_all(tmp.path / "short.bin", bytes.substr(0, 20));
  CHECK_THROWS_AS(read_ranker(tmp.path / "short.bin"), LoadError);
  auto bad_act = bytes;
  bad_act[16] = 7;
  write_all(tmp.path / "act.bin", bad_act);
  CHECK_THROWS_AS(read_ranker(tmp.path / "act.bin"), LoadError);
}

TEST_CASE("file checksum") {
  TempDir tmp;
  write_all(tmp.path / "a", "");
  CHECK(file_checksum(tmp.path / "a") == "cbf29ce484222325");
  write_all(tmp.path / "a", "a");
  CHECK(file_checksum(tmp.path / "a") == "af63dc4c8601ec8c");
}

TEST_CASE("pipeline config text") {
  std::istringstream in("# settings\nk1 = 50\n  k2=4\ncap = 6\nmatch_field = title_body\n"
                        "policy = argmax\ntemperature = 0.5\n\n");
  const auto c = parse_pipeline_config(in);
  CHECK(c.k1 == 50);
  CHECK(c.k2 == 4);
  CHECK(c.cap == 6);
  CHECK(c.match_field == MatchField::TitleBody);
  CHECK(c.policy == SelectionPolicy::Argmax);
  CHECK(c.temperature == 0.5);

  std::ostringstream out;
  write_pipeline_config(out, c);
  std::istringstream back(out.str());
  CHECK(parse_pipeline_config(back) == c);

  std::istringstream unknown("k3 = 1\n");
  CHECK_THROWS(parse_pipeline_config(unknown));
  std::istringstream bad_value("k1 = lots\n");
  CHECK_THROWS(parse_pipeline_config(bad_value));
  std::istringstream zero("cap = 0\n");
  CHECK_THROWS(parse_pipeline_config(zero));
  std::istringstream cold("temperature = 0\n");
  CHECK_THROWS(parse_pipeline_config(cold));
}

TEST_CASE("bundle stages") {
  std::stringstream records;
  write_corpus(records, fixtures::ten_post_fixture());
  auto ingested = ingest_corpus(records, NoiseFilter({"buy now"}));
  CHECK(ingested.errors.empty());
  auto& bundle = ingested.bundle;
  CHECK(bundle.corpus.size() == 7);
  CHECK_FALSE(bundle.servable());
  CHECK_THROWS_AS(bundle.require_servable(), Error);
  CHECK_THROWS(build_index(bundle));

  PvdmConfig cfg;
  cfg.dim = 8;
  cfg.window = 1;
  cfg.epochs = 3;
  train_embeddings(bundle, cfg, cfg);
  build_index(bundle);
  CHECK(bundle.index->size() == 7);
  CHECK_FALSE(bundle.servable());
  TrainConfig rank;
  rank.epochs = 2;
  rank.m = 2;
  train_bundle_ranker(bundle, rank);
  CHECK(bundle.servable());
  CHECK_NOTHROW(bundle.check_consistency());

  train_embeddings(bundle, cfg, cfg);
  CHECK_FALSE(bundle.index.has_value());
  CHECK_FALSE(bundle.ranker.has_value());
}

TEST_CASE("bundle save and load") {
  const auto& bundle = fixtures::desk_bundle();
  TempDir tmp;
  const auto manifest = save_bundle(bundle, tmp.path);
  for (const auto* f : {"manifest", "config", "corpus.jsonl", "stats.json", "title/vocab.txt",
                        "title/doc_ids.txt", "title/vectors.bin", "reply/vectors.bin", "tfidf.txt",
                        "index.bin", "post_ids.txt", "ranker.bin"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / f), f);
  }
  CHECK(manifest["title_dim"] == 256);
  CHECK(manifest["reply_dim"] == 128);
  CHECK(manifest["files"].contains("ranker.bin"));

  const auto loaded = load_bundle(tmp.path);
  CHECK(loaded.corpus.size() == bundle.corpus.size());
  CHECK(*loaded.ranker == *bundle.ranker);
  CHECK(loaded.config == bundle.config);
  CHECK(stats_to_json(loaded.stats) == stats_to_json(bundle.stats));

  for (const auto& probe : fixtures::probe_utterances(20)) {
    AnswerOptions opts;
    opts.seed = 17;
    opts.policy = SelectionPolicy::Sample;
    const auto a = answer(probe, bundle, opts);
    const auto b = answer(probe, loaded, opts);
    CHECK(a.response_text == b.response_text);
    CHECK(to_json(a.trace) == to_json(b.trace));
  }

  SUBCASE("truncated vectors file") {
    const auto path = tmp.path / "title" / "vectors.bin";
    const auto bytes = read_all(path);
    write_all(path, bytes.substr(0, bytes.size() / 2));
    refresh_checksum(tmp.path, "title/vectors.bin");
    const auto e = expect_load_error([&] { load_bundle(tmp.path); });
    CHECK(e.file().find("vectors.bin") != std::string::npos);
  }
  SUBCASE("checksum mismatch") {
    write_all(tmp.path / "post_ids.txt", read_all(tmp.path / "post_ids.txt") + "extra\n");
    const auto e = expect_load_error([&] { load_bundle(tmp.path); });
    CHECK(e.file() == "post_ids.txt");
    CHECK(e.reason() == "checksum mismatch");
  }
  SUBCASE("ranker with other dimensions") {
    write_ranker(tmp.path / "ranker.bin", RankerParams::random(2, 64, 128, Activation::Relu, 1));
    refresh_checksum(tmp.path, "ranker.bin");
    const auto e = expect_load_error([&] { load_bundle(tmp.path); });
    CHECK(e.file() == "ranker.bin");
    CHECK(e.reason().find("dimension mismatch") != std::string::npos);
  }
  SUBCASE("missing file") {
    fs::remove(tmp.path / "tfidf.txt");
    CHECK(expect_load_error([&] { load_bundle(tmp.path); }).file() == "tfidf.txt");
  }
  SUBCASE("missing manifest") {
    fs::remove(tmp.path / "manifest");
    CHECK(expect_load_error([&] { load_bundle(tmp.path); }).file() == "manifest");
  }
}

TEST_CASE("engine answers") {
  const auto& bundle = fixtures::desk_bundle();
  CHECK_THROWS_AS(answer("", bundle), InvalidQuery);
  CHECK_THROWS_AS(answer("   \t", bundle), InvalidQuery);
  CHECK_THROWS_AS(answer("?!...", bundle), InvalidQuery);

  const auto oov = answer("zxqv blorp fnord", bundle);
  CHECK(oov.trace.fallback);
  CHECK(bundle.corpus.reply_count() > 0);

  std::set<std::string> corpus_replies;
  for (const auto& post : bundle.corpus.posts()) {
    for (const auto& r : post.replies) corpus_replies.insert(r.text);
  }
  for (const auto& probe : fixtures::probe_utterances(30)) {
    const auto r = answer(probe, bundle);
    const auto& t = r.trace;
    CHECK(corpus_replies.count(r.response_text) == 1);
    CHECK(t.retrieved.size() <= bundle.config.k1);
    CHECK(t.retrieved.size() <= bundle.corpus.size());
    REQUIRE_FALSE(t.candidates.empty());
    CHECK(t.candidates.size() <= bundle.config.cap);
    double total = 0;
    for (const auto& c : t.candidates) total += c.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(t.selected_index < t.candidates.size());
    CHECK(r.response_text == t.candidates[t.selected_index].response_text);
    CHECK(t.policy == SelectionPolicy::Argmax);
    for (const auto& c : t.candidates) {
      CHECK(c.probability <= t.candidates[t.selected_index].probability);
    }
  }

  SUBCASE("seeded sampling") {
    AnswerOptions opts;
    opts.policy = SelectionPolicy::Sample;
    opts.temperature = 2.0;
    opts.seed = 123;
    const auto a = answer("what gift for our anniversary", bundle, opts);
    const auto b = answer("what gift for our anniversary", bundle, opts);
    CHECK(a.trace.seed == 123);
    CHECK(a.trace.temperature == 2.0);
    CHECK(a.response_text == b.response_text);
  }
  SUBCASE("unseeded sampling reports its seed") {
    AnswerOptions opts;
    opts.policy = SelectionPolicy::Sample;
    const auto a = answer("what gift for our anniversary", bundle, opts);
    opts.seed = a.trace.seed;
    const auto b = answer("what gift for our anniversary", bundle, opts);
    CHECK(a.trace.selected_index == b.trace.selected_index);
  }
  SUBCASE("json shape") {
    const auto j = to_json(answer("my parents want us to get engaged", bundle));
    CHECK(j.contains("response_text"));
    CHECK(j["trace"]["candidates"].is_array());
    CHECK(j["trace"]["retrieved"].is_array());
    CHECK(j["trace"].contains("selected_index"));
  }
  SUBCASE("unservable bundle") {
    EngineBundle empty;
    CHECK_THROWS_AS(answer("hello", empty), Error);
  }
}

TEST_CASE("training episodes") {
  const auto& bundle = fixtures::desk_bundle();
  const auto likes = assemble_episodes(bundle, TargetMode::Likes);
  const auto one_hot = assemble_episodes(bundle, TargetMode::OneHot);
  CHECK_FALSE(likes.empty());
  CHECK(one_hot.size() == likes.size());
  for (const auto& ep : one_hot) {
    REQUIRE(ep.set.true_reply_index.has_value());
    const auto truth = *ep.set.true_reply_index;
    REQUIRE(truth < ep.set.size());
    CHECK(ep.set.size() <= bundle.config.cap);
    CHECK(ep.targets[truth] == 1.0);
    const auto& post = bundle.corpus.at(ep.set.candidates[truth].post_id);
    std::int64_t best = post.replies.front().net_score();
    for (const auto& r : post.replies) best = std::max(best, r.net_score());
    CHECK(ep.set.candidates[truth].net_score == best);
    CHECK(ep.set.query_vec.size() == 256);
    CHECK(ep.set.candidates[truth].reply_vec.size() == 128);
  }
  for (const auto& ep : likes) {
    double total = 0;
    for (double t : ep.targets) total += t;
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("recall evaluation") {
  const auto& bundle = fixtures::desk_bundle();
  std::vector<Post> heldout(bundle.corpus.posts().begin(), bundle.corpus.posts().begin() + 20);
  heldout.push_back(Post{"empty", "no replies", "", "", {}});
  const std::vector<std::size_t> ks = {1, 5, 10};
  const auto report = evaluate_recall(bundle, heldout, ks);
  CHECK(report.ks == ks);
  CHECK(report.queries == 20);
  CHECK(report.skipped == 1);
  REQUIRE(report.recall.size() == 3);
  CHECK(report.recall[0] <= report.recall[1]);
  CHECK(report.recall[1] <= report.recall[2]);
  for (double r : report.recall) CHECK((r >= 0.0 && r <= 1.0));
  // Training posts are in the corpus, so their own replies are reachable.
  CHECK(report.recall[2] > 0.5);
}
