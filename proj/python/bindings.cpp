#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "stc/bundle.hpp"
#include "stc/engine.hpp"
#include "stc/episodes.hpp"
#include "stc/error.hpp"
#include "stc/matrix.hpp"
#include "stc/tokenizer.hpp"

namespace py = pybind11;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::array_t<float> to_numpy(const stc::Matrix& m) {
  py::array_t<float> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

stc::Matrix from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw stc::ShapeError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return stc::Matrix(rows, cols, std::vector<float>(a.data(), a.data() + rows * cols));
}

py::dict stats_dict(const stc::CorpusStats& s) { return to_python(stc::stats_to_json(s)); }

std::vector<stc::RetrievalHit> retrieve(const stc::DenseIndex& index, std::vector<float> q,
                                        std::size_t k1) {
  py::gil_scoped_release release;
  return index.retrieve(q, k1);
}

stc::ChatResponse answer(const stc::EngineBundle& bundle, const std::string& utterance,
                         std::optional<std::string> policy, std::optional<double> temperature,
                         std::optional<std::uint64_t> seed) {
  stc::AnswerOptions options;
  if (policy) options.policy = stc::parse_policy(*policy);
  options.temperature = temperature;
  options.seed = seed;
  py::gil_scoped_release release;
  return stc::answer(utterance, bundle, options);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Retrieval-based short text conversation engine";

  auto error = py::register_exception<stc::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<stc::ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<stc::InvalidQuery>(m, "InvalidQuery", error.ptr());
  py::register_exception<stc::NoKnownTokens>(m, "NoKnownTokens", error.ptr());
  py::register_exception<stc::TrainingError>(m, "TrainingError", error.ptr());
  py::register_exception<stc::LoadError>(m, "LoadError", error.ptr());

  m.def("tokenize", [](const std::string& text) { return stc::tokenize(text); }, py::arg("text"));
  m.def("cosine",
        [](const std::vector<double>& u, const std::vector<double>& v) { return stc::cosine(u, v); },
        py::arg("u"), py::arg("v"));

  // corpus
  py::class_<stc::Reply>(m, "Reply")
      .def(py::init<>())
      .def(py::init([](std::string text, std::int64_t likes, std::int64_t dislikes) {
             return stc::Reply{std::move(text), likes, dislikes};
           }),
           py::arg("text"), py::arg("likes") = 0, py::arg("dislikes") = 0)
      .def_readwrite("text", &stc::Reply::text)
      .def_readwrite("likes", &stc::Reply::likes)
      .def_readwrite("dislikes", &stc::Reply::dislikes)
      .def_property_readonly("net_score", &stc::Reply::net_score);

  py::class_<stc::Post>(m, "Post")
      .def(py::init<>())
      .def_readwrite("post_id", &stc::Post::post_id)
      .def_readwrite("title", &stc::Post::title)
      .def_readwrite("body", &stc::Post::body)
      .def_readwrite("source", &stc::Post::source)
      .def_readwrite("replies", &stc::Post::replies);

  py::class_<stc::QRPair>(m, "QRPair")
      .def_readonly("query_text", &stc::QRPair::query_text)
      .def_readonly("response_text", &stc::QRPair::response_text)
      .def_readonly("post_id", &stc::QRPair::post_id)
      .def_readonly("reply_index", &stc::QRPair::reply_index)
      .def_readonly("net_score", &stc::QRPair::net_score);

  m.def(
      "parse_corpus",
      [](const std::string& text) {
        std::istringstream in(text);
        auto result = stc::parse_corpus(in);
        std::vector<std::pair<std::size_t, std::string>> errors;
        for (auto& e : result.errors) errors.emplace_back(e.line, std::move(e.reason));
        return std::make_pair(std::move(result.posts), std::move(errors));
      },
      py::arg("text"), "Parses line-delimited records; returns (posts, [(line, reason)]).");
  m.def(
      "clean_posts",
      [](std::vector<stc::Post> posts, std::vector<std::string> patterns) {
        auto result = stc::clean_posts(std::move(posts), stc::NoiseFilter(std::move(patterns)));
        return py::make_tuple(std::move(result.posts), stats_dict(result.stats));
      },
      py::arg("posts"), py::arg("noise_patterns") = std::vector<std::string>{});
  m.def("build_qr_pairs", [](const std::vector<stc::Post>& posts) { return stc::build_qr_pairs(posts); });

  // embeddings
  py::class_<stc::TfIdfModel>(m, "TfIdfModel")
      .def_static("fit", [](const std::vector<std::vector<std::string>>& docs) {
        return stc::TfIdfModel::fit(docs);
      })
      .def_property_readonly("document_count", &stc::TfIdfModel::document_count)
      .def("df", &stc::TfIdfModel::df)
      .def("idf", &stc::TfIdfModel::idf)
      .def("vectorize",
           [](const stc::TfIdfModel& model, const std::vector<std::string>& tokens) {
             std::map<std::string, double> out;
             for (auto& [term, w] : model.named(model.vectorize(tokens))) out[term] = w;
             return out;
           })
      .def("cosine", [](const stc::TfIdfModel& model, const std::vector<std::string>& a,
                        const std::vector<std::string>& b) {
        return stc::cosine(model.vectorize(a), model.vectorize(b));
      });

  py::class_<stc::PvdmConfig>(m, "PvdmConfig")
      .def(py::init<>())
      .def_readwrite("dim", &stc::PvdmConfig::dim)
      .def_readwrite("window", &stc::PvdmConfig::window)
      .def_readwrite("epochs", &stc::PvdmConfig::epochs)
      .def_readwrite("learning_rate", &stc::PvdmConfig::learning_rate)
      .def_readwrite("negative", &stc::PvdmConfig::negative)
      .def_readwrite("min_count", &stc::PvdmConfig::min_count)
      .def_readwrite("seed", &stc::PvdmConfig::seed)
      .def_readwrite("threads", &stc::PvdmConfig::threads)
      .def_readwrite("infer_steps", &stc::PvdmConfig::infer_steps);

  py::class_<stc::PvdmModel>(m, "PvdmModel")
      .def_static(
          "train",
          [](const std::vector<std::pair<std::string, std::vector<std::string>>>& docs,
             const stc::PvdmConfig& config) {
            std::vector<stc::PvdmDoc> in;
            for (const auto& [id, tokens] : docs) in.push_back({id, tokens});
            py::gil_scoped_release release;
            return stc::PvdmModel::train(in, config);
          },
          py::arg("docs"), py::arg("config"))
      .def_property_readonly("dim", &stc::PvdmModel::dim)
      .def_property_readonly("doc_ids", &stc::PvdmModel::doc_ids)
      .def_property_readonly("epoch_losses", &stc::PvdmModel::epoch_losses)
      .def_property_readonly("degenerate_docs", &stc::PvdmModel::degenerate_docs)
      .def_property_readonly("doc_vectors", [](const stc::PvdmModel& model) { return to_numpy(model.doc_vectors()); })
      .def(
          "infer",
          [](const stc::PvdmModel& model, const std::vector<std::string>& tokens,
             std::optional<std::uint32_t> steps) {
            return steps ? model.infer(tokens, *steps) : model.infer(tokens);
          },
          py::arg("tokens"), py::arg("steps") = py::none());

  // retrieval
  py::class_<stc::RetrievalHit>(m, "RetrievalHit")
      .def_readonly("post_id", &stc::RetrievalHit::post_id)
      .def_readonly("similarity", &stc::RetrievalHit::similarity)
      .def_readonly("position", &stc::RetrievalHit::position)
      .def("__repr__", [](const stc::RetrievalHit& h) {
        return "RetrievalHit('" + h.post_id + "', " + std::to_string(h.similarity) + ")";
      });

  py::class_<stc::DenseIndex>(m, "DenseIndex")
      .def_static(
          "build",
          [](const py::array_t<float, py::array::c_style | py::array::forcecast>& vectors,
             std::vector<std::string> post_ids) {
            return stc::DenseIndex::build(from_numpy(vectors), std::move(post_ids));
          },
          py::arg("vectors"), py::arg("post_ids"))
      .def("retrieve", &retrieve, py::arg("query"), py::arg("k1"))
      .def("__len__", &stc::DenseIndex::size)
      .def_property_readonly("dim", &stc::DenseIndex::dim)
      .def_property_readonly("rows", [](const stc::DenseIndex& idx) { return to_numpy(idx.rows()); });

  // ranker
  py::enum_<stc::Activation>(m, "Activation")
      .value("relu", stc::Activation::Relu)
      .value("softplus", stc::Activation::Softplus);

  py::class_<stc::RankerParams>(m, "RankerParams")
      .def_static("zeros", &stc::RankerParams::zeros, py::arg("m"), py::arg("d_q"), py::arg("d_r"),
                  py::arg("activation") = stc::Activation::Relu)
      .def_static("random", &stc::RankerParams::random, py::arg("m"), py::arg("d_q"), py::arg("d_r"),
                  py::arg("activation") = stc::Activation::Relu, py::arg("seed") = 1)
      .def_readonly("m", &stc::RankerParams::m)
      .def_readonly("d_q", &stc::RankerParams::d_q)
      .def_readonly("d_r", &stc::RankerParams::d_r)
      .def_readwrite("activation", &stc::RankerParams::activation)
      .def_readwrite("W", &stc::RankerParams::W)
      .def_readwrite("b", &stc::RankerParams::b)
      .def_readwrite("s", &stc::RankerParams::s)
      .def_readwrite("c", &stc::RankerParams::c)
      .def("validate", &stc::RankerParams::validate);

  m.def("relational_features",
        [](const std::vector<float>& q, const std::vector<float>& r, const stc::RankerParams& p) {
          return stc::relational_features(q, r, p);
        });
  m.def("candidate_scores", [](const std::vector<float>& q, const std::vector<std::vector<float>>& replies,
                               const stc::RankerParams& p) { return stc::candidate_scores(q, replies, p); });
  m.def("response_distribution", [](const std::vector<double>& g) { return stc::response_distribution(g); });
  m.def(
      "target_distribution",
      [](const std::vector<std::int64_t>& net, const std::string& mode, std::optional<std::size_t> true_index) {
        return stc::target_distribution(net, stc::parse_target_mode(mode), true_index);
      },
      py::arg("net_scores"), py::arg("mode") = "likes", py::arg("true_index") = py::none());
  m.def(
      "select_response",
      [](const std::vector<double>& p, const std::string& policy, double temperature, std::uint64_t seed) {
        return stc::select_response(p, stc::parse_policy(policy), temperature, seed);
      },
      py::arg("p"), py::arg("policy") = "argmax", py::arg("temperature") = 1.0, py::arg("seed") = 0);

  // pipeline
  py::class_<stc::ChatResponse>(m, "ChatResponse")
      .def_readonly("response_text", &stc::ChatResponse::response_text)
      .def_property_readonly("trace", [](const stc::ChatResponse& r) { return to_python(stc::to_json(r.trace)); });

  py::class_<stc::EngineBundle>(m, "Bundle")
      .def_static(
          "ingest",
          [](const std::string& records, std::vector<std::string> noise_patterns) {
            std::istringstream in(records);
            auto result = stc::ingest_corpus(in, stc::NoiseFilter(std::move(noise_patterns)));
            return std::move(result.bundle);
          },
          py::arg("records"), py::arg("noise_patterns") = std::vector<std::string>{})
      .def_static("load", [](const std::string& dir) { return stc::load_bundle(dir); }, py::arg("directory"))
      .def(
          "save", [](const stc::EngineBundle& b, const std::string& dir) { return to_python(stc::save_bundle(b, dir)); },
          py::arg("directory"))
      .def(
          "train_embeddings",
          [](stc::EngineBundle& b, const stc::PvdmConfig& titles, const stc::PvdmConfig& replies) {
            py::gil_scoped_release release;
            stc::train_embeddings(b, titles, replies);
          },
          py::arg("titles"), py::arg("replies"))
      .def("build_index", [](stc::EngineBundle& b) { stc::build_index(b); })
      .def(
          "train_ranker",
          [](stc::EngineBundle& b, const std::string& mode, std::uint32_t epochs, double lr,
             std::uint64_t seed, std::size_t features, stc::Activation activation) {
            stc::TrainConfig cfg;
            cfg.target_mode = stc::parse_target_mode(mode);
            cfg.epochs = epochs;
            cfg.learning_rate = lr;
            cfg.seed = seed;
            cfg.m = features;
            cfg.activation = activation;
            py::gil_scoped_release release;
            return stc::train_bundle_ranker(b, cfg).epoch_losses;
          },
          py::arg("mode") = "likes", py::arg("epochs") = 30, py::arg("lr") = 0.05, py::arg("seed") = 1,
          py::arg("features") = 8, py::arg("activation") = stc::Activation::Relu)
      .def("answer", &answer, py::arg("utterance"), py::arg("policy") = py::none(),
           py::arg("temperature") = py::none(), py::arg("seed") = py::none())
      .def(
          "evaluate_recall",
          [](const stc::EngineBundle& b, const std::vector<stc::Post>& heldout, std::vector<std::size_t> ks) {
            const auto report = stc::evaluate_recall(b, heldout, ks);
            py::dict recall;
            for (std::size_t i = 0; i < report.ks.size(); ++i) recall[py::int_(report.ks[i])] = report.recall[i];
            py::dict out;
            out["recall"] = recall;
            out["queries"] = report.queries;
            out["skipped"] = report.skipped;
            return out;
          },
          py::arg("heldout"), py::arg("ks") = std::vector<std::size_t>{1, 5})
      .def_property_readonly("posts", [](const stc::EngineBundle& b) {
        return std::vector<stc::Post>(b.corpus.posts().begin(), b.corpus.posts().end());
      })
      .def_property_readonly("stats", [](const stc::EngineBundle& b) { return stats_dict(b.stats); })
      .def_property_readonly("servable", &stc::EngineBundle::servable);
}
