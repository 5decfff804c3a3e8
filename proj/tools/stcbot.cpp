// stcbot: build, evaluate and serve a retrieval-based chat bundle.
//
//   stcbot ingest corpus.jsonl --out bundle/ [--noise-patterns ads.txt]
//   stcbot train-embeddings bundle/ [--titles-dim 256 --replies-dim 128 --seed N]
//   stcbot build-index bundle/
//   stcbot train-ranker bundle/ [--mode one_hot|likes --epochs E --lr R --seed N]
//   stcbot eval bundle/ --heldout heldout.jsonl [--k 1,5]
//   stcbot chat bundle/
//   stcbot serve bundle/ [--port 8080]
//
// Every subcommand also reads --config FILE, a key = value file whose keys are
// flag names without the leading dashes. Flags on the command line win.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "stc/bundle.hpp"
#include "stc/engine.hpp"
#include "stc/episodes.hpp"
#include "stc/error.hpp"
#include "stc/http_api.hpp"
#include "stc/synthetic.hpp"

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return entries;
}

// Pipeline settings a subcommand may override. Unset options leave the
// bundle's stored config alone.
struct PipelineFlags {
  std::size_t k1 = 0, k2 = 0, cap = 0;
  std::string match_field, policy;
  double temperature = 0.0;
  std::map<std::string, CLI::Option*> opts;

  void add_to(CLI::App* sub) {
    opts["k1"] = sub->add_option("--k1", k1, "posts kept by dense retrieval");
    opts["k2"] = sub->add_option("--k2", k2, "posts kept after TF-IDF matching");
    opts["cap"] = sub->add_option("--cap", cap, "maximum candidate replies");
    opts["match-field"] = sub->add_option("--match-field", match_field, "title or title_body")
                              ->check(CLI::IsMember({"title", "title_body"}));
    opts["policy"] = sub->add_option("--policy", policy, "argmax or sample")
                         ->check(CLI::IsMember({"argmax", "sample"}));
    opts["temperature"] = sub->add_option("--temperature", temperature, "sampling temperature");
  }

  void apply(stc::PipelineConfig& cfg) const {
    if (opts.at("k1")->count()) cfg.k1 = k1;
    if (opts.at("k2")->count()) cfg.k2 = k2;
    if (opts.at("cap")->count()) cfg.cap = cap;
    if (opts.at("match-field")->count()) {
      cfg.match_field = match_field == "title" ? stc::MatchField::Title : stc::MatchField::TitleBody;
    }
    if (opts.at("policy")->count()) cfg.policy = stc::parse_policy(policy);
    if (opts.at("temperature")->count()) cfg.temperature = temperature;
    cfg.validate();
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    const auto k = std::stoul(item, &used);
    if (used != item.size() || k == 0) throw std::runtime_error("bad --k entry '" + item + "'");
    ks.push_back(k);
  }
  if (ks.empty()) throw std::runtime_error("--k needs at least one value");
  return ks;
}

std::vector<stc::Post> read_posts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  auto parsed = stc::parse_corpus(in);
  for (const auto& e : parsed.errors) {
    std::cerr << path << ":" << e.line << ": skipped: " << e.reason << '\n';
  }
  return std::move(parsed.posts);
}

stc::ChatServer* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-based short text conversation engine"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "key = value file mirroring the flags");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse and clean a corpus into a new bundle");
  std::string corpus_path, out_dir, noise_path;
  PipelineFlags ingest_pipeline;
  ingest->add_option("corpus", corpus_path, "line-delimited JSON corpus")->required();
  ingest->add_option("--out", out_dir, "bundle directory to create")->required();
  ingest->add_option("--noise-patterns", noise_path, "one noise pattern per line");
  ingest_pipeline.add_to(ingest);

  // train-embeddings
  auto* embed = app.add_subcommand("train-embeddings", "train title/reply vectors and fit TF-IDF");
  std::string bundle_dir;
  stc::PvdmConfig title_cfg;
  std::uint32_t reply_dim = 128;
  std::uint32_t reply_epochs = 0;
  embed->add_option("bundle", bundle_dir)->required();
  embed->add_option("--titles-dim", title_cfg.dim, "title vector size")->capture_default_str();
  embed->add_option("--replies-dim", reply_dim, "reply vector size")->capture_default_str();
  embed->add_option("--seed", title_cfg.seed)->capture_default_str();
  embed->add_option("--window", title_cfg.window)->capture_default_str();
  embed->add_option("--epochs", title_cfg.epochs)->capture_default_str();
  embed->add_option("--reply-epochs", reply_epochs, "defaults to --epochs");
  embed->add_option("--lr", title_cfg.learning_rate)->capture_default_str();
  embed->add_option("--negative", title_cfg.negative)->capture_default_str();
  embed->add_option("--min-count", title_cfg.min_count)->capture_default_str();
  embed->add_option("--threads", title_cfg.threads, "more than 1 is not reproducible")
      ->capture_default_str();
  embed->add_option("--infer-steps", title_cfg.infer_steps)->capture_default_str();

  // build-index
  auto* index = app.add_subcommand("build-index", "build the dense title index");
  index->add_option("bundle", bundle_dir)->required();

  // train-ranker
  auto* rank = app.add_subcommand("train-ranker", "train the response selection model");
  stc::TrainConfig train_cfg;
  std::string mode = "likes", activation = "relu";
  double clip = 0.0;
  PipelineFlags rank_pipeline;
  rank->add_option("bundle", bundle_dir)->required();
  rank->add_option("--mode", mode, "likes or one_hot")
      ->check(CLI::IsMember({"likes", "one_hot"}))
      ->capture_default_str();
  rank->add_option("--epochs", train_cfg.epochs)->capture_default_str();
  rank->add_option("--lr", train_cfg.learning_rate)->capture_default_str();
  rank->add_option("--seed", train_cfg.seed)->capture_default_str();
  rank->add_option("--features", train_cfg.m, "relational feature count m")->capture_default_str();
  rank->add_option("--activation", activation, "relu or softplus")
      ->check(CLI::IsMember({"relu", "softplus"}))
      ->capture_default_str();
  auto* clip_opt = rank->add_option("--gradient-clip", clip, "max gradient norm per step");
  rank_pipeline.add_to(rank);

  // eval
  auto* eval = app.add_subcommand("eval", "recall@k on held-out posts");
  std::string heldout_path, ks_text = "1,5";
  PipelineFlags eval_pipeline;
  eval->add_option("bundle", bundle_dir)->required();
  eval->add_option("--heldout", heldout_path, "held-out corpus file")->required();
  eval->add_option("--k", ks_text, "comma-separated cutoffs")->capture_default_str();
  eval_pipeline.add_to(eval);

  // chat
  auto* chat = app.add_subcommand("chat", "interactive terminal chat");
  std::uint64_t chat_seed = 0;
  bool show_trace = false;
  PipelineFlags chat_pipeline;
  chat->add_option("bundle", bundle_dir)->required();
  auto* chat_seed_opt = chat->add_option("--seed", chat_seed, "fixed sampling seed");
  chat->add_flag("--trace", show_trace, "print the candidate trace after each answer");
  chat_pipeline.add_to(chat);

  // serve
  auto* serve = app.add_subcommand("serve", "serve the HTTP chat API");
  std::string host = "127.0.0.1";
  int port = 8080;
  PipelineFlags serve_pipeline;
  serve->add_option("bundle", bundle_dir)->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve_pipeline.add_to(serve);

  // demo-corpus
  auto* demo = app.add_subcommand("demo-corpus", "write a small synthetic forum corpus");
  stc::SyntheticCorpusOptions demo_opts;
  std::string demo_out;
  demo->add_option("--out", demo_out, "output file")->required();
  demo->add_option("--posts-per-topic", demo_opts.posts_per_topic)->capture_default_str();
  demo->add_option("--seed", demo_opts.seed)->capture_default_str();
  demo->add_flag("--noise", demo_opts.include_noise, "add posts that cleaning drops");

  // Splice config entries in front of the user's flags so the flags win.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path.empty()) {
    try {
      std::size_t sub_pos = args.size();
      CLI::App* active = nullptr;
      for (std::size_t i = 0; i < args.size() && !active; ++i) {
        for (auto* sub : app.get_subcommands({})) {
          if (sub->get_name() == args[i]) {
            active = sub;
            sub_pos = i;
          }
        }
      }
      std::vector<std::string> injected;
      for (const auto& [key, value] : read_config_file(config_path)) {
        const std::string flag = "--" + key;
        bool known = false;
        for (auto* sub : app.get_subcommands({})) {
          if (sub->get_option_no_throw(flag)) known = true;
        }
        if (!known) throw std::runtime_error("unknown config key '" + key + "'");
        auto* opt = active ? active->get_option_no_throw(flag) : nullptr;
        if (!opt) continue;
        if (opt->get_type_size() == 0) {
          if (value == "true" || value == "1") injected.push_back(flag);
        } else {
          injected.push_back(flag);
          injected.push_back(value);
        }
      }
      if (active) args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
                              injected.begin(), injected.end());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) {
      std::ifstream in(corpus_path);
      if (!in) throw std::runtime_error("cannot open '" + corpus_path + "'");
      stc::NoiseFilter noise;
      if (!noise_path.empty()) {
        std::ifstream pin(noise_path);
        if (!pin) throw std::runtime_error("cannot open '" + noise_path + "'");
        noise = stc::NoiseFilter::from_stream(pin);
      }
      auto result = stc::ingest_corpus(in, noise);
      ingest_pipeline.apply(result.bundle.config);
      for (const auto& e : result.errors) {
        std::cerr << corpus_path << ":" << e.line << ": skipped: " << e.reason << '\n';
      }
      stc::save_bundle(result.bundle, out_dir);
      auto report = stc::stats_to_json(result.bundle.stats);
      report["parse_errors"] = result.errors.size();
      print_json(report);
      return 0;
    }

    if (*demo) {
      std::ofstream out(demo_out);
      if (!out) throw std::runtime_error("cannot write '" + demo_out + "'");
      const auto posts = stc::synthetic_forum_corpus(demo_opts);
      stc::write_corpus(out, posts);
      std::cout << "wrote " << posts.size() << " posts to " << demo_out << '\n';
      return 0;
    }

    stc::EngineBundle bundle = stc::load_bundle(bundle_dir);

    if (*embed) {
      title_cfg.validate();
      stc::PvdmConfig reply_cfg = title_cfg;
      reply_cfg.dim = reply_dim;
      if (reply_epochs > 0) reply_cfg.epochs = reply_epochs;
      stc::train_embeddings(bundle, title_cfg, reply_cfg);
      stc::save_bundle(bundle, bundle_dir);
      const auto& t = *bundle.title_model;
      const auto& r = *bundle.reply_model;
      print_json({{"title", {{"dim", t.dim()}, {"docs", t.doc_ids().size()}, {"vocab", t.vocab().size()},
                             {"epoch_losses", t.epoch_losses()}, {"degenerate_docs", t.degenerate_docs()}}},
                  {"reply", {{"dim", r.dim()}, {"docs", r.doc_ids().size()}, {"vocab", r.vocab().size()},
                             {"epoch_losses", r.epoch_losses()}, {"degenerate_docs", r.degenerate_docs()}}},
                  {"tfidf_terms", bundle.tfidf->term_count()}});
      return 0;
    }

    if (*index) {
      stc::build_index(bundle);
      stc::save_bundle(bundle, bundle_dir);
      print_json({{"rows", bundle.index->size()}, {"dim", bundle.index->dim()}});
      return 0;
    }

    if (*rank) {
      rank_pipeline.apply(bundle.config);
      train_cfg.target_mode = stc::parse_target_mode(mode);
      train_cfg.activation = stc::parse_activation(activation);
      if (clip_opt->count()) train_cfg.gradient_clip = clip;
      const auto result = stc::train_bundle_ranker(bundle, train_cfg);
      stc::save_bundle(bundle, bundle_dir);
      print_json({{"mode", mode},
                  {"episodes", bundle.corpus.size()},
                  {"epoch_losses", result.epoch_losses},
                  {"parameters", result.params.parameter_count()}});
      return 0;
    }

    if (*eval) {
      eval_pipeline.apply(bundle.config);
      const auto ks = parse_ks(ks_text);
      const auto heldout = read_posts(heldout_path);
      const auto report = stc::evaluate_recall(bundle, heldout, ks);
      for (std::size_t i = 0; i < report.ks.size(); ++i) {
        std::printf("recall@%zu = %.4f\n", report.ks[i], report.recall[i]);
      }
      std::printf("queries = %zu, skipped = %zu\n", report.queries, report.skipped);
      return 0;
    }

    if (*chat) {
      chat_pipeline.apply(bundle.config);
      bundle.require_servable();
      const bool interactive = isatty(fileno(stdin)) != 0;
      stc::AnswerOptions options;
      if (chat_seed_opt->count()) options.seed = chat_seed;
      if (interactive) std::cout << "type a message, :trace toggles the trace, :quit exits\n";
      std::string line;
      while (true) {
        if (interactive) std::cout << "> " << std::flush;
        if (!std::getline(std::cin, line)) break;
        line = trim(line);
        if (line.empty()) continue;
        if (line == ":quit" || line == ":q") break;
        if (line == ":trace") {
          show_trace = !show_trace;
          continue;
        }
        try {
          const auto response = stc::answer(line, bundle, options);
          std::cout << response.response_text << '\n';
          if (show_trace) std::cout << stc::to_json(response.trace).dump(2) << '\n';
        } catch (const stc::InvalidQuery& e) {
          std::cout << "(" << e.what() << ")\n";
        }
      }
      return 0;
    }

    if (*serve) {
      serve_pipeline.apply(bundle.config);
      auto shared = std::make_shared<const stc::EngineBundle>(std::move(bundle));
      stc::ChatServer server(shared);
      if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) throw std::runtime_error("cannot bind " + host);
      } else if (!server.bind(host, port)) {
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
      }
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cout << "listening on http://" << host << ":" << port << std::endl;
      server.listen_after_bind();
      g_server = nullptr;
      return 0;
    }
  } catch (const stc::LoadError& e) {
    std::cerr << "error: cannot load bundle: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
