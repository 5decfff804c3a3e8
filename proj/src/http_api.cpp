#include "stc/http_api.hpp"

#include <httplib.h>

#include "stc/engine.hpp"
#include "stc/error.hpp"

namespace stc {

using nlohmann::json;

namespace {

ApiReply error_reply(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

}  // namespace

ChatService::ChatService(std::shared_ptr<const EngineBundle> bundle) : bundle_(std::move(bundle)) {
  if (!bundle_) throw Error("chat service needs a bundle");
  bundle_->require_servable();
}

ApiReply ChatService::chat(const std::string& request_body) {
  json req;
  try {
    req = json::parse(request_body);
  } catch (const json::exception&) {
    return error_reply(400, "bad_request", "body is not valid JSON");
  }
  if (!req.is_object()) return error_reply(400, "bad_request", "body must be an object");

  const auto utterance = req.find("utterance");
  if (utterance == req.end() || !utterance->is_string()) {
    return error_reply(400, "invalid_query", "utterance must be a non-empty string");
  }

  AnswerOptions options;
  if (auto it = req.find("policy"); it != req.end() && !it->is_null()) {
    if (!it->is_string() || (*it != "argmax" && *it != "sample")) {
      return error_reply(400, "bad_request", "policy must be \"argmax\" or \"sample\"");
    }
    options.policy = parse_policy(it->get<std::string>());
  }
  if (auto it = req.find("temperature"); it != req.end() && !it->is_null()) {
    if (!it->is_number() || !(it->get<double>() > 0.0)) {
      return error_reply(400, "bad_request", "temperature must be a number > 0");
    }
    options.temperature = it->get<double>();
  }
  if (auto it = req.find("seed"); it != req.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      return error_reply(400, "bad_request", "seed must be a non-negative integer");
    }
    options.seed = it->get<std::uint64_t>();
  }
  std::string session_id;
  if (auto it = req.find("session_id"); it != req.end() && !it->is_null()) {
    if (!it->is_string()) return error_reply(400, "bad_request", "session_id must be a string");
    session_id = it->get<std::string>();
  }

  ChatResponse response;
  try {
    response = answer(utterance->get<std::string>(), *bundle_, options);
  } catch (const InvalidQuery& e) {
    return error_reply(400, "invalid_query", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }

  if (session_id.empty()) session_id = sessions_.create();
  sessions_.append(session_id, Turn{utterance->get<std::string>(), response.response_text, now_ms()});

  return {200,
          {{"response_text", response.response_text},
           {"session_id", session_id},
           {"trace", to_json(response.trace)}}};
}

ApiReply ChatService::session(const std::string& session_id) const {
  auto s = sessions_.get(session_id);
  if (!s) return error_reply(404, "not_found", "unknown session '" + session_id + "'");
  return {200, to_json(*s)};
}

ApiReply ChatService::health() const {
  const auto& b = *bundle_;
  return {200,
          {{"status", "ok"},
           {"corpus_posts", b.corpus.size()},
           {"corpus_replies", b.corpus.reply_count()},
           {"model_dims",
            {{"title", b.title_model->dim()},
             {"reply", b.reply_model->dim()},
             {"ranker_features", b.ranker->m}}}}};
}

struct ChatServer::Impl {
  explicit Impl(std::shared_ptr<const EngineBundle> bundle) : service(std::move(bundle)) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    const auto send = [](httplib::Response& res, const ApiReply& reply) {
      res.status = reply.status;
      res.set_content(reply.body.dump(), "application/json; charset=utf-8");
    };
    server.Post("/v1/chat", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service.chat(req.body));
    });
    server.Get(R"(/v1/sessions/([^/]+))",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, service.session(req.matches[1]));
               });
    server.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, service.health());
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }

  ChatService service;
  httplib::Server server;
};

ChatServer::ChatServer(std::shared_ptr<const EngineBundle> bundle)
    : impl_(std::make_unique<Impl>(std::move(bundle))) {}

ChatServer::~ChatServer() { stop(); }

int ChatServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool ChatServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool ChatServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void ChatServer::stop() {
  if (impl_) impl_->server.stop();
}

void ChatServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

ChatService& ChatServer::service() { return impl_->service; }

}  // namespace stc
