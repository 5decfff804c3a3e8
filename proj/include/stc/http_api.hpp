#pragma once

// JSON-over-HTTP chat API:
//
//   POST /v1/chat           {session_id, utterance, policy?, temperature?, seed?}
//   GET  /v1/sessions/{id}  conversation history, 404 when unknown
//   GET  /v1/health         {status, corpus_posts, corpus_replies, model_dims}
//
// Every response carries permissive CORS headers.

#include <memory>
#include <string>

#include <json.hpp>

#include "stc/bundle.hpp"
#include "stc/session.hpp"

namespace stc {

struct ApiReply {
  int status = 200;
  nlohmann::json body;
};

/// Transport-independent request handling over a shared read-only bundle.
class ChatService {
 public:
  explicit ChatService(std::shared_ptr<const EngineBundle> bundle);

  ApiReply chat(const std::string& request_body);
  ApiReply session(const std::string& session_id) const;
  ApiReply health() const;

  const SessionStore& sessions() const noexcept { return sessions_; }

 private:
  std::shared_ptr<const EngineBundle> bundle_;
  SessionStore sessions_;
};

class ChatServer {
 public:
  explicit ChatServer(std::shared_ptr<const EngineBundle> bundle);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  /// Binds to a free port and returns it, or -1 on failure.
  int bind_to_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a successful bind.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

  ChatService& service();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stc
