#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace stc {

struct Turn {
  std::string utterance;
  std::string response;
  std::int64_t timestamp_ms = 0;
};

/// Conversation log. History never influences answers.
struct Session {
  std::string session_id;
  std::int64_t created_at_ms = 0;
  std::vector<Turn> history;
};

std::int64_t now_ms();

/// In-memory, thread-safe session log with append-only histories.
class SessionStore {
 public:
  /// Creates a session with a fresh random id.
  std::string create();
  /// Appends to the session, creating it first when the id is new.
  void append(const std::string& session_id, Turn turn);
  std::optional<Session> get(const std::string& session_id) const;
  std::size_t size() const;
  /// Every session, for export.
  nlohmann::json export_json() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, Session> sessions_;
};

nlohmann::json to_json(const Session& session);

}  // namespace stc
