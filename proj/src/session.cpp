#include "stc/session.hpp"

#include <algorithm>
#include <chrono>
#include <random>

namespace stc {

using nlohmann::json;

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string SessionStore::create() {
  static constexpr char kHex[] = "0123456789abcdef";
  std::random_device rd;
  std::lock_guard lock(mu_);
  for (;;) {
    std::string id(32, '0');
    for (auto& ch : id) ch = kHex[rd() & 0xF];
    if (sessions_.contains(id)) continue;
    sessions_.emplace(id, Session{id, now_ms(), {}});
    return id;
  }
}

void SessionStore::append(const std::string& session_id, Turn turn) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = sessions_.try_emplace(session_id, Session{session_id, turn.timestamp_ms, {}});
  it->second.history.push_back(std::move(turn));
}

std::optional<Session> SessionStore::get(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json SessionStore::export_json() const {
  std::lock_guard lock(mu_);
  std::vector<const Session*> all;
  for (const auto& [id, s] : sessions_) all.push_back(&s);
  std::sort(all.begin(), all.end(),
            [](const Session* a, const Session* b) { return a->session_id < b->session_id; });
  json out = json::array();
  for (const auto* s : all) out.push_back(to_json(*s));
  return out;
}

json to_json(const Session& session) {
  json history = json::array();
  for (const auto& t : session.history) {
    history.push_back(
        {{"utterance", t.utterance}, {"response", t.response}, {"timestamp", t.timestamp_ms}});
  }
  return {{"session_id", session.session_id},
          {"created_at", session.created_at_ms},
          {"history", std::move(history)}};
}

}  // namespace stc
