#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "cxrl/agent.hpp"
#include "cxrl/interpretable.hpp"
#include "cxrl/pipeline.hpp"

namespace cxrl {

/// Which transition source a session simulates with.
enum class TransitionChoice {
  Learned,              // empirical model only; unseen pairs are unknown
  LearnedWithFallback,  // empirical model, true dynamics for unseen pairs
  True,
};
std::string_view to_string(TransitionChoice c);
std::optional<TransitionChoice> parse_transition_choice(std::string_view name);

/// A service reply: HTTP status plus either a JSON body or raw text.
struct Response {
  int status = 200;
  nlohmann::json body;
  std::optional<std::string> raw;  // set for newline-delimited output
  std::string content_type = "application/json";

  std::string text() const { return raw ? *raw : body.dump(); }
};

struct ServiceLimits {
  int max_rollouts = 20000;
  int max_horizon = 64;
  int max_trajectory_steps = 1000;
};

struct TrajectoryRequest {
  std::string policy = "learned";  // learned | last_foil
  std::optional<int> n;
  std::string mode = "most-probable";
  std::optional<std::uint64_t> seed;
  bool jsonl = false;
};

class SessionService {
 public:
  explicit SessionService(ServiceLimits limits = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Body fields: layout (grid text, required), config (learning config),
  /// qtab / tmodel (serialized artifacts, skip training when qtab is given),
  /// transitions, seed, params (foil defaults), explore_episodes, background.
  Response create_session(const nlohmann::json& request);
  Response get_view(const std::string& id);
  /// Body: {"query": DSL text or {"rules": [...]}, "params": {...}}.
  Response post_query(const std::string& id, const nlohmann::json& request);
  /// Body: {"action": "Up" | ... | "auto" | "reset"}.
  Response post_step(const std::string& id, const nlohmann::json& request);
  Response get_trajectory(const std::string& id, const TrajectoryRequest& request);

  /// Serialized Q_t of a session, empty when unknown or still training.
  std::optional<std::string> q_table_text(const std::string& id);
  /// Blocks until background training of the session has finished.
  void wait_ready(const std::string& id);

  /// Writes layout.grid, agent.qtab, model.tmodel and session.json into `dir`.
  void save_snapshot(const std::string& id, const std::filesystem::path& dir);
  /// Restores a snapshot written by save_snapshot and returns the new session id.
  std::string restore_snapshot(const std::filesystem::path& dir);
  std::vector<std::string> session_ids() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string add(std::shared_ptr<Session> session);

  ServiceLimits limits_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// JSON error body {"error": {"code", "message"[, "column"]}}.
Response error_response(int status, std::string_view code, std::string_view message);

/// Binds the service's /v1 routes to an HTTP listener.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void listen();
  /// bind + listen on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cxrl
