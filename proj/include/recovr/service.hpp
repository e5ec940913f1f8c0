#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "recovr/gallery.hpp"
#include "recovr/memory.hpp"
#include "recovr/reasoner.hpp"
#include "recovr/session.hpp"
#include "recovr/simulator.hpp"

namespace httplib {
class Server;
}

namespace recovr {

enum class SessionMode { human, sim_replay };

std::string_view to_string(SessionMode m);
SessionMode parse_session_mode(std::string_view s);

struct ServiceOptions {
  SessionConfig session;
  SimulatorConfig simulator;  // sim_replay sessions
  std::chrono::seconds idle_timeout{3600};
  int cards = 10;  // result cards per response
  // Shared by every session; rule-based when null.
  std::shared_ptr<Reasoner> reasoner;
  std::function<std::chrono::steady_clock::time_point()> clock;
  // Runs inside a session's critical section before each engine turn.
  std::function<void()> before_turn;
};

/// HTTP/JSON session API. Each handler returns a status code and a JSON body
/// (or, for history, the serialized trace); `mount` binds them to a server.
class SessionService {
 public:
  struct Response {
    int status = 200;
    std::string body;
  };

  explicit SessionService(ServiceOptions options = {});

  /// Registers a gallery under `name` and builds its metadata cache.
  void add_gallery(const std::string& name, std::shared_ptr<const Gallery> gallery);

  Response health() const;
  Response galleries() const;
  Response create_session(const std::string& body);
  Response feedback(const std::string& id, const std::string& body);
  Response simulate(const std::string& id);
  Response found(const std::string& id);
  Response history(const std::string& id);

  /// Drops sessions idle for longer than the timeout; returns how many.
  std::size_t evict_idle();
  std::size_t session_count() const;

  void mount(httplib::Server& server);

 private:
  struct LoadedGallery {
    std::shared_ptr<const Gallery> gallery;
    std::shared_ptr<const ProgressMemoryLong> pm_l;
  };
  struct Entry {
    std::string id;
    std::string gallery;
    SessionMode mode = SessionMode::human;
    std::string created_at;
    std::mutex mu;
    std::unique_ptr<Session> session;
    std::unique_ptr<UserSimulator> simulator;
    std::chrono::steady_clock::time_point last_used;
  };

  std::shared_ptr<Entry> lookup(const std::string& id);
  nlohmann::json turn_payload(const Entry& e) const;
  nlohmann::json cards(const Entry& e, const RankedList& list) const;
  Response run_turn(const std::string& id, const std::optional<FeedbackMessage>& feedback);
  std::chrono::steady_clock::time_point now() const;

  ServiceOptions options_;
  std::map<std::string, LoadedGallery> galleries_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace recovr
