#include "recovr/service.hpp"

#include <ctime>
#include <random>

#include <httplib.h>

#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;

std::string_view to_string(SessionMode m) {
  return m == SessionMode::human ? "human" : "sim_replay";
}

SessionMode parse_session_mode(std::string_view s) {
  if (s == "human") return SessionMode::human;
  if (s == "sim_replay") return SessionMode::sim_replay;
  throw InputError("mode must be 'human' or 'sim_replay'");
}

namespace {

using Response = SessionService::Response;

Response reply(int status, const json& body) { return {status, body.dump()}; }

Response error(int status, const std::string& message) {
  return reply(status, {{"error", message}});
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_token(std::uint64_t counter) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, "s%04llx%012llx", static_cast<unsigned long long>(counter & 0xffff),
                static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

EditInstruction parse_u0(const json& j) {
  if (j.is_string()) {
    EditInstruction e;
    for (const auto& c : parse_constraint_text(j.get<std::string>())) e.set_delta(c.dimension, c.value);
    return e;
  }
  if (j.is_object()) return j.get<EditInstruction>();
  throw InputError("u0_edit must be an object {deltas, removals} or 'dimension=value' text");
}

}  // namespace

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {
  options_.session.validate();
  options_.simulator.validate();
  if (options_.cards < 1) throw InputError("cards must be >= 1");
  if (!options_.reasoner)
    options_.reasoner = std::make_shared<RuleBasedReasoner>(
        ReflectionConfig{options_.session.mine_rejected_attributes});
  if (!options_.clock) options_.clock = [] { return std::chrono::steady_clock::now(); };
}

std::chrono::steady_clock::time_point SessionService::now() const { return options_.clock(); }

void SessionService::add_gallery(const std::string& name, std::shared_ptr<const Gallery> gallery) {
  if (!gallery) throw InputError("null gallery");
  auto pm_l = std::make_shared<const ProgressMemoryLong>(ProgressMemoryLong::build(*gallery, utc_now()));
  galleries_[name] = {std::move(gallery), std::move(pm_l)};
}

Response SessionService::health() const {
  return reply(200, {{"status", "ok"}, {"sessions", session_count()}});
}

Response SessionService::galleries() const {
  json list = json::array();
  for (const auto& [name, g] : galleries_) {
    json vocab = json::object();
    for (const auto& [dim, values] : g.gallery->vocabulary()) vocab[dim] = values;
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(g.pm_l->gallery_hash()));
    list.push_back({{"name", name},
                    {"size", g.gallery->size()},
                    {"schema", g.gallery->schema()},
                    {"vocabulary", std::move(vocab)},
                    {"gallery_hash", hash}});
  }
  return reply(200, {{"galleries", std::move(list)},
                     {"max_turns", options_.session.max_turns},
                     {"free_text", options_.reasoner->accepts_free_text()}});
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(sessions_mu_);
  return sessions_.size();
}

std::size_t SessionService::evict_idle() {
  const auto cutoff = now() - options_.idle_timeout;
  std::lock_guard lock(sessions_mu_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock busy(it->second->mu, std::try_to_lock);
    if (busy.owns_lock() && it->second->last_used < cutoff) {
      busy.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::shared_ptr<SessionService::Entry> SessionService::lookup(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

json SessionService::cards(const Entry& e, const RankedList& list) const {
  const Gallery& g = *galleries_.at(e.gallery).gallery;
  json out = json::array();
  const std::size_t n = std::min(list.entries.size(), static_cast<std::size_t>(options_.cards));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = list.entries[i];
    const Item& item = g.at(entry.item_id);
    json card = {{"item_id", entry.item_id},
                 {"rank", entry.rank},
                 {"score", entry.score},
                 {"attributes", item.attributes}};
    if (item.thumbnail) card["thumbnail"] = *item.thumbnail;
    out.push_back(std::move(card));
  }
  return out;
}

json SessionService::turn_payload(const Entry& e) const {
  const Session& s = *e.session;
  const Gallery& g = *galleries_.at(e.gallery).gallery;
  const Item& ref = g.at(s.pm_short().reference_item);
  json body = {{"session_id", e.id},
               {"created_at", e.created_at},
               {"mode", to_string(e.mode)},
               {"state", to_string(s.state())},
               {"turn", s.turn()},
               {"max_turns", s.config().max_turns},
               {"reference", {{"item_id", ref.id}, {"attributes", ref.attributes}}},
               {"results", cards(e, s.current())},
               {"question", s.current_question() ? json(*s.current_question()) : json(nullptr)}};
  if (e.mode == SessionMode::sim_replay && e.simulator) {
    const Item& target = e.simulator->target();
    body["goal"] = {{"item_id", target.id}, {"attributes", target.attributes}};
  }
  return body;
}

Response SessionService::create_session(const std::string& body) {
  evict_idle();
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object()) return error(400, "request body must be a JSON object");

  auto entry = std::make_shared<Entry>();
  std::string reference;
  EditInstruction u0;
  try {
    entry->gallery = req.value("gallery_ref", galleries_.size() == 1 ? galleries_.begin()->first
                                                                      : std::string{});
    reference = req.at("reference_item_id").get<std::string>();
    if (!req.contains("u0_edit")) throw InputError("u0_edit is required");
    u0 = parse_u0(req["u0_edit"]);
    entry->mode = parse_session_mode(req.value("mode", std::string("human")));
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const InputError& e) {
    return error(400, e.what());
  }
  auto g = galleries_.find(entry->gallery);
  if (g == galleries_.end()) return error(404, "unknown gallery '" + entry->gallery + "'");
  if (!g->second.gallery->find(reference))
    return error(404, "unknown reference item '" + reference + "'");

  try {
    if (entry->mode == SessionMode::sim_replay) {
      if (!req.contains("target_item_id")) return error(400, "sim_replay needs target_item_id");
      std::string target = req["target_item_id"].get<std::string>();
      const Item* item = g->second.gallery->find(target);
      if (!item) return error(404, "unknown target item '" + target + "'");
      SimulatorConfig sim = options_.simulator;
      sim.rng_seed = req.value("seed", sim.rng_seed);
      entry->simulator = std::make_unique<UserSimulator>(*item, sim);
    }
    entry->session = std::make_unique<Session>(g->second.gallery, g->second.pm_l,
                                               options_.session, options_.reasoner);
    entry->session->start(reference, u0);
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const InputError& e) {
    return error(400, e.what());
  }

  entry->created_at = utc_now();
  entry->last_used = now();
  {
    std::lock_guard lock(sessions_mu_);
    do entry->id = random_token(next_id_++);
    while (sessions_.contains(entry->id));
    sessions_[entry->id] = entry;
  }
  return reply(201, turn_payload(*entry));
}

Response SessionService::run_turn(const std::string& id,
                                  const std::optional<FeedbackMessage>& feedback) {
  auto entry = lookup(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::unique_lock lock(entry->mu, std::try_to_lock);
  if (!lock.owns_lock()) return error(409, "another request for this session is in progress");
  entry->last_used = now();
  if (entry->session->state() != SessionState::active)
    return error(409, "session is " + std::string(to_string(entry->session->state())));
  if (options_.before_turn) options_.before_turn();

  FeedbackMessage fb;
  if (feedback) {
    fb = *feedback;
  } else {
    if (!entry->simulator) return error(409, "simulate is only available in sim_replay mode");
    const Session& s = *entry->session;
    const Gallery& g = *galleries_.at(entry->gallery).gallery;
    fb = entry->simulator->respond(g.at(s.current().top1()), s.current_question(), s.turn() + 1);
  }
  try {
    entry->session->step(fb);
  } catch (const ProtocolError& e) {
    return error(409, e.what());
  } catch (const InputError& e) {
    return error(400, e.what());
  }
  json body = turn_payload(*entry);
  body["feedback"] = fb;
  return reply(200, body);
}

Response SessionService::feedback(const std::string& id, const std::string& body) {
  if (!lookup(id)) return error(404, "unknown session '" + id + "'");
  FeedbackMessage fb;
  try {
    fb = json::parse(body).get<FeedbackMessage>();
  } catch (const json::exception& e) {
    return error(400, std::string("malformed feedback: ") + e.what());
  } catch (const InputError& e) {
    return error(400, e.what());
  }
  return run_turn(id, fb);
}

Response SessionService::simulate(const std::string& id) { return run_turn(id, std::nullopt); }

Response SessionService::found(const std::string& id) {
  auto entry = lookup(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::unique_lock lock(entry->mu, std::try_to_lock);
  if (!lock.owns_lock()) return error(409, "another request for this session is in progress");
  entry->last_used = now();
  try {
    entry->session->mark_found();
  } catch (const ProtocolError& e) {
    return error(409, e.what());
  }
  return reply(200, turn_payload(*entry));
}

Response SessionService::history(const std::string& id) {
  auto entry = lookup(id);
  if (!entry) return error(404, "unknown session '" + id + "'");
  std::lock_guard lock(entry->mu);
  entry->last_used = now();
  return {200, entry->session->trace_json().dump()};
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/health", [=, this](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  server.Get("/galleries", [=, this](const httplib::Request&, httplib::Response& res) {
    send(res, galleries());
  });
  server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, create_session(req.body));
  });
  server.Post(R"(/sessions/([^/]+)/feedback)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                send(res, feedback(req.matches[1], req.body));
              });
  server.Post(R"(/sessions/([^/]+)/simulate)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                send(res, simulate(req.matches[1]));
              });
  server.Post(R"(/sessions/([^/]+)/found)",
              [=, this](const httplib::Request& req, httplib::Response& res) {
                send(res, found(req.matches[1]));
              });
  server.Get(R"(/sessions/([^/]+)/history)",
             [=, this](const httplib::Request& req, httplib::Response& res) {
               send(res, history(req.matches[1]));
             });
}

}  // namespace recovr
