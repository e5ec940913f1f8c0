#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recovr/channels.hpp"
#include "recovr/fusion.hpp"
#include "recovr/gallery.hpp"
#include "recovr/intent.hpp"
#include "recovr/memory.hpp"
#include "recovr/reasoner.hpp"
#include "recovr/reflection.hpp"

namespace recovr {

struct AblationFlags {
  bool disable_t2v = false;
  bool disable_covr = false;
  bool disable_intent_routing = false;
  bool disable_reflection = false;
  bool disable_rank_cap = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

enum class CapMode {
  floor,  // effective rank = max(rank, kappa); others untouched
  shift,  // fresh lists: move the item to position kappa, shifting the rest up
};

std::string_view to_string(CapMode m);
CapMode parse_cap_mode(std::string_view s);

struct SessionConfig {
  int max_turns = 5;
  FusionConfig fusion;
  CapPolicy caps;
  ChannelConfig channels;
  AblationFlags ablation;
  std::size_t max_positives = kDefaultMaxPositives;
  // Cap in-window history records as well as the fresh lists.
  bool cap_history = true;
  CapMode cap_mode = CapMode::floor;
  bool mine_rejected_attributes = true;
  // Adds per-stage wall-clock timings to the trace (makes it non-reproducible).
  bool record_timing = false;

  void validate() const;
};

enum class SessionState { active, found, exhausted };

std::string_view to_string(SessionState s);

/// What one completed turn did; the session trace is a list of these.
struct TurnTrace {
  int turn = 0;
  std::optional<Question> question;   // pending when the feedback arrived
  std::optional<std::string> presented;  // top-1 the feedback refers to
  std::optional<FeedbackMessage> feedback;
  Query search;
  EditInstruction edit;
  std::optional<std::string> anchor;
  std::optional<Satisfaction> satisfaction;
  ConstraintDelta delta;
  RankCapAction cap;
  int cap_overrides = 0;
  std::vector<Channel> fired;
  RankedList fused;
  std::optional<Question> next_question;
  std::vector<std::pair<std::string, double>> timing_ms;
};

nlohmann::json turn_trace_json(const TurnTrace& t, const Gallery& gallery);

/// One interactive retrieval session: turn 0 is a single composed query
/// (reference, u0); every later turn consumes one feedback message.
class Session {
 public:
  Session(std::shared_ptr<const Gallery> gallery, std::shared_ptr<const ProgressMemoryLong> pm_l,
          SessionConfig config, std::shared_ptr<Reasoner> reasoner = nullptr);

  /// Runs turn 0. Throws InputError for an unknown reference or an edit that
  /// names nothing in the gallery; ProtocolError when already started.
  const RankedList& start(const std::string& reference_id, const EditInstruction& u0);

  /// Runs one feedback turn. accept terminates the session (found) and
  /// leaves every memory untouched. Throws ProtocolError once terminated.
  const RankedList& step(const FeedbackMessage& feedback);

  /// Marks the session found without a feedback turn.
  void mark_found();

  SessionState state() const { return state_; }
  bool started() const { return started_; }
  int turn() const { return pm_s_.turn; }
  const SessionConfig& config() const { return config_; }
  const ProgressMemoryShort& pm_short() const { return pm_s_; }
  const ResultMemory& result_memory() const { return rm_; }
  const std::optional<Question>& current_question() const { return pm_s_.last_question; }
  const RankedList& current() const;
  const std::vector<TurnTrace>& turns() const { return trace_; }

  nlohmann::json trace_json() const;

 private:
  RankedList fused_or_previous(int t);

  std::shared_ptr<const Gallery> gallery_;
  std::shared_ptr<const ProgressMemoryLong> pm_l_;
  SessionConfig config_;
  std::shared_ptr<Reasoner> reasoner_;
  AttributeBackend backend_;

  bool started_ = false;
  SessionState state_ = SessionState::active;
  ProgressMemoryShort pm_s_;
  ResultMemory rm_;
  std::vector<TurnTrace> trace_;
};

/// Moves `item_id` to position `cap_rank` (1-based) and renumbers the list;
/// no-op when it is absent or already at or below that position.
RankedList shift_cap(RankedList list, const std::string& item_id, int cap_rank);

}  // namespace recovr
