#include "recovr/session.hpp"

#include <algorithm>
#include <limits>

#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;

std::string_view to_string(CapMode m) { return m == CapMode::floor ? "floor" : "shift"; }

CapMode parse_cap_mode(std::string_view s) {
  if (s == "floor") return CapMode::floor;
  if (s == "shift") return CapMode::shift;
  throw InputError("unknown cap mode '" + std::string(s) + "'");
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::active: return "active";
    case SessionState::found: return "found";
    case SessionState::exhausted: return "exhausted";
  }
  return "?";
}

void SessionConfig::validate() const {
  if (max_turns < 0) throw InputError("max_turns must be >= 0");
  if (ablation.disable_t2v && ablation.disable_covr)
    throw InputError("at least one retrieval channel must stay enabled");
  if (caps.kappa_neg < 1 || caps.kappa_neu < 1) throw InputError("cap ranks must be >= 1");
  if (max_positives < 1) throw InputError("max_positives must be >= 1");
  fusion.validate();
  channels.validate();
}

RankedList shift_cap(RankedList list, const std::string& item_id, int cap_rank) {
  auto it = std::find_if(list.entries.begin(), list.entries.end(),
                         [&](const RankedEntry& e) { return e.item_id == item_id; });
  if (it == list.entries.end()) return list;
  const auto pos = static_cast<std::size_t>(it - list.entries.begin());
  const auto dest = std::min(static_cast<std::size_t>(cap_rank - 1), list.entries.size() - 1);
  if (pos >= dest) return list;
  RankedEntry moved = *it;
  list.entries.erase(it);
  list.entries.insert(list.entries.begin() + static_cast<std::ptrdiff_t>(dest), std::move(moved));
  for (std::size_t i = 0; i < list.entries.size(); ++i) list.entries[i].rank = static_cast<int>(i) + 1;
  return list;
}

namespace {

json channels_json(const std::vector<Channel>& fired) {
  json arr = json::array();
  for (auto c : fired) arr.push_back(to_string(c));
  return arr;
}

json optional_json(const auto& value) {
  return value ? json(*value) : json(nullptr);
}

class StageClock {
 public:
  StageClock(bool enabled, std::vector<std::pair<std::string, double>>& sink)
      : enabled_(enabled), sink_(sink), last_(std::chrono::steady_clock::now()) {}

  void mark(const char* stage) {
    if (!enabled_) return;
    auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(stage, std::chrono::duration<double, std::milli>(now - last_).count());
    last_ = now;
  }

 private:
  bool enabled_;
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace

json turn_trace_json(const TurnTrace& t, const Gallery&) {
  json j = {{"turn", t.turn},
            {"question", optional_json(t.question)},
            {"presented", optional_json(t.presented)},
            {"feedback", optional_json(t.feedback)},
            {"search", t.search},
            {"edit", t.edit},
            {"anchor", optional_json(t.anchor)},
            {"satisfaction", t.satisfaction ? json(to_string(*t.satisfaction)) : json(nullptr)},
            {"delta",
             {{"positive", constraints_to_json(t.delta.positive)},
              {"negative", constraints_to_json(t.delta.negative)}}},
            {"cap",
             {{"trigger", to_string(t.cap.trigger)},
              {"item", optional_json(t.cap.target_item)},
              {"rank", optional_json(t.cap.cap_rank)},
              {"overrides", t.cap_overrides}}},
            {"channels", channels_json(t.fired)},
            {"fused", t.fused},
            {"top1", t.fused.empty() ? json(nullptr) : json(t.fused.top1())},
            {"next_question", optional_json(t.next_question)}};
  if (!t.timing_ms.empty()) {
    json timing = json::object();
    for (const auto& [stage, ms] : t.timing_ms) timing[stage] = ms;
    j["timing_ms"] = std::move(timing);
  }
  return j;
}

Session::Session(std::shared_ptr<const Gallery> gallery,
                 std::shared_ptr<const ProgressMemoryLong> pm_l, SessionConfig config,
                 std::shared_ptr<Reasoner> reasoner)
    : gallery_(std::move(gallery)),
      pm_l_(std::move(pm_l)),
      config_(std::move(config)),
      reasoner_(std::move(reasoner)),
      backend_(gallery_, config_.channels) {
  config_.validate();
  if (!gallery_ || !pm_l_) throw InputError("session needs a gallery and its metadata cache");
  if (!pm_l_->covers(*gallery_))
    throw InputError("metadata cache was built for a different gallery");
  if (!reasoner_)
    reasoner_ = std::make_shared<RuleBasedReasoner>(
        ReflectionConfig{config_.mine_rejected_attributes});
}

const RankedList& Session::current() const {
  if (trace_.empty()) throw ProtocolError("session has not started");
  return trace_.back().fused;
}

const RankedList& Session::start(const std::string& reference_id, const EditInstruction& u0) {
  if (started_) throw ProtocolError("session already started");
  const Item* reference = gallery_->find(reference_id);
  if (!reference) throw InputError("unknown reference item '" + reference_id + "'");

  EditInstruction edit;
  for (const auto& [dim, value] : u0.deltas)
    if (auto v = pm_l_->canonicalize(dim, value)) edit.set_delta(dim, *v);
  for (const auto& dim : u0.removals)
    if (pm_l_->vocabulary().contains(dim) && !edit.deltas.contains(dim)) edit.remove(dim);
  if (edit.empty()) throw InputError("initial modification names nothing in the gallery");

  TurnTrace tr;
  StageClock clock(config_.record_timing, tr.timing_ms);
  RankedList covr = backend_.composed(*reference, edit, 0);
  clock.mark("covr");
  rm_.append(0, Channel::covr, covr);

  RankedList fused = covr;
  fused.channel = Channel::fused;
  if (static_cast<int>(fused.entries.size()) > config_.fusion.cutoff)
    fused.entries.resize(static_cast<std::size_t>(config_.fusion.cutoff));
  fused.cutoff = config_.fusion.cutoff;

  pm_s_.reference_item = reference_id;
  pm_s_.initial_edit = edit;
  pm_s_.running_edit = edit;
  for (const auto& [dim, value] : edit.deltas) pm_s_.running_search.assert_positive({dim, value});
  if (!fused.empty()) pm_s_.presented.push_back(fused.top1());
  started_ = true;

  if (config_.max_turns >= 1) {
    pm_s_.last_question = reasoner_->ask_question(pm_s_, fused, *gallery_);
  } else {
    state_ = SessionState::exhausted;
  }
  clock.mark("question");

  tr.turn = 0;
  tr.search = pm_s_.running_search;
  tr.edit = edit;
  tr.anchor = reference_id;
  tr.fired = {Channel::covr};
  tr.fused = std::move(fused);
  tr.next_question = pm_s_.last_question;
  trace_.push_back(std::move(tr));
  return trace_.back().fused;
}

RankedList Session::fused_or_previous(int t) {
  const int from =
      config_.fusion.variant == FusionVariant::static_rrf ? t : window_start(t, config_.fusion);
  if (!rm_.records_in(from, t).empty()) return fuse(rm_, config_.fusion, t);
  RankedList prev = trace_.back().fused;
  prev.turn = t;
  return prev;
}

const RankedList& Session::step(const FeedbackMessage& feedback) {
  if (!started_) throw ProtocolError("session has not started");
  if (state_ != SessionState::active)
    throw ProtocolError("session is " + std::string(to_string(state_)));
  feedback.validate();
  if (feedback.raw_text && !feedback.raw_text->empty() && !reasoner_->accepts_free_text())
    throw InputError("free-text feedback needs an external reasoner");
  if (feedback.action == FeedbackAction::answer &&
      (!pm_s_.last_question || feedback.answered_question != pm_s_.last_question->id))
    throw InputError("answer does not refer to the pending question");

  const int t = pm_s_.turn + 1;
  TurnTrace tr;
  tr.turn = t;
  tr.question = pm_s_.last_question;
  tr.presented = pm_s_.last_presented();
  tr.feedback = feedback;

  if (feedback.action == FeedbackAction::accept) {
    state_ = SessionState::found;
    tr.fused = trace_.back().fused;
    trace_.push_back(std::move(tr));
    return trace_.back().fused;
  }

  StageClock clock(config_.record_timing, tr.timing_ms);
  const AblationFlags& ab = config_.ablation;
  const ProgressMemoryShort snapshot = pm_s_;

  IntentDecomposition decomp = reasoner_->decompose(feedback, snapshot, *pm_l_);
  Reformed reformed = reform(decomp, snapshot, std::numeric_limits<std::size_t>::max());
  Query search = reasoner_->compress(reformed.search, config_.max_positives, *pm_l_);
  EditInstruction edit = reformed.edit;
  clock.mark("intent");

  ReflectionOutcome refl = reasoner_->reflect(feedback, snapshot, *pm_l_);
  ConstraintDelta delta = ab.disable_reflection ? ConstraintDelta{} : refl.delta();
  RankCapAction cap = ab.disable_rank_cap
                          ? RankCapAction{}
                          : rank_cap_policy(refl.satisfaction, snapshot, config_.caps);
  clock.mark("reflect");

  pm_s_ = pm_update_constraints(std::move(pm_s_), delta);
  for (const auto& c : delta.negative)
    if (!search.has_positive(c)) search.assert_negative(c);

  bool want_t2v = true;
  bool want_covr = !edit.empty();
  if (ab.disable_intent_routing) {
    want_t2v = feedback.action != FeedbackAction::modify;
    want_covr = feedback.action == FeedbackAction::modify && !edit.empty();
  }
  if (ab.disable_covr) {
    want_t2v = true;
    want_covr = false;
  }
  if (ab.disable_t2v) {
    want_t2v = false;
    for (const auto& c : decomp.search_info.positive()) edit.set_delta(c.dimension, c.value);
    want_covr = !edit.empty();
  }
  if (!want_covr) edit = EditInstruction{};

  std::optional<RankedList> t2v_list, covr_list;
  if (want_t2v && !search.positive().empty()) {
    t2v_list = backend_.text_to_item(search, t);
    tr.fired.push_back(Channel::t2v);
  }
  clock.mark("t2v");
  if (want_covr && snapshot.last_presented()) {
    tr.anchor = snapshot.last_presented();
    covr_list = backend_.composed(gallery_->at(*tr.anchor), edit, t);
    tr.fired.push_back(Channel::covr);
  }
  clock.mark("covr");

  if (cap.target_item && config_.cap_mode == CapMode::shift) {
    if (t2v_list) *t2v_list = shift_cap(std::move(*t2v_list), *cap.target_item, *cap.cap_rank);
    if (covr_list) *covr_list = shift_cap(std::move(*covr_list), *cap.target_item, *cap.cap_rank);
  }
  if (t2v_list) rm_.append(t, Channel::t2v, std::move(*t2v_list));
  if (covr_list) rm_.append(t, Channel::covr, std::move(*covr_list));
  if (cap.target_item) {
    const int from = config_.cap_history ? window_start(t, config_.fusion) : t;
    tr.cap_overrides = rm_.cap(*cap.target_item, *cap.cap_rank, from, t);
  }
  clock.mark("cap");

  RankedList fused = fused_or_previous(t);
  clock.mark("fuse");

  pm_s_ = pm_update_progress(std::move(pm_s_), search, edit,
                             fused.empty() ? *snapshot.last_presented() : fused.top1());
  if (t < config_.max_turns) {
    pm_s_.last_question = reasoner_->ask_question(pm_s_, fused, *gallery_);
  } else {
    pm_s_.last_question.reset();
    state_ = SessionState::exhausted;
  }
  clock.mark("question");

  tr.search = std::move(search);
  tr.edit = std::move(edit);
  tr.satisfaction = refl.satisfaction;
  tr.delta = std::move(delta);
  tr.cap = std::move(cap);
  tr.fused = std::move(fused);
  tr.next_question = pm_s_.last_question;
  trace_.push_back(std::move(tr));
  return trace_.back().fused;
}

void Session::mark_found() {
  if (!started_) throw ProtocolError("session has not started");
  if (state_ != SessionState::active)
    throw ProtocolError("session is " + std::string(to_string(state_)));
  state_ = SessionState::found;
}

json Session::trace_json() const {
  json turns = json::array();
  for (const auto& t : trace_) turns.push_back(turn_trace_json(t, *gallery_));
  const auto& ab = config_.ablation;
  json config = {{"max_turns", config_.max_turns},
                 {"fusion", to_string(config_.fusion.variant)},
                 {"window", config_.fusion.window},
                 {"rrf_k", config_.fusion.k},
                 {"topk", config_.fusion.cutoff},
                 {"cap_neg", config_.caps.kappa_neg},
                 {"cap_neu", config_.caps.kappa_neu},
                 {"cap_mode", to_string(config_.cap_mode)},
                 {"cap_history", config_.cap_history},
                 {"ablation",
                  {{"disable_t2v", ab.disable_t2v},
                   {"disable_covr", ab.disable_covr},
                   {"disable_intent_routing", ab.disable_intent_routing},
                   {"disable_reflection", ab.disable_reflection},
                   {"disable_rank_cap", ab.disable_rank_cap}}}};
  return {{"reference", pm_s_.reference_item},
          {"u0", pm_s_.initial_edit},
          {"state", to_string(state_)},
          {"config", std::move(config)},
          {"turns", std::move(turns)},
          {"result_memory", rm_.to_json()}};
}

}  // namespace recovr
