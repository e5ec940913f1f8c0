#include "recovr/reasoner.hpp"

#include <iostream>

#include <httplib.h>

#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;

// ---------------------------------------------------------------- rule-based

IntentDecomposition RuleBasedReasoner::decompose(const FeedbackMessage& feedback,
                                                 const ProgressMemoryShort& pm_s,
                                                 const ProgressMemoryLong& pm_l) {
  return recovr::decompose(feedback, pm_s, pm_l);
}

Query RuleBasedReasoner::compress(const Query& query, std::size_t max_positives,
                                  const ProgressMemoryLong&) {
  return compress_query(query, max_positives);
}

ReflectionOutcome RuleBasedReasoner::reflect(const FeedbackMessage& feedback,
                                             const ProgressMemoryShort& pm_s,
                                             const ProgressMemoryLong& pm_l) {
  return recovr::reflect(feedback, pm_s, pm_l, config_);
}

std::optional<Question> RuleBasedReasoner::ask_question(const ProgressMemoryShort& pm_s,
                                                        const RankedList& fused,
                                                        const Gallery& gallery) {
  return recovr::ask_question(pm_s, fused, gallery);
}

// ---------------------------------------------------------------- wire format

std::string render_feedback_text(const FeedbackMessage& feedback) {
  if (feedback.raw_text && !feedback.raw_text->empty()) return *feedback.raw_text;
  std::string out(to_string(feedback.action));
  std::string body = render_constraints(feedback.payload_positive);
  for (const auto& c : feedback.payload_negative) {
    if (!body.empty()) body += "; ";
    body += "!" + to_string(c);
  }
  if (!body.empty()) out += ": " + body;
  return out;
}

std::string render_query_text(const Query& query) {
  std::string out;
  for (const auto& c : query.positive()) {
    if (!out.empty()) out += "; ";
    out += to_string(c);
  }
  for (const auto& c : query.negative()) {
    if (!out.empty()) out += "; ";
    out += "!" + to_string(c);
  }
  return out;
}

namespace {

json constraint_phrases(const ConstraintSet& set) {
  json arr = json::array();
  for (const auto& c : set) arr.push_back(to_string(c));
  return arr;
}

void require_exact_keys(const json& j, std::initializer_list<std::string_view> keys,
                        std::string_view task) {
  if (!j.is_object()) throw SchemaViolation(std::string(task) + ": response is not an object");
  for (auto k : keys)
    if (!j.contains(std::string(k)))
      throw SchemaViolation(std::string(task) + ": missing key '" + std::string(k) + "'");
  if (j.size() != keys.size())
    throw SchemaViolation(std::string(task) + ": unexpected keys in response");
}

void require_type(bool ok, std::string_view task, std::string_view key, std::string_view type) {
  if (!ok)
    throw SchemaViolation(std::string(task) + ": '" + std::string(key) + "' must be " +
                          std::string(type));
}

ConstraintSet parse_phrases(std::string_view text, std::string_view task) {
  try {
    return parse_constraint_text(text);
  } catch (const InputError& e) {
    throw SchemaViolation(std::string(task) + ": " + e.what());
  }
}

std::optional<Constraint> canonical(const Constraint& c, const ProgressMemoryLong& pm_l) {
  if (auto v = pm_l.canonicalize(c.dimension, c.value)) return Constraint{c.dimension, *v};
  return std::nullopt;
}

}  // namespace

json decompose_request(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                       const ProgressMemoryLong& pm_l) {
  json prev_q = pm_s.last_question ? json(pm_s.last_question->text) : json(nullptr);
  auto top1 = pm_s.last_presented();
  return {{"task", "intent_decompose"},
          {"prev_question", prev_q},
          {"prev_top1_caption", top1 ? pm_l.caption(*top1) : std::string{}},
          {"user_query", render_feedback_text(feedback)}};
}

json rewrite_request(const Query& query) {
  return {{"task", "rewrite_queries"}, {"query_to_rewrite", render_query_text(query)}};
}

json reflect_request(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                     const ProgressMemoryLong& pm_l) {
  auto top1 = pm_s.last_presented();
  json context = {{"running_search", render_query_text(pm_s.running_search)},
                  {"running_edit", render_edit(pm_s.running_edit)},
                  {"constraints_positive", constraint_phrases(pm_s.constraints_positive)},
                  {"constraints_negative", constraint_phrases(pm_s.constraints_negative)},
                  {"presented_caption", top1 ? pm_l.caption(*top1) : std::string{}}};
  return {{"task", "state_reflect"},
          {"user_feedback", render_feedback_text(feedback)},
          {"reflection_context", std::move(context)}};
}

json question_request(const ProgressMemoryShort& pm_s) {
  return {{"task", "question_ask"},
          {"current_search_query", render_query_text(pm_s.running_search)},
          {"current_edit_query", render_edit(pm_s.running_edit)},
          {"constraints_positive", constraint_phrases(pm_s.constraints_positive)},
          {"constraints_negative", constraint_phrases(pm_s.constraints_negative)}};
}

IntentDecomposition parse_decompose_response(const json& r, const ProgressMemoryLong& pm_l) {
  constexpr std::string_view task = "intent_decompose";
  require_exact_keys(r, {"reasoning", "is_answer_to_prev_question", "has_edit_intent",
                         "search_query_info", "edit_query_info"},
                     task);
  require_type(r["reasoning"].is_string(), task, "reasoning", "a string");
  require_type(r["is_answer_to_prev_question"].is_boolean(), task, "is_answer_to_prev_question",
               "a boolean");
  require_type(r["has_edit_intent"].is_boolean(), task, "has_edit_intent", "a boolean");
  require_type(r["search_query_info"].is_string(), task, "search_query_info", "a string");
  require_type(r["edit_query_info"].is_string(), task, "edit_query_info", "a string");

  IntentDecomposition out;
  out.is_answer_to_prev = r["is_answer_to_prev_question"].get<bool>();
  std::string search = r["search_query_info"].get<std::string>();
  for (auto c : parse_phrases(search, task)) {
    bool negative = c.dimension.starts_with('!');
    if (negative) c.dimension.erase(0, 1);
    auto canon = canonical(c, pm_l);
    if (!canon) continue;
    if (negative)
      out.search_info.assert_negative(*canon);
    else
      out.search_info.assert_positive(*canon);
  }
  std::string edit = r["edit_query_info"].get<std::string>();
  bool has_edit = r["has_edit_intent"].get<bool>();
  if (!has_edit && !edit.empty())
    throw SchemaViolation("intent_decompose: edit_query_info must be empty without edit intent");
  std::string deltas;
  std::size_t pos = 0;
  while (pos <= edit.size()) {
    auto next = edit.find_first_of(";,", pos);
    std::string piece = edit.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    auto b = piece.find_first_not_of(" \t");
    if (b != std::string::npos) {
      piece = piece.substr(b);
      if (piece.starts_with('-')) {
        auto e = piece.find_last_not_of(" \t");
        std::string dim = piece.substr(1, e);
        if (pm_l.vocabulary().contains(dim)) out.edit_info.remove(dim);
      } else {
        if (!deltas.empty()) deltas += ';';
        deltas += piece;
      }
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  for (const auto& c : parse_phrases(deltas, task))
    if (auto canon = canonical(c, pm_l)) out.edit_info.set_delta(canon->dimension, canon->value);
  out.has_edit_intent = !out.edit_info.empty();
  return out;
}

Query parse_rewrite_response(const json& r, const Query& original, const ProgressMemoryLong& pm_l) {
  constexpr std::string_view task = "rewrite_queries";
  require_exact_keys(r, {"reasoning", "rewritten_query"}, task);
  require_type(r["rewritten_query"].is_string(), task, "rewritten_query", "a string");
  Query out;
  out.free_text = original.free_text;
  for (auto c : parse_phrases(r["rewritten_query"].get<std::string>(), task)) {
    bool negative = c.dimension.starts_with('!');
    if (negative) c.dimension.erase(0, 1);
    auto canon = canonical(c, pm_l);
    if (!canon) continue;
    if (negative)
      out.assert_negative(*canon);
    else
      out.assert_positive(*canon);
  }
  return out;
}

ReflectionOutcome parse_reflect_response(const json& r, const ProgressMemoryShort& pm_s,
                                         const ProgressMemoryLong& pm_l) {
  constexpr std::string_view task = "state_reflect";
  require_exact_keys(r, {"reasoning", "satisfaction_level", "positive_constraints",
                         "negative_constraints"},
                     task);
  require_type(r["satisfaction_level"].is_string(), task, "satisfaction_level", "a string");
  require_type(r["positive_constraints"].is_array(), task, "positive_constraints", "an array");
  require_type(r["negative_constraints"].is_array(), task, "negative_constraints", "an array");

  ReflectionOutcome out;
  try {
    out.satisfaction = parse_satisfaction(r["satisfaction_level"].get<std::string>());
  } catch (const InputError& e) {
    throw SchemaViolation(std::string(task) + ": " + e.what());
  }
  auto collect = [&](const json& arr, bool positive) {
    for (const auto& p : arr) {
      require_type(p.is_string(), task, positive ? "positive_constraints" : "negative_constraints",
                   "an array of strings");
      for (const auto& c : parse_phrases(p.get<std::string>(), task)) {
        auto canon = canonical(c, pm_l);
        if (!canon) continue;
        if (positive && !pm_s.constraints_positive.contains(*canon))
          out.delta_positive.insert(*canon);
        if (!positive && !pm_s.constraints_negative.contains(*canon))
          out.delta_negative.insert(*canon);
      }
    }
  };
  collect(r["positive_constraints"], true);
  collect(r["negative_constraints"], false);
  for (const auto& c : out.delta_positive) out.delta_negative.erase(c);
  return out;
}

std::optional<Question> parse_question_response(const json& r, int next_turn) {
  constexpr std::string_view task = "question_ask";
  require_exact_keys(r, {"reasoning_brief", "question"}, task);
  require_type(r["question"].is_string(), task, "question", "a string");
  std::string text = r["question"].get<std::string>();
  if (text.empty()) return std::nullopt;
  return Question{"q" + std::to_string(next_turn) + "-ext", "", text};
}

// ---------------------------------------------------------------- HTTP

HttpReasoner::HttpReasoner(Options options, Logger log)
    : options_(std::move(options)), log_(std::move(log)) {
  if (!log_) log_ = [](const std::string& msg) { std::cerr << "[reasoner] " << msg << '\n'; };
}

std::optional<json> HttpReasoner::post(const json& request) {
  httplib::Client client(options_.host, options_.port);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  auto res = client.Post(options_.path, request.dump(), "application/json");
  if (!res) {
    note_fallback(request.value("task", "?"), "transport error: " + httplib::to_string(res.error()));
    return std::nullopt;
  }
  if (res->status != 200) {
    note_fallback(request.value("task", "?"), "HTTP status " + std::to_string(res->status));
    return std::nullopt;
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    note_fallback(request.value("task", "?"), std::string("invalid JSON: ") + e.what());
    return std::nullopt;
  }
}

void HttpReasoner::note_fallback(const std::string& task, const std::string& why) {
  ++fallbacks_;
  log_(task + " fell back to rule-based path (" + why + ")");
}

IntentDecomposition HttpReasoner::decompose(const FeedbackMessage& feedback,
                                            const ProgressMemoryShort& pm_s,
                                            const ProgressMemoryLong& pm_l) {
  if (feedback.action == FeedbackAction::accept)
    throw ProtocolError("accept terminates the session; nothing to decompose");
  if (auto r = post(decompose_request(feedback, pm_s, pm_l))) {
    try {
      return parse_decompose_response(*r, pm_l);
    } catch (const SchemaViolation& e) {
      note_fallback("intent_decompose", e.what());
    }
  }
  return fallback_.decompose(feedback, pm_s, pm_l);
}

Query HttpReasoner::compress(const Query& query, std::size_t max_positives,
                             const ProgressMemoryLong& pm_l) {
  if (query.positive().size() <= max_positives) return query;
  if (auto r = post(rewrite_request(query))) {
    try {
      Query q = parse_rewrite_response(*r, query, pm_l);
      if (q.positive().size() <= max_positives && !q.positive().empty()) return q;
      note_fallback("rewrite_queries", "rewritten query does not fit the threshold");
    } catch (const SchemaViolation& e) {
      note_fallback("rewrite_queries", e.what());
    }
  }
  return fallback_.compress(query, max_positives, pm_l);
}

ReflectionOutcome HttpReasoner::reflect(const FeedbackMessage& feedback,
                                        const ProgressMemoryShort& pm_s,
                                        const ProgressMemoryLong& pm_l) {
  if (feedback.action == FeedbackAction::accept)
    throw ProtocolError("accept terminates the session; nothing to reflect on");
  if (auto r = post(reflect_request(feedback, pm_s, pm_l))) {
    try {
      return parse_reflect_response(*r, pm_s, pm_l);
    } catch (const SchemaViolation& e) {
      note_fallback("state_reflect", e.what());
    }
  }
  return fallback_.reflect(feedback, pm_s, pm_l);
}

std::optional<Question> HttpReasoner::ask_question(const ProgressMemoryShort& pm_s,
                                                   const RankedList& fused,
                                                   const Gallery& gallery) {
  if (auto r = post(question_request(pm_s))) {
    try {
      return parse_question_response(*r, pm_s.turn + 1);
    } catch (const SchemaViolation& e) {
      note_fallback("question_ask", e.what());
    }
  }
  return fallback_.ask_question(pm_s, fused, gallery);
}

}  // namespace recovr
