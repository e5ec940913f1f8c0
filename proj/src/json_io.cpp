#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void to_json(json& j, const Constraint& c) { j = {{"dimension", c.dimension}, {"value", c.value}}; }

void from_json(const json& j, Constraint& c) {
  if (j.is_string()) {
    auto set = parse_constraint_text(j.get<std::string>());
    if (set.size() != 1) throw InputError("expected a single 'dimension=value' constraint");
    c = *set.begin();
    return;
  }
  if (!j.is_object()) throw InputError("constraint must be an object or 'dimension=value'");
  c.dimension = j.at("dimension").get<std::string>();
  c.value = j.at("value").get<std::string>();
  if (c.dimension.empty() || c.value.empty()) throw InputError("constraint fields must be non-empty");
}

json constraints_to_json(const ConstraintSet& set) {
  json arr = json::array();
  for (const auto& c : set) arr.push_back(c);
  return arr;
}

ConstraintSet constraints_from_json(const json& j) {
  if (j.is_null()) return {};
  if (!j.is_array()) throw InputError("constraint list must be an array");
  ConstraintSet out;
  for (const auto& e : j) out.insert(e.get<Constraint>());
  return out;
}

void to_json(json& j, const Query& q) {
  j = {{"positive", q.positive()}, {"negative", constraints_to_json(q.negative())}};
  if (q.free_text) j["free_text"] = *q.free_text;
}

void from_json(const json& j, Query& q) {
  q = Query{};
  for (const auto& c : j.value("positive", json::array())) q.assert_positive(c.get<Constraint>());
  for (const auto& c : constraints_from_json(j.value("negative", json::array())))
    q.assert_negative(c);
  if (j.contains("free_text") && !j["free_text"].is_null())
    q.free_text = j["free_text"].get<std::string>();
}

void to_json(json& j, const EditInstruction& e) {
  j = {{"deltas", e.deltas}, {"removals", e.removals}};
}

void from_json(const json& j, EditInstruction& e) {
  e = EditInstruction{};
  const json deltas = j.value("deltas", json::object());
  for (const auto& [d, v] : deltas.items()) e.set_delta(d, v.get<std::string>());
  for (const auto& d : j.value("removals", json::array())) e.remove(d.get<std::string>());
}

void to_json(json& j, const Question& q) {
  j = {{"id", q.id}, {"dimension", q.dimension}, {"text", q.text}};
}

void from_json(const json& j, Question& q) {
  q.id = j.at("id").get<std::string>();
  q.dimension = j.at("dimension").get<std::string>();
  q.text = j.value("text", "");
}

void to_json(json& j, const FeedbackMessage& f) {
  j = {{"action", to_string(f.action)},
       {"payload_positive", constraints_to_json(f.payload_positive)},
       {"payload_negative", constraints_to_json(f.payload_negative)}};
  if (f.answered_question) j["answered_question"] = *f.answered_question;
  if (f.raw_text) j["raw_text"] = *f.raw_text;
  if (f.explicit_reject) j["explicit_reject"] = true;
}

void from_json(const json& j, FeedbackMessage& f) {
  if (!j.is_object()) throw InputError("feedback must be a JSON object");
  try {
    f = FeedbackMessage{};
    f.action = parse_feedback_action(j.at("action").get<std::string>());
    f.payload_positive = constraints_from_json(j.value("payload_positive", json::array()));
    f.payload_negative = constraints_from_json(j.value("payload_negative", json::array()));
    if (j.contains("answered_question") && !j["answered_question"].is_null())
      f.answered_question = j["answered_question"].get<std::string>();
    if (j.contains("raw_text") && !j["raw_text"].is_null())
      f.raw_text = j["raw_text"].get<std::string>();
    f.explicit_reject = j.value("explicit_reject", false);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed feedback: ") + e.what());
  }
  f.validate();
}

void to_json(json& j, const RankedList& list) {
  json entries = json::array();
  for (const auto& e : list.entries)
    entries.push_back({{"item_id", e.item_id}, {"rank", e.rank}, {"score", e.score}});
  j = {{"channel", to_string(list.channel)},
       {"turn", list.turn},
       {"cutoff", list.cutoff},
       {"entries", std::move(entries)}};
}

void from_json(const json& j, RankedList& list) {
  list.channel = parse_channel(j.at("channel").get<std::string>());
  list.turn = j.at("turn").get<int>();
  list.cutoff = j.value("cutoff", 100);
  list.entries.clear();
  for (const auto& e : j.at("entries"))
    list.entries.push_back(
        {e.at("item_id").get<std::string>(), e.at("rank").get<int>(), e.at("score").get<double>()});
}

ConstraintSet parse_constraint_text(std::string_view text) {
  ConstraintSet out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find_first_of(";,", pos);
    std::string_view piece =
        text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    std::string token = trim(piece);
    if (!token.empty()) {
      auto eq = token.find('=');
      if (eq == std::string::npos) throw InputError("expected 'dimension=value', got '" + token + "'");
      std::string dim = trim(std::string_view(token).substr(0, eq));
      std::string val = trim(std::string_view(token).substr(eq + 1));
      if (dim.empty() || val.empty()) throw InputError("empty side in '" + token + "'");
      out.insert({dim, val});
    }
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace recovr
