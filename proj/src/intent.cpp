#include "recovr/intent.hpp"

#include <cmath>

namespace recovr {

FeedbackMessage canonical_payload(const FeedbackMessage& feedback,
                                  const ProgressMemoryLong& pm_l) {
  FeedbackMessage out = feedback;
  auto map_set = [&](const ConstraintSet& in) {
    ConstraintSet mapped;
    for (const auto& c : in)
      if (auto v = pm_l.canonicalize(c.dimension, c.value)) mapped.insert({c.dimension, *v});
    return mapped;
  };
  out.payload_positive = map_set(feedback.payload_positive);
  out.payload_negative = map_set(feedback.payload_negative);
  for (const auto& c : out.payload_positive) out.payload_negative.erase(c);
  return out;
}

IntentDecomposition decompose(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                              const ProgressMemoryLong& pm_l) {
  if (feedback.action == FeedbackAction::accept)
    throw ProtocolError("accept terminates the session; nothing to decompose");
  const FeedbackMessage fb = canonical_payload(feedback, pm_l);

  IntentDecomposition out;
  switch (fb.action) {
    case FeedbackAction::rewrite:
      for (const auto& c : fb.payload_positive) out.search_info.assert_positive(c);
      for (const auto& c : fb.payload_negative) out.search_info.assert_negative(c);
      break;
    case FeedbackAction::modify:
      for (const auto& c : pm_s.constraints_positive) out.search_info.assert_positive(c);
      for (const auto& c : fb.payload_positive) {
        out.search_info.assert_positive(c);
        out.edit_info.set_delta(c.dimension, c.value);
      }
      for (const auto& c : fb.payload_negative) out.search_info.assert_negative(c);
      break;
    case FeedbackAction::answer:
      for (const auto& c : fb.payload_positive) out.search_info.assert_positive(c);
      for (const auto& c : fb.payload_negative) out.search_info.assert_negative(c);
      out.is_answer_to_prev = true;
      break;
    case FeedbackAction::accept:
      break;
  }
  if (fb.raw_text && !fb.raw_text->empty()) out.search_info.free_text = fb.raw_text;
  out.has_edit_intent = !out.edit_info.empty();
  return out;
}

Query compress_query(const Query& query, std::size_t max_positives) {
  if (query.positive().size() <= max_positives) return query;
  Query out;
  out.free_text = query.free_text;
  for (const auto& c : query.negative()) out.assert_negative(c);
  const auto& pos = query.positive();
  std::vector<Constraint> kept(pos.end() - static_cast<std::ptrdiff_t>(max_positives), pos.end());
  out.set_positives(std::move(kept));
  return out;
}

Reformed reform(const IntentDecomposition& decomposition, const ProgressMemoryShort& pm_s,
                std::size_t max_positives) {
  Query search = pm_s.running_search;
  for (const auto& c : pm_s.constraints_positive)
    if (!search.has_positive(c)) search.assert_positive(c);
  for (const auto& c : pm_s.constraints_negative) search.assert_negative(c);
  for (const auto& c : decomposition.search_info.positive()) search.assert_positive(c);
  for (const auto& c : decomposition.search_info.negative()) search.assert_negative(c);
  if (decomposition.search_info.free_text) search.free_text = decomposition.search_info.free_text;
  return {compress_query(search, max_positives), decomposition.edit_info};
}

double value_entropy(std::span<const Item* const> candidates, std::string_view dimension) {
  if (candidates.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const Item* item : candidates) {
    auto v = item->value(dimension);
    // '\0' cannot collide with a real value
    ++counts[v ? *v : std::string(1, '\0')];
  }
  double h = 0.0;
  const double n = static_cast<double>(candidates.size());
  for (const auto& [_, c] : counts) {
    double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::string question_text(std::string_view dimension) {
  return "What " + std::string(dimension) + " should the target have?";
}

std::optional<Question> ask_question(const ProgressMemoryShort& pm_s, const RankedList& fused,
                                     const Gallery& gallery) {
  std::vector<const Item*> candidates;
  candidates.reserve(fused.entries.size());
  for (const auto& e : fused.entries)
    if (const Item* item = gallery.find(e.item_id)) candidates.push_back(item);

  std::vector<std::string> dims = gallery.schema();
  std::sort(dims.begin(), dims.end());
  std::optional<std::string> best;
  double best_h = 0.0;
  for (const auto& dim : dims) {
    if (pm_s.constrains(dim)) continue;
    double h = value_entropy(candidates, dim);
    if (h > best_h + 1e-12) {
      best_h = h;
      best = dim;
    }
  }
  if (!best) return std::nullopt;
  return Question{"q" + std::to_string(pm_s.turn + 1) + "-" + *best, *best, question_text(*best)};
}

}  // namespace recovr
