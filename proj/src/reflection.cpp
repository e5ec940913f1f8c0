#include "recovr/reflection.hpp"

#include "recovr/intent.hpp"

namespace recovr {

std::string_view to_string(Satisfaction s) {
  return s == Satisfaction::negative ? "negative" : "neutral";
}

Satisfaction parse_satisfaction(std::string_view s) {
  if (s == "negative") return Satisfaction::negative;
  if (s == "neutral") return Satisfaction::neutral;
  throw InputError("satisfaction_level must be 'negative' or 'neutral', got '" + std::string(s) +
                   "'");
}

std::string_view to_string(CapTrigger t) {
  switch (t) {
    case CapTrigger::none: return "none";
    case CapTrigger::explicit_rejection: return "explicit_rejection";
    case CapTrigger::stagnation: return "stagnation";
  }
  return "?";
}

ReflectionOutcome reflect(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                          const ProgressMemoryLong& pm_l, const ReflectionConfig& config) {
  if (feedback.action == FeedbackAction::accept)
    throw ProtocolError("accept terminates the session; nothing to reflect on");
  const FeedbackMessage fb = canonical_payload(feedback, pm_l);

  ReflectionOutcome out;
  bool rejected = fb.action == FeedbackAction::rewrite ||
                  (fb.explicit_reject && fb.action != FeedbackAction::answer);
  out.satisfaction = rejected ? Satisfaction::negative : Satisfaction::neutral;

  for (const auto& c : fb.payload_positive)
    if (!pm_s.constraints_positive.contains(c)) out.delta_positive.insert(c);
  for (const auto& c : fb.payload_negative)
    if (!pm_s.constraints_negative.contains(c)) out.delta_negative.insert(c);

  if (rejected && config.mine_rejected_attributes) {
    if (auto presented = pm_s.last_presented()) {
      // held positives after this turn's delta, latest wins per dimension
      std::map<std::string, std::string> held;
      for (const auto& c : pm_s.running_search.positive()) held[c.dimension] = c.value;
      for (const auto& c : pm_s.constraints_positive) held[c.dimension] = c.value;
      for (const auto& c : fb.payload_positive) held[c.dimension] = c.value;
      for (const auto& [dim, value] : pm_l.attributes(*presented)) {
        auto it = held.find(dim);
        if (it == held.end() || it->second == value) continue;
        Constraint c{dim, value};
        if (!pm_s.constraints_negative.contains(c) && !out.delta_positive.contains(c))
          out.delta_negative.insert(c);
      }
    }
  }
  for (const auto& c : out.delta_positive) out.delta_negative.erase(c);
  return out;
}

RankCapAction rank_cap_policy(Satisfaction satisfaction,
                              const std::optional<std::string>& last_top1,
                              const std::optional<std::string>& previous_top1,
                              const CapPolicy& policy) {
  if (!last_top1) return {};
  if (satisfaction == Satisfaction::negative)
    return {*last_top1, policy.kappa_neg, CapTrigger::explicit_rejection};
  if (previous_top1 && *previous_top1 == *last_top1)
    return {*last_top1, policy.kappa_neu, CapTrigger::stagnation};
  return {};
}

RankCapAction rank_cap_policy(Satisfaction satisfaction, const ProgressMemoryShort& pm_s,
                              const CapPolicy& policy) {
  const auto& p = pm_s.presented;
  std::optional<std::string> last, previous;
  if (!p.empty()) last = p.back();
  if (p.size() >= 2) previous = p[p.size() - 2];
  return rank_cap_policy(satisfaction, last, previous, policy);
}

}  // namespace recovr
