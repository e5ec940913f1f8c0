#pragma once

#include <optional>

#include "recovr/memory.hpp"
#include "recovr/types.hpp"

namespace recovr {

enum class Satisfaction { negative, neutral };

std::string_view to_string(Satisfaction s);
Satisfaction parse_satisfaction(std::string_view s);

struct ReflectionOutcome {
  Satisfaction satisfaction = Satisfaction::neutral;
  ConstraintSet delta_positive;
  ConstraintSet delta_negative;

  ConstraintDelta delta() const { return {delta_positive, delta_negative}; }
};

struct ReflectionConfig {
  // On rejection, values of the presented item that contradict held
  // positives become negatives.
  bool mine_rejected_attributes = true;
};

/// Satisfaction is negative for rewrite or an explicit reject flag, neutral
/// otherwise (answers are always neutral). Deltas exclude constraints
/// already held in `pm_s`.
ReflectionOutcome reflect(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                          const ProgressMemoryLong& pm_l, const ReflectionConfig& config = {});

enum class CapTrigger { none, explicit_rejection, stagnation };

std::string_view to_string(CapTrigger t);

struct RankCapAction {
  std::optional<std::string> target_item;
  std::optional<int> cap_rank;
  CapTrigger trigger = CapTrigger::none;

  friend bool operator==(const RankCapAction&, const RankCapAction&) = default;
};

struct CapPolicy {
  int kappa_neg = 11;
  int kappa_neu = 4;
};

/// Rejection caps the last presented item at kappa_neg; a neutral turn whose
/// last two presented items coincide caps that item at kappa_neu.
///
/// `last_top1` is the fused top-1 of turn t-1, `previous_top1` that of turn
/// t-2 (absent at t = 1).
RankCapAction rank_cap_policy(Satisfaction satisfaction,
                              const std::optional<std::string>& last_top1,
                              const std::optional<std::string>& previous_top1,
                              const CapPolicy& policy = {});

/// Convenience overload reading the presented history of `pm_s`.
RankCapAction rank_cap_policy(Satisfaction satisfaction, const ProgressMemoryShort& pm_s,
                              const CapPolicy& policy = {});

}  // namespace recovr
