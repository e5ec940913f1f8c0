#pragma once

#include <optional>

#include "recovr/gallery.hpp"
#include "recovr/memory.hpp"
#include "recovr/types.hpp"

namespace recovr {

struct IntentDecomposition {
  Query search_info;
  EditInstruction edit_info;
  bool is_answer_to_prev = false;
  bool has_edit_intent = false;  // == !edit_info.empty()
};

/// Splits structured feedback into a target description and a relative edit.
///
///   rewrite -> standalone search, no edit
///   modify  -> edit deltas AND the payload merged into held constraints
///   answer  -> search fragment, flagged as an answer
///
/// Payload values are mapped onto the gallery vocabulary first; values that
/// name nothing in the gallery are dropped. Throws ProtocolError on accept.
IntentDecomposition decompose(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                              const ProgressMemoryLong& pm_l);

/// Feedback payload with every value mapped onto the gallery vocabulary.
FeedbackMessage canonical_payload(const FeedbackMessage& feedback, const ProgressMemoryLong& pm_l);

inline constexpr std::size_t kDefaultMaxPositives = 10;

struct Reformed {
  Query search;
  EditInstruction edit;
};

/// Merges the new search fragment into the running query (held constraints
/// first, then the fragment, latest wins). When more than `max_positives`
/// positives remain, the oldest are dropped.
Reformed reform(const IntentDecomposition& decomposition, const ProgressMemoryShort& pm_s,
                std::size_t max_positives = kDefaultMaxPositives);

/// Keeps the `max_positives` most recently asserted positives.
Query compress_query(const Query& query, std::size_t max_positives);

/// Shannon entropy (nats) of `dimension` over the candidates; a missing
/// attribute counts as its own value.
double value_entropy(std::span<const Item* const> candidates, std::string_view dimension);

/// Picks the unconstrained dimension whose values are most mixed among the
/// fused candidates. Ties go to the lexicographically smaller dimension.
std::optional<Question> ask_question(const ProgressMemoryShort& pm_s, const RankedList& fused,
                                     const Gallery& gallery);

std::string question_text(std::string_view dimension);

}  // namespace recovr
