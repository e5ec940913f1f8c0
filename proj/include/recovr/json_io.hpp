#pragma once

// nlohmann::json bindings for the shared domain types. Constraints serialize
// as {"dimension": ..., "value": ...}; "dimension=value" strings are accepted
// on input as well.

#include <json.hpp>

#include "recovr/types.hpp"

namespace recovr {

void to_json(nlohmann::json& j, const Constraint& c);
void from_json(const nlohmann::json& j, Constraint& c);

nlohmann::json constraints_to_json(const ConstraintSet& set);
ConstraintSet constraints_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Query& q);
void from_json(const nlohmann::json& j, Query& q);

void to_json(nlohmann::json& j, const EditInstruction& e);
void from_json(const nlohmann::json& j, EditInstruction& e);

void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);

void to_json(nlohmann::json& j, const FeedbackMessage& f);
/// Throws InputError on malformed payloads.
void from_json(const nlohmann::json& j, FeedbackMessage& f);

void to_json(nlohmann::json& j, const RankedList& list);
void from_json(const nlohmann::json& j, RankedList& list);

/// Parses "dim=value; dim=value" (also comma separated).
ConstraintSet parse_constraint_text(std::string_view text);

}  // namespace recovr
