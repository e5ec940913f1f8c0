#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace recovr {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A request that violates the session state machine (duplicate record,
// feedback after termination, accept routed into a pathway, ...).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using AttributeMap = std::map<std::string, std::string>;

struct Constraint {
  std::string dimension;
  std::string value;

  friend auto operator<=>(const Constraint&, const Constraint&) = default;
};

using ConstraintSet = std::set<Constraint>;

std::string to_string(const Constraint& c);
std::string render_constraints(const ConstraintSet& set);

/// Gallery element. `feature` is unit-norm and derived from `attributes`.
struct Item {
  std::string id;
  AttributeMap attributes;
  std::vector<double> feature;
  std::optional<std::string> thumbnail;

  std::optional<std::string> value(std::string_view dimension) const;
};

/// Target description used by the text channel.
///
/// Positives are kept in assertion order (most recent last) with at most one
/// value per dimension; a pair is never both positive and negative.
class Query {
 public:
  Query() = default;

  void assert_positive(const Constraint& c);
  void assert_negative(const Constraint& c);
  void retract_positive_dimension(std::string_view dimension);
  void set_positives(std::vector<Constraint> ordered);

  const std::vector<Constraint>& positive() const { return positive_; }
  const ConstraintSet& negative() const { return negative_; }

  bool has_positive(const Constraint& c) const;
  std::optional<std::string> positive_value(std::string_view dimension) const;
  AttributeMap positive_map() const;
  bool empty() const;

  std::optional<std::string> free_text;

  friend bool operator==(const Query&, const Query&) = default;

 private:
  std::vector<Constraint> positive_;
  ConstraintSet negative_;
};

/// Relative modification applied to an anchor item.
struct EditInstruction {
  AttributeMap deltas;
  std::set<std::string> removals;

  void set_delta(const std::string& dimension, const std::string& value);
  void remove(const std::string& dimension);
  bool empty() const { return deltas.empty() && removals.empty(); }

  friend bool operator==(const EditInstruction&, const EditInstruction&) = default;
};

std::string render_edit(const EditInstruction& edit);

/// Clarifying question about one attribute dimension.
struct Question {
  std::string id;
  std::string dimension;
  std::string text;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Surface alias of a vocabulary value, as produced by noisy feedback.
std::string alias_token(std::string_view value);
/// Inverse of alias_token; returns the input unchanged when it is not an alias.
std::string strip_alias(std::string_view token);

enum class FeedbackAction { modify, rewrite, answer, accept };

std::string_view to_string(FeedbackAction a);
FeedbackAction parse_feedback_action(std::string_view s);

struct FeedbackMessage {
  FeedbackAction action = FeedbackAction::modify;
  ConstraintSet payload_positive;
  ConstraintSet payload_negative;
  std::optional<std::string> answered_question;
  std::optional<std::string> raw_text;
  // "wrong / not this" marker; rewrite implies rejection on its own.
  bool explicit_reject = false;

  /// Throws InputError when the message breaks its invariants.
  void validate() const;

  friend bool operator==(const FeedbackMessage&, const FeedbackMessage&) = default;
};

enum class Channel { t2v, covr, fused };

std::string_view to_string(Channel c);
Channel parse_channel(std::string_view s);

struct RankedEntry {
  std::string item_id;
  int rank = 0;
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
  Channel channel = Channel::fused;
  int turn = 0;
  std::vector<RankedEntry> entries;
  int cutoff = 100;

  bool empty() const { return entries.empty(); }
  const std::string& top1() const;
  std::optional<int> rank_of(std::string_view item_id) const;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Sorts (id, score) pairs by score descending then id ascending, truncates
/// to `cutoff` and assigns ranks 1..n.
RankedList make_ranked_list(Channel channel, int turn,
                            std::vector<std::pair<std::string, double>> scored,
                            int cutoff);

/// Deterministic unit feature for an attribute map. Each (dimension, value)
/// pair owns a pseudo-random block seeded by a hash of the pair and `seed`;
/// dimensions absent from the map leave their block at zero.
std::vector<double> item_feature(const AttributeMap& attributes,
                                 std::span<const std::string> schema,
                                 std::uint64_t seed, int block_size = 8);

double dot(std::span<const double> a, std::span<const double> b);

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace recovr
