#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "recovr/gallery.hpp"
#include "recovr/types.hpp"

namespace recovr {

/// Long-term progress memory: gallery metadata cache shared read-only by all
/// sessions over one gallery.
class ProgressMemoryLong {
 public:
  static ProgressMemoryLong build(const Gallery& gallery, std::string built_at = {});

  const std::string& caption(std::string_view item_id) const;
  const AttributeMap& attributes(std::string_view item_id) const;
  const std::map<std::string, std::string>& captions() const { return captions_; }
  const std::map<std::string, std::set<std::string>>& vocabulary() const { return vocabulary_; }
  std::uint64_t gallery_hash() const { return gallery_hash_; }
  const std::string& built_at() const { return built_at_; }
  bool covers(const Gallery& gallery) const;

  /// Maps a feedback value onto the gallery vocabulary for `dimension`
  /// (aliases resolved); nullopt when it names nothing in the gallery.
  std::optional<std::string> canonicalize(std::string_view dimension,
                                          std::string_view value) const;

  void save(const std::filesystem::path& path) const;
  /// Loads a cache file; throws InputError when it was built for a
  /// different gallery.
  static ProgressMemoryLong load(const std::filesystem::path& path, const Gallery& gallery);

 private:
  std::map<std::string, std::string> captions_;
  std::map<std::string, AttributeMap> attributes_;
  std::map<std::string, std::set<std::string>> vocabulary_;
  std::uint64_t gallery_hash_ = 0;
  std::string built_at_;
};

/// "category=dog; color=red; ..." in schema order.
std::string render_caption(const AttributeMap& attributes, std::span<const std::string> schema);

/// Short-term progress memory: the semantic state of one session.
struct ProgressMemoryShort {
  std::string reference_item;
  EditInstruction initial_edit;
  Query running_search;
  EditInstruction running_edit;
  ConstraintSet constraints_positive;
  ConstraintSet constraints_negative;
  std::optional<Question> last_question;
  int turn = 0;
  // Fused top-1 presented after each completed turn; index == turn.
  std::vector<std::string> presented;

  std::optional<std::string> last_presented() const;
  bool constrains(std::string_view dimension) const;

  friend bool operator==(const ProgressMemoryShort&, const ProgressMemoryShort&) = default;
};

struct ConstraintDelta {
  ConstraintSet positive;
  ConstraintSet negative;

  bool empty() const { return positive.empty() && negative.empty(); }
};

/// Merges `delta` into the accumulated constraints. Latest wins per
/// dimension for positives; a pair asserted on one side leaves the other.
ProgressMemoryShort pm_update_constraints(ProgressMemoryShort pm, const ConstraintDelta& delta);

/// Records the outcome of a completed turn and advances the turn counter.
ProgressMemoryShort pm_update_progress(ProgressMemoryShort pm, Query search,
                                       EditInstruction edit, std::string fused_top1);

struct RmRecord {
  int turn = 0;
  Channel channel = Channel::t2v;
  RankedList list;
};

struct RmEvent {
  enum class Kind { append, cap };
  Kind kind = Kind::append;
  RmRecord record;  // append
  std::string item_id;  // cap
  int cap_rank = 0;
  int from_turn = 0;
  int to_turn = 0;
};

/// Result memory: append-only per-turn per-channel ranked lists plus
/// non-destructive rank overrides written by rank-cap.
class ResultMemory {
 public:
  void append(int turn, Channel channel, RankedList list);

  /// Demotes `item_id` to `cap_rank` in every record with turn in
  /// [from_turn, to_turn] where its effective rank is better than the cap.
  /// Returns the number of overrides written.
  int cap(const std::string& item_id, int cap_rank, int from_turn, int to_turn);

  const RmRecord* find(int turn, Channel channel) const;
  std::vector<const RmRecord*> records_in(int from_turn, int to_turn) const;
  const std::vector<RmRecord>& records() const { return records_; }

  int effective_rank(int turn, Channel channel, const RankedEntry& entry) const;
  std::optional<int> effective_rank(int turn, Channel channel, std::string_view item_id) const;
  const std::map<std::tuple<int, Channel, std::string>, int>& overrides() const {
    return overrides_;
  }

  const std::vector<RmEvent>& events() const { return events_; }
  static ResultMemory replay(const std::vector<RmEvent>& events);

  nlohmann::json to_json() const;

  friend bool operator==(const ResultMemory& a, const ResultMemory& b) {
    return a.overrides_ == b.overrides_ && a.records_.size() == b.records_.size() &&
           std::equal(a.records_.begin(), a.records_.end(), b.records_.begin(),
                      [](const RmRecord& x, const RmRecord& y) {
                        return x.turn == y.turn && x.channel == y.channel && x.list == y.list;
                      });
  }

 private:
  std::vector<RmRecord> records_;
  std::map<std::tuple<int, Channel, std::string>, int> overrides_;
  std::vector<RmEvent> events_;
};

}  // namespace recovr
