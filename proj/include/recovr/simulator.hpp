#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "recovr/types.hpp"

namespace recovr {

enum class FeedbackPolicy { mixed, modify_only, rewrite_only };
enum class NoiseLevel { none, light, heavy };

std::string_view to_string(FeedbackPolicy p);
FeedbackPolicy parse_feedback_policy(std::string_view s);
std::string_view to_string(NoiseLevel n);
NoiseLevel parse_noise_level(std::string_view s);

struct SimulatorConfig {
  FeedbackPolicy policy = FeedbackPolicy::mixed;
  double answer_probability = 0.5;
  NoiseLevel noise = NoiseLevel::none;
  double drop_probability = 0.0;
  std::uint64_t rng_seed = 0;
  std::size_t max_modify_diffs = 2;

  void validate() const;
};

enum class DiffStatus { minor, major };

std::string_view to_string(DiffStatus s);

struct AttributeDiff {
  std::string dimension;
  std::string target_value;     // empty when the target lacks the dimension
  std::string candidate_value;  // empty when the candidate lacks the dimension

  friend bool operator==(const AttributeDiff&, const AttributeDiff&) = default;
};

struct Discrepancy {
  DiffStatus status = DiffStatus::major;
  std::vector<AttributeDiff> diffs;  // sorted by dimension
};

/// MINOR iff both share the category. Throws ProtocolError when the
/// candidate is the target itself.
Discrepancy compare(const Item& target, const Item& candidate);

/// One simulator response. Accepts when the candidate is the target;
/// otherwise picks modify / answer / rewrite per policy and applies the
/// configured degradation.
FeedbackMessage generate_feedback(const Item& target, const Item& candidate,
                                  const std::optional<Question>& question,
                                  const SimulatorConfig& config, std::mt19937_64& rng);

/// Per-turn generator: the same (seed, turn) always yields the same stream.
std::mt19937_64 turn_rng(std::uint64_t seed, int turn);

struct SimulatorTurn {
  int turn = 0;
  std::string candidate;
  std::optional<DiffStatus> status;
  FeedbackMessage feedback;
};

/// Target-conditioned user. Sees only the presented top-1 and the optional
/// question each turn.
class UserSimulator {
 public:
  UserSimulator(Item target, SimulatorConfig config);

  FeedbackMessage respond(const Item& candidate, const std::optional<Question>& question,
                          int turn);

  const Item& target() const { return target_; }
  const std::vector<SimulatorTurn>& trace() const { return trace_; }
  nlohmann::json trace_json() const;

 private:
  Item target_;
  SimulatorConfig config_;
  std::vector<SimulatorTurn> trace_;
};

}  // namespace recovr
