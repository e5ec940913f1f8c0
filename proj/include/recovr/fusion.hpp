#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "recovr/memory.hpp"
#include "recovr/types.hpp"

namespace recovr {

enum class FusionVariant { twrrf, static_rrf, uniform_rrf, penalty_rrf, simmax, simsum };

std::string_view to_string(FusionVariant v);
FusionVariant parse_fusion_variant(std::string_view s);

enum class PenaltyMode {
  subtract,      // absentees contribute -w / (k + r_pen)
  penalty_rank,  // absentees contribute +w / (k + r_pen)
};

struct FusionConfig {
  FusionVariant variant = FusionVariant::twrrf;
  int window = 5;
  double k = 60.0;
  int cutoff = 100;
  int penalty_rank = 100;
  std::array<double, 2> channel_weights{0.5, 0.5};  // {T2V, CoVR}
  bool include_turn0 = false;
  PenaltyMode penalty_mode = PenaltyMode::subtract;

  void validate() const;
};

/// Normalized linear recency weights over the window ending at `t`:
///   t0 = max(1, t - W + 1), N = t - t0 + 1, w = 2 (t' - t0 + 1) / (N (N + 1)).
std::vector<std::pair<int, double>> recency_weights(int t, int window);

/// First turn of the fusion window (0 only with include_turn0 reaching back to turn 1).
int window_start(int t, const FusionConfig& config);

/// Fused score of every candidate in the in-window lists, honoring rank
/// overrides. Throws InputError when no record lies in the window.
std::map<std::string, double> fused_scores(const ResultMemory& rm, const FusionConfig& config,
                                           int t);

/// Fused list for turn `t`: scores from fused_scores sorted descending, ties
/// by id, truncated to the cutoff.
RankedList fuse(const ResultMemory& rm, const FusionConfig& config, int t);

}  // namespace recovr
