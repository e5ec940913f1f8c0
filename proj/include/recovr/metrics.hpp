#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace recovr {

struct TurnRecord {
  std::string query_id;
  int turn = 0;
  std::optional<int> target_rank;  // absent: beyond the list cutoff
  bool stopped = false;
};

/// Rank of the target at turns 0..T for one query, carry-forward applied.
struct QueryTrajectory {
  std::string query_id;
  std::vector<int> ranks;
};

/// Rank used for an absent target.
inline int absent_rank(int cutoff) { return cutoff + 1; }

/// Fraction of records whose target rank is <= k. Throws InputError on an
/// empty batch or k < 1.
double recall_at_k(std::span<const TurnRecord> records, int k);
double recall_at_k(std::span<const int> ranks, int k);

/// Best log-rank integral up to turn T. With b_t the best rank up to t:
///   BRI@T = mean_q (1/T) sum_{t=1..T} (ln b_{t-1} + ln b_t) / 2.
/// Lower is better; 0 when every rank is 1.
double bri(std::span<const QueryTrajectory> trajectories, int T);

/// Builds trajectories from per-turn records: absent ranks become
/// cutoff + 1 and a stopped query reports rank 1 from then on.
std::vector<QueryTrajectory> trajectories_from_records(std::span<const TurnRecord> records,
                                                       int max_turn, int cutoff);

struct MetricRow {
  int turn = 0;
  double r1 = 0, r5 = 0, r10 = 0, r50 = 0;
  std::optional<double> bri;  // undefined at turn 0
};

std::vector<MetricRow> metric_table(std::span<const QueryTrajectory> trajectories, int max_turn);

/// "turn,R@1,R@5,R@10,R@50,BRI" with fixed 6-decimal formatting.
void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows);

}  // namespace recovr
