#include "recovr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "recovr/types.hpp"

namespace recovr {

double recall_at_k(std::span<const int> ranks, int k) {
  if (ranks.empty()) throw InputError("recall over an empty batch");
  if (k < 1) throw InputError("recall cutoff must be >= 1");
  auto hits = std::count_if(ranks.begin(), ranks.end(), [k](int r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double recall_at_k(std::span<const TurnRecord> records, int k) {
  std::vector<int> ranks;
  ranks.reserve(records.size());
  for (const auto& r : records)
    ranks.push_back(r.stopped ? 1 : r.target_rank.value_or(std::numeric_limits<int>::max()));
  return recall_at_k(ranks, k);
}

double bri(std::span<const QueryTrajectory> trajectories, int T) {
  if (trajectories.empty()) throw InputError("BRI over an empty batch");
  if (T < 1) throw InputError("BRI needs T >= 1");
  double total = 0.0;
  for (const auto& q : trajectories) {
    if (q.ranks.size() < static_cast<std::size_t>(T) + 1)
      throw InputError("query " + q.query_id + " lacks ranks up to turn " + std::to_string(T));
    int best = q.ranks[0];
    double prev_log = std::log(static_cast<double>(best));
    double area = 0.0;
    for (int t = 1; t <= T; ++t) {
      best = std::min(best, q.ranks[t]);
      double cur_log = std::log(static_cast<double>(best));
      area += 0.5 * (prev_log + cur_log);
      prev_log = cur_log;
    }
    total += area / T;
  }
  return total / static_cast<double>(trajectories.size());
}

std::vector<QueryTrajectory> trajectories_from_records(std::span<const TurnRecord> records,
                                                       int max_turn, int cutoff) {
  std::map<std::string, std::vector<const TurnRecord*>> by_query;
  for (const auto& r : records) by_query[r.query_id].push_back(&r);
  std::vector<QueryTrajectory> out;
  for (auto& [qid, recs] : by_query) {
    std::sort(recs.begin(), recs.end(),
              [](const TurnRecord* a, const TurnRecord* b) { return a->turn < b->turn; });
    QueryTrajectory q{qid, std::vector<int>(max_turn + 1, absent_rank(cutoff))};
    bool stopped = false;
    std::vector<bool> seen(max_turn + 1, false);
    for (const TurnRecord* r : recs) {
      if (r->turn < 0 || r->turn > max_turn) continue;
      seen[r->turn] = true;
      stopped = stopped || r->stopped;
      q.ranks[r->turn] = stopped ? 1 : r->target_rank.value_or(absent_rank(cutoff));
    }
    for (int t = 1; t <= max_turn; ++t)
      if (!seen[t] && (stopped || q.ranks[t - 1] == 1)) q.ranks[t] = 1;
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<MetricRow> metric_table(std::span<const QueryTrajectory> trajectories, int max_turn) {
  if (trajectories.empty()) throw InputError("metric table over an empty batch");
  std::vector<MetricRow> rows;
  for (int t = 0; t <= max_turn; ++t) {
    std::vector<int> ranks;
    ranks.reserve(trajectories.size());
    for (const auto& q : trajectories) ranks.push_back(q.ranks.at(t));
    MetricRow row{t, recall_at_k(ranks, 1), recall_at_k(ranks, 5), recall_at_k(ranks, 10),
                  recall_at_k(ranks, 50), std::nullopt};
    if (t >= 1) row.bri = bri(trajectories, t);
    rows.push_back(row);
  }
  return rows;
}

void write_metric_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "turn,R@1,R@5,R@10,R@50,BRI\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,", r.turn, r.r1, r.r5, r.r10, r.r50);
    out << buf;
    if (r.bri) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.bri);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace recovr
