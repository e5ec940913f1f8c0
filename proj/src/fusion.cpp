#include "recovr/fusion.hpp"

#include <algorithm>
#include <set>

namespace recovr {

std::string_view to_string(FusionVariant v) {
  switch (v) {
    case FusionVariant::twrrf: return "twrrf";
    case FusionVariant::static_rrf: return "static_rrf";
    case FusionVariant::uniform_rrf: return "uniform_rrf";
    case FusionVariant::penalty_rrf: return "penalty_rrf";
    case FusionVariant::simmax: return "simmax";
    case FusionVariant::simsum: return "simsum";
  }
  return "?";
}

FusionVariant parse_fusion_variant(std::string_view s) {
  for (auto v : {FusionVariant::twrrf, FusionVariant::static_rrf, FusionVariant::uniform_rrf,
                 FusionVariant::penalty_rrf, FusionVariant::simmax, FusionVariant::simsum})
    if (s == to_string(v)) return v;
  throw InputError("unknown fusion variant '" + std::string(s) + "'");
}

void FusionConfig::validate() const {
  if (window < 1) throw InputError("fusion window must be >= 1");
  if (!(k > 0)) throw InputError("RRF constant k must be > 0");
  if (cutoff < 1) throw InputError("fusion cutoff must be >= 1");
  if (penalty_rank < 1) throw InputError("penalty rank must be >= 1");
}

namespace {

std::vector<std::pair<int, double>> linear_weights(int t0, int t) {
  const int n = t - t0 + 1;
  std::vector<std::pair<int, double>> out;
  out.reserve(n);
  const double denom = static_cast<double>(n) * static_cast<double>(n + 1);
  for (int tp = t0; tp <= t; ++tp) out.emplace_back(tp, 2.0 * (tp - t0 + 1) / denom);
  return out;
}

double channel_weight(const FusionConfig& c, Channel ch) {
  return ch == Channel::t2v ? c.channel_weights[0] : c.channel_weights[1];
}

}  // namespace

std::vector<std::pair<int, double>> recency_weights(int t, int window) {
  if (t < 1) throw InputError("recency weights need t >= 1");
  if (window < 1) throw InputError("fusion window must be >= 1");
  return linear_weights(std::max(1, t - window + 1), t);
}

int window_start(int t, const FusionConfig& config) {
  int t0 = std::max(1, t - config.window + 1);
  if (config.include_turn0 && t0 == 1) t0 = 0;
  if (t == 0) t0 = 0;
  return t0;
}

std::map<std::string, double> fused_scores(const ResultMemory& rm, const FusionConfig& config,
                                           int t) {
  config.validate();
  if (t < 0) throw InputError("fusion turn must be >= 0");

  const bool static_only = config.variant == FusionVariant::static_rrf;
  const int t0 = static_only ? t : window_start(t, config);
  const int n = t - t0 + 1;

  std::map<int, double> turn_weight;
  if (config.variant == FusionVariant::uniform_rrf) {
    for (int tp = t0; tp <= t; ++tp) turn_weight[tp] = 1.0 / n;
  } else {
    for (auto [tp, w] : linear_weights(t0, t)) turn_weight[tp] = w;
  }

  // canonical order: turn ascending, T2V before CoVR
  std::vector<const RmRecord*> records = rm.records_in(t0, t);
  std::stable_sort(records.begin(), records.end(), [](const RmRecord* a, const RmRecord* b) {
    if (a->turn != b->turn) return a->turn < b->turn;
    return static_cast<int>(a->channel) < static_cast<int>(b->channel);
  });
  if (records.empty())
    throw InputError("no ranked list in the fusion window ending at turn " + std::to_string(t));

  std::map<std::string, double> scores;
  switch (config.variant) {
    case FusionVariant::twrrf:
    case FusionVariant::uniform_rrf:
      for (const RmRecord* r : records) {
        const double w = turn_weight.at(r->turn);
        for (const auto& e : r->list.entries)
          scores[e.item_id] += w / (config.k + rm.effective_rank(r->turn, r->channel, e));
      }
      break;
    case FusionVariant::static_rrf:
      for (const RmRecord* r : records) {
        const double w = channel_weight(config, r->channel);
        for (const auto& e : r->list.entries)
          scores[e.item_id] += w / (config.k + rm.effective_rank(r->turn, r->channel, e));
      }
      break;
    case FusionVariant::penalty_rrf: {
      std::set<std::string> candidates;
      for (const RmRecord* r : records)
        for (const auto& e : r->list.entries) candidates.insert(e.item_id);
      for (const auto& id : candidates) scores[id] = 0.0;
      const double sign = config.penalty_mode == PenaltyMode::subtract ? -1.0 : 1.0;
      for (const RmRecord* r : records) {
        const double w = turn_weight.at(r->turn) * channel_weight(config, r->channel);
        std::set<std::string> present;
        for (const auto& e : r->list.entries) {
          present.insert(e.item_id);
          scores[e.item_id] += w / (config.k + rm.effective_rank(r->turn, r->channel, e));
        }
        for (const auto& id : candidates)
          if (!present.contains(id)) scores[id] += sign * w / (config.k + config.penalty_rank);
      }
      break;
    }
    case FusionVariant::simmax:
      for (const RmRecord* r : records)
        for (const auto& e : r->list.entries) {
          auto [it, inserted] = scores.emplace(e.item_id, e.score);
          if (!inserted) it->second = std::max(it->second, e.score);
        }
      break;
    case FusionVariant::simsum:
      for (const RmRecord* r : records)
        for (const auto& e : r->list.entries) scores[e.item_id] += e.score;
      break;
  }
  return scores;
}

RankedList fuse(const ResultMemory& rm, const FusionConfig& config, int t) {
  auto scores = fused_scores(rm, config, t);
  std::vector<std::pair<std::string, double>> scored(scores.begin(), scores.end());
  return make_ranked_list(Channel::fused, t, std::move(scored), config.cutoff);
}

}  // namespace recovr
