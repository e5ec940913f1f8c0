#include "recovr/channels.hpp"

namespace recovr {

void ChannelConfig::validate() const {
  if (cutoff < 1) throw InputError("channel cutoff must be >= 1");
  if (negative_penalty < 0) throw InputError("negative penalty must be >= 0");
}

double overlap_score(const Item& item, const Query& query, std::span<const double> query_feature,
                     double negative_penalty) {
  std::size_t matched = 0;
  for (const auto& c : query.positive()) {
    auto v = item.value(c.dimension);
    if (v && *v == c.value) ++matched;
  }
  std::size_t violated = 0;
  for (const auto& c : query.negative()) {
    auto v = item.value(c.dimension);
    if (v && *v == c.value) ++violated;
  }
  double score = static_cast<double>(matched) /
                     static_cast<double>(std::max<std::size_t>(1, query.positive().size())) -
                 negative_penalty * static_cast<double>(violated);
  if (!query_feature.empty()) score += kCosineRefiner * dot(query_feature, item.feature);
  return score;
}

namespace {

bool violates_negative(const Item& item, const Query& query) {
  for (const auto& c : query.negative()) {
    auto v = item.value(c.dimension);
    if (v && *v == c.value) return true;
  }
  return false;
}

}  // namespace

RankedList t2v_retrieve(const Query& query, const Gallery& gallery, const ChannelConfig& config,
                        int turn) {
  config.validate();
  bool has_text = query.free_text && !query.free_text->empty();
  if (query.positive().empty() && !has_text)
    throw InputError("text channel needs at least one positive constraint or free text");

  std::vector<double> qfeat;
  if (!query.positive().empty()) qfeat = gallery.feature_of(query.positive_map());

  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(gallery.size());
  for (const auto& item : gallery.items()) {
    if (config.hard_negatives && violates_negative(item, query)) continue;
    scored.emplace_back(item.id, overlap_score(item, query, qfeat, config.negative_penalty));
  }
  return make_ranked_list(Channel::t2v, turn, std::move(scored), config.cutoff);
}

AttributeMap implied_target(const Item& anchor, const EditInstruction& edit) {
  AttributeMap target = anchor.attributes;
  for (const auto& [d, v] : edit.deltas) target[d] = v;
  for (const auto& d : edit.removals) target.erase(d);
  return target;
}

RankedList covr_retrieve(const Item& anchor, const EditInstruction& edit, const Gallery& gallery,
                         const ChannelConfig& config, int turn) {
  if (edit.empty()) throw InputError("composed channel needs a non-empty edit");
  if (!gallery.find(anchor.id))
    throw InputError("anchor '" + anchor.id + "' is not in the gallery");
  Query target;
  for (const auto& [d, v] : implied_target(anchor, edit)) target.assert_positive({d, v});
  if (target.positive().empty())
    throw InputError("edit removes every attribute of the anchor");
  RankedList list = t2v_retrieve(target, gallery, config, turn);
  list.channel = Channel::covr;
  return list;
}

AttributeBackend::AttributeBackend(std::shared_ptr<const Gallery> gallery, ChannelConfig config)
    : gallery_(std::move(gallery)), config_(config) {
  config_.validate();
}

RankedList AttributeBackend::text_to_item(const Query& query, int turn) const {
  return t2v_retrieve(query, *gallery_, config_, turn);
}

RankedList AttributeBackend::composed(const Item& anchor, const EditInstruction& edit,
                                      int turn) const {
  return covr_retrieve(anchor, edit, *gallery_, config_, turn);
}

}  // namespace recovr
