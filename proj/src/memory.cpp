#include "recovr/memory.hpp"

#include <fstream>

#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;

std::string render_caption(const AttributeMap& attributes, std::span<const std::string> schema) {
  std::string out;
  for (const auto& dim : schema) {
    auto it = attributes.find(dim);
    if (it == attributes.end()) continue;
    if (!out.empty()) out += "; ";
    out += dim + "=" + it->second;
  }
  return out;
}

// ---------------------------------------------------------------- PM^L

ProgressMemoryLong ProgressMemoryLong::build(const Gallery& gallery, std::string built_at) {
  ProgressMemoryLong pm;
  for (const auto& item : gallery.items()) {
    pm.captions_[item.id] = render_caption(item.attributes, gallery.schema());
    pm.attributes_[item.id] = item.attributes;
  }
  pm.vocabulary_ = gallery.vocabulary();
  pm.gallery_hash_ = gallery.content_hash();
  pm.built_at_ = std::move(built_at);
  return pm;
}

const std::string& ProgressMemoryLong::caption(std::string_view item_id) const {
  auto it = captions_.find(std::string(item_id));
  if (it == captions_.end()) throw InputError("no caption cached for '" + std::string(item_id) + "'");
  return it->second;
}

const AttributeMap& ProgressMemoryLong::attributes(std::string_view item_id) const {
  auto it = attributes_.find(std::string(item_id));
  if (it == attributes_.end())
    throw InputError("no metadata cached for '" + std::string(item_id) + "'");
  return it->second;
}

bool ProgressMemoryLong::covers(const Gallery& gallery) const {
  if (gallery.content_hash() != gallery_hash_) return false;
  for (const auto& item : gallery.items())
    if (!captions_.contains(item.id)) return false;
  return true;
}

std::optional<std::string> ProgressMemoryLong::canonicalize(std::string_view dimension,
                                                            std::string_view value) const {
  auto it = vocabulary_.find(std::string(dimension));
  if (it == vocabulary_.end()) return std::nullopt;
  if (it->second.contains(std::string(value))) return std::string(value);
  std::string base = strip_alias(value);
  if (it->second.contains(base)) return base;
  return std::nullopt;
}

void ProgressMemoryLong::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write caption cache " + path.string());
  out << json{{"gallery_hash", gallery_hash_}, {"built_at", built_at_}}.dump() << '\n';
  for (const auto& [id, caption] : captions_)
    out << json{{"id", id}, {"caption", caption}}.dump() << '\n';
}

ProgressMemoryLong ProgressMemoryLong::load(const std::filesystem::path& path,
                                            const Gallery& gallery) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open caption cache " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty caption cache");
  ProgressMemoryLong pm;
  try {
    json header = json::parse(line);
    pm.gallery_hash_ = header.at("gallery_hash").get<std::uint64_t>();
    pm.built_at_ = header.value("built_at", "");
    if (pm.gallery_hash_ != gallery.content_hash())
      throw InputError(path.string() + ": caption cache was built for a different gallery");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      pm.captions_[j.at("id").get<std::string>()] = j.at("caption").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  for (const auto& item : gallery.items()) pm.attributes_[item.id] = item.attributes;
  pm.vocabulary_ = gallery.vocabulary();
  if (!pm.covers(gallery)) throw InputError(path.string() + ": caption cache is incomplete");
  return pm;
}

// ---------------------------------------------------------------- PM^S

std::optional<std::string> ProgressMemoryShort::last_presented() const {
  if (presented.empty()) return std::nullopt;
  return presented.back();
}

bool ProgressMemoryShort::constrains(std::string_view dimension) const {
  for (const auto& c : constraints_positive)
    if (c.dimension == dimension) return true;
  return running_search.positive_value(dimension).has_value();
}

ProgressMemoryShort pm_update_constraints(ProgressMemoryShort pm, const ConstraintDelta& delta) {
  for (const auto& c : delta.positive) {
    std::erase_if(pm.constraints_positive,
                  [&](const Constraint& p) { return p.dimension == c.dimension; });
    pm.constraints_positive.insert(c);
    pm.constraints_negative.erase(c);
  }
  for (const auto& c : delta.negative) {
    pm.constraints_negative.insert(c);
    pm.constraints_positive.erase(c);
  }
  return pm;
}

ProgressMemoryShort pm_update_progress(ProgressMemoryShort pm, Query search,
                                       EditInstruction edit, std::string fused_top1) {
  pm.running_search = std::move(search);
  pm.running_edit = std::move(edit);
  pm.presented.push_back(std::move(fused_top1));
  ++pm.turn;
  return pm;
}

// ---------------------------------------------------------------- RM

void ResultMemory::append(int turn, Channel channel, RankedList list) {
  if (channel == Channel::fused) throw ProtocolError("result memory stores channel lists only");
  if (find(turn, channel))
    throw ProtocolError("result memory already holds a " + std::string(to_string(channel)) +
                        " list for turn " + std::to_string(turn));
  list.channel = channel;
  list.turn = turn;
  RmRecord record{turn, channel, std::move(list)};
  events_.push_back({RmEvent::Kind::append, record, {}, 0, 0, 0});
  records_.push_back(std::move(record));
}

int ResultMemory::cap(const std::string& item_id, int cap_rank, int from_turn, int to_turn) {
  if (cap_rank < 1) throw InputError("cap rank must be >= 1");
  int written = 0;
  for (const auto& rec : records_) {
    if (rec.turn < from_turn || rec.turn > to_turn) continue;
    for (const auto& e : rec.list.entries) {
      if (e.item_id != item_id) continue;
      if (effective_rank(rec.turn, rec.channel, e) < cap_rank) {
        overrides_[{rec.turn, rec.channel, item_id}] = cap_rank;
        ++written;
      }
    }
  }
  events_.push_back({RmEvent::Kind::cap, {}, item_id, cap_rank, from_turn, to_turn});
  return written;
}

const RmRecord* ResultMemory::find(int turn, Channel channel) const {
  for (const auto& r : records_)
    if (r.turn == turn && r.channel == channel) return &r;
  return nullptr;
}

std::vector<const RmRecord*> ResultMemory::records_in(int from_turn, int to_turn) const {
  std::vector<const RmRecord*> out;
  for (const auto& r : records_)
    if (r.turn >= from_turn && r.turn <= to_turn) out.push_back(&r);
  return out;
}

int ResultMemory::effective_rank(int turn, Channel channel, const RankedEntry& entry) const {
  auto it = overrides_.find({turn, channel, entry.item_id});
  return it == overrides_.end() ? entry.rank : it->second;
}

std::optional<int> ResultMemory::effective_rank(int turn, Channel channel,
                                                std::string_view item_id) const {
  const RmRecord* rec = find(turn, channel);
  if (!rec) return std::nullopt;
  for (const auto& e : rec->list.entries)
    if (e.item_id == item_id) return effective_rank(turn, channel, e);
  return std::nullopt;
}

ResultMemory ResultMemory::replay(const std::vector<RmEvent>& events) {
  ResultMemory rm;
  for (const auto& ev : events) {
    if (ev.kind == RmEvent::Kind::append)
      rm.append(ev.record.turn, ev.record.channel, ev.record.list);
    else
      rm.cap(ev.item_id, ev.cap_rank, ev.from_turn, ev.to_turn);
  }
  return rm;
}

json ResultMemory::to_json() const {
  json records = json::array();
  for (const auto& r : records_) records.push_back(r.list);
  json overrides = json::array();
  for (const auto& [key, rank] : overrides_) {
    const auto& [turn, channel, id] = key;
    overrides.push_back(
        {{"turn", turn}, {"channel", to_string(channel)}, {"item_id", id}, {"rank", rank}});
  }
  return {{"records", std::move(records)}, {"overrides", std::move(overrides)}};
}

}  // namespace recovr
