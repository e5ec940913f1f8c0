#include "recovr/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace recovr {

std::string to_string(const Constraint& c) { return c.dimension + "=" + c.value; }

std::string render_constraints(const ConstraintSet& set) {
  std::string out;
  for (const auto& c : set) {
    if (!out.empty()) out += "; ";
    out += to_string(c);
  }
  return out;
}

std::optional<std::string> Item::value(std::string_view dimension) const {
  auto it = attributes.find(std::string(dimension));
  if (it == attributes.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- Query

void Query::assert_positive(const Constraint& c) {
  std::erase_if(positive_, [&](const Constraint& p) { return p.dimension == c.dimension; });
  positive_.push_back(c);
  negative_.erase(c);
}

void Query::assert_negative(const Constraint& c) {
  std::erase(positive_, c);
  negative_.insert(c);
}

void Query::retract_positive_dimension(std::string_view dimension) {
  std::erase_if(positive_, [&](const Constraint& p) { return p.dimension == dimension; });
}

void Query::set_positives(std::vector<Constraint> ordered) {
  positive_.clear();
  for (auto& c : ordered) assert_positive(c);
}

bool Query::has_positive(const Constraint& c) const {
  return std::find(positive_.begin(), positive_.end(), c) != positive_.end();
}

std::optional<std::string> Query::positive_value(std::string_view dimension) const {
  for (const auto& p : positive_)
    if (p.dimension == dimension) return p.value;
  return std::nullopt;
}

AttributeMap Query::positive_map() const {
  AttributeMap m;
  for (const auto& p : positive_) m[p.dimension] = p.value;
  return m;
}

bool Query::empty() const {
  return positive_.empty() && negative_.empty() && (!free_text || free_text->empty());
}

// ---------------------------------------------------------------- Edit

void EditInstruction::set_delta(const std::string& dimension, const std::string& value) {
  removals.erase(dimension);
  deltas[dimension] = value;
}

void EditInstruction::remove(const std::string& dimension) {
  deltas.erase(dimension);
  removals.insert(dimension);
}

std::string render_edit(const EditInstruction& edit) {
  std::string out;
  for (const auto& [d, v] : edit.deltas) {
    if (!out.empty()) out += "; ";
    out += d + "=" + v;
  }
  for (const auto& d : edit.removals) {
    if (!out.empty()) out += "; ";
    out += "-" + d;
  }
  return out;
}

std::string alias_token(std::string_view value) { return std::string(value) + "-like"; }

std::string strip_alias(std::string_view token) {
  constexpr std::string_view suffix = "-like";
  if (token.size() > suffix.size() && token.ends_with(suffix))
    return std::string(token.substr(0, token.size() - suffix.size()));
  return std::string(token);
}

// ---------------------------------------------------------------- Feedback

std::string_view to_string(FeedbackAction a) {
  switch (a) {
    case FeedbackAction::modify: return "modify";
    case FeedbackAction::rewrite: return "rewrite";
    case FeedbackAction::answer: return "answer";
    case FeedbackAction::accept: return "accept";
  }
  return "?";
}

FeedbackAction parse_feedback_action(std::string_view s) {
  if (s == "modify") return FeedbackAction::modify;
  if (s == "rewrite") return FeedbackAction::rewrite;
  if (s == "answer") return FeedbackAction::answer;
  if (s == "accept") return FeedbackAction::accept;
  throw InputError("unknown feedback action '" + std::string(s) + "'");
}

void FeedbackMessage::validate() const {
  if (action == FeedbackAction::accept && (!payload_positive.empty() || !payload_negative.empty()))
    throw InputError("accept feedback must carry empty payloads");
  if (action == FeedbackAction::answer && !answered_question)
    throw InputError("answer feedback requires answered_question");
  for (const auto& c : payload_positive)
    if (payload_negative.contains(c))
      throw InputError("constraint " + to_string(c) + " is both positive and negative");
}

// ---------------------------------------------------------------- Channels

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::t2v: return "T2V";
    case Channel::covr: return "CoVR";
    case Channel::fused: return "FUSED";
  }
  return "?";
}

Channel parse_channel(std::string_view s) {
  if (s == "T2V" || s == "t2v") return Channel::t2v;
  if (s == "CoVR" || s == "covr" || s == "COVR") return Channel::covr;
  if (s == "FUSED" || s == "fused") return Channel::fused;
  throw InputError("unknown channel '" + std::string(s) + "'");
}

const std::string& RankedList::top1() const {
  if (entries.empty()) throw ProtocolError("top1 of an empty ranked list");
  return entries.front().item_id;
}

std::optional<int> RankedList::rank_of(std::string_view item_id) const {
  for (const auto& e : entries)
    if (e.item_id == item_id) return e.rank;
  return std::nullopt;
}

RankedList make_ranked_list(Channel channel, int turn,
                            std::vector<std::pair<std::string, double>> scored, int cutoff) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (cutoff >= 0 && scored.size() > static_cast<std::size_t>(cutoff)) scored.resize(cutoff);
  RankedList list{channel, turn, {}, cutoff};
  list.entries.reserve(scored.size());
  int rank = 1;
  for (auto& [id, score] : scored) list.entries.push_back({std::move(id), rank++, score});
  return list;
}

// ---------------------------------------------------------------- Features

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> item_feature(const AttributeMap& attributes,
                                 std::span<const std::string> schema, std::uint64_t seed,
                                 int block_size) {
  if (attributes.empty()) throw SchemaError("cannot derive a feature from an empty attribute map");
  if (block_size < 1) throw SchemaError("feature block size must be positive");
  for (const auto& [dim, value] : attributes)
    if (std::find(schema.begin(), schema.end(), dim) == schema.end())
      throw SchemaError("attribute dimension '" + dim + "' is not in the gallery schema");

  std::vector<double> feature(schema.size() * static_cast<std::size_t>(block_size), 0.0);
  for (std::size_t d = 0; d < schema.size(); ++d) {
    auto it = attributes.find(schema[d]);
    if (it == attributes.end()) continue;
    std::uint64_t state = fnv1a64(schema[d] + "=" + it->second) ^ seed;
    for (int j = 0; j < block_size; ++j) {
      // 53-bit uniform in [-1, 1)
      double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      feature[d * block_size + j] = 2.0 * u - 1.0;
    }
  }
  double norm = std::sqrt(dot(feature, feature));
  if (norm == 0.0) throw SchemaError("degenerate feature vector");
  for (auto& x : feature) x /= norm;
  return feature;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw SchemaError("feature dimension mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace recovr
