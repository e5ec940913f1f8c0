#include "recovr/simulator.hpp"

#include <algorithm>

#include "recovr/json_io.hpp"

namespace recovr {

std::string_view to_string(FeedbackPolicy p) {
  switch (p) {
    case FeedbackPolicy::mixed: return "mixed";
    case FeedbackPolicy::modify_only: return "modify_only";
    case FeedbackPolicy::rewrite_only: return "rewrite_only";
  }
  return "?";
}

FeedbackPolicy parse_feedback_policy(std::string_view s) {
  if (s == "mixed") return FeedbackPolicy::mixed;
  if (s == "modify_only" || s == "modify-only") return FeedbackPolicy::modify_only;
  if (s == "rewrite_only" || s == "rewrite-only") return FeedbackPolicy::rewrite_only;
  throw InputError("unknown simulator policy '" + std::string(s) + "'");
}

std::string_view to_string(NoiseLevel n) {
  switch (n) {
    case NoiseLevel::none: return "none";
    case NoiseLevel::light: return "light";
    case NoiseLevel::heavy: return "heavy";
  }
  return "?";
}

NoiseLevel parse_noise_level(std::string_view s) {
  if (s == "none") return NoiseLevel::none;
  if (s == "light") return NoiseLevel::light;
  if (s == "heavy") return NoiseLevel::heavy;
  throw InputError("unknown noise level '" + std::string(s) + "'");
}

std::string_view to_string(DiffStatus s) { return s == DiffStatus::minor ? "MINOR" : "MAJOR"; }

void SimulatorConfig::validate() const {
  if (answer_probability < 0 || answer_probability > 1)
    throw InputError("answer probability must lie in [0, 1]");
  if (drop_probability < 0 || drop_probability > 1)
    throw InputError("drop probability must lie in [0, 1]");
}

Discrepancy compare(const Item& target, const Item& candidate) {
  if (target.id == candidate.id)
    throw ProtocolError("compare called with the target itself; the session should have stopped");
  Discrepancy d;
  d.status = target.value("category") == candidate.value("category") ? DiffStatus::minor
                                                                      : DiffStatus::major;
  std::set<std::string> dims;
  for (const auto& [k, _] : target.attributes) dims.insert(k);
  for (const auto& [k, _] : candidate.attributes) dims.insert(k);
  for (const auto& dim : dims) {
    auto tv = target.value(dim).value_or("");
    auto cv = candidate.value(dim).value_or("");
    if (tv != cv) d.diffs.push_back({dim, tv, cv});
  }
  return d;
}

std::mt19937_64 turn_rng(std::uint64_t seed, int turn) {
  std::uint64_t state = seed ^ (0xa0761d6478bd642fULL * static_cast<std::uint64_t>(turn + 1));
  return std::mt19937_64(splitmix64(state));
}

namespace {

double draw(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

FeedbackMessage rewrite_feedback(const Item& target) {
  FeedbackMessage fb;
  fb.action = FeedbackAction::rewrite;
  for (const auto& [d, v] : target.attributes) fb.payload_positive.insert({d, v});
  return fb;
}

FeedbackMessage modify_feedback(std::vector<AttributeDiff> diffs, bool category_first,
                                std::size_t max_diffs, std::mt19937_64& rng) {
  std::vector<AttributeDiff> chosen;
  if (category_first) {
    auto it = std::find_if(diffs.begin(), diffs.end(),
                           [](const AttributeDiff& d) { return d.dimension == "category"; });
    if (it != diffs.end()) {
      chosen.push_back(*it);
      diffs.erase(it);
    }
  }
  std::shuffle(diffs.begin(), diffs.end(), rng);
  for (auto& d : diffs) {
    if (chosen.size() >= max_diffs) break;
    chosen.push_back(std::move(d));
  }
  FeedbackMessage fb;
  fb.action = FeedbackAction::modify;
  for (const auto& d : chosen) {
    if (!d.target_value.empty())
      fb.payload_positive.insert({d.dimension, d.target_value});
    else
      fb.payload_negative.insert({d.dimension, d.candidate_value});
  }
  return fb;
}

void degrade(FeedbackMessage& fb, const SimulatorConfig& config, std::mt19937_64& rng) {
  if (config.drop_probability > 0) {
    for (auto it = fb.payload_positive.begin(); it != fb.payload_positive.end();)
      it = draw(rng) < config.drop_probability ? fb.payload_positive.erase(it) : std::next(it);
    for (auto it = fb.payload_negative.begin(); it != fb.payload_negative.end();)
      it = draw(rng) < config.drop_probability ? fb.payload_negative.erase(it) : std::next(it);
  }
  if (config.noise == NoiseLevel::none) return;

  std::vector<Constraint> pairs(fb.payload_positive.begin(), fb.payload_positive.end());
  if (!pairs.empty() && draw(rng) < 0.2) {
    auto& c = pairs[pick(rng, pairs.size())];
    c.value = alias_token(c.value);
  }
  if (config.noise == NoiseLevel::heavy) {
    if (!pairs.empty() && draw(rng) < 0.2) pairs.erase(pairs.begin() + pick(rng, pairs.size()));
    if (pairs.size() >= 2 && draw(rng) < 0.1) {
      std::size_t a = pick(rng, pairs.size());
      std::size_t b = pick(rng, pairs.size() - 1);
      if (b >= a) ++b;
      std::swap(pairs[a].dimension, pairs[b].dimension);
    }
  }
  fb.payload_positive = ConstraintSet(pairs.begin(), pairs.end());
  for (const auto& c : fb.payload_positive) fb.payload_negative.erase(c);
}

}  // namespace

FeedbackMessage generate_feedback(const Item& target, const Item& candidate,
                                  const std::optional<Question>& question,
                                  const SimulatorConfig& config, std::mt19937_64& rng) {
  config.validate();
  if (candidate.id == target.id) return FeedbackMessage{FeedbackAction::accept, {}, {}, {}, {}, false};

  const Discrepancy disc = compare(target, candidate);
  FeedbackMessage fb;
  switch (config.policy) {
    case FeedbackPolicy::rewrite_only:
      fb = rewrite_feedback(target);
      break;
    case FeedbackPolicy::modify_only:
      fb = modify_feedback(disc.diffs, true, config.max_modify_diffs, rng);
      break;
    case FeedbackPolicy::mixed: {
      std::vector<AttributeDiff> local;
      for (const auto& d : disc.diffs)
        if (d.dimension != "category") local.push_back(d);
      if (disc.status == DiffStatus::minor && !local.empty()) {
        fb = modify_feedback(std::move(local), false, config.max_modify_diffs, rng);
      } else if (disc.status == DiffStatus::major && question &&
                 draw(rng) < config.answer_probability && target.value(question->dimension)) {
        fb.action = FeedbackAction::answer;
        fb.answered_question = question->id;
        fb.payload_positive.insert({question->dimension, *target.value(question->dimension)});
      } else {
        fb = rewrite_feedback(target);
      }
      break;
    }
  }
  degrade(fb, config, rng);
  return fb;
}

UserSimulator::UserSimulator(Item target, SimulatorConfig config)
    : target_(std::move(target)), config_(config) {
  config_.validate();
}

FeedbackMessage UserSimulator::respond(const Item& candidate,
                                       const std::optional<Question>& question, int turn) {
  auto rng = turn_rng(config_.rng_seed, turn);
  FeedbackMessage fb = generate_feedback(target_, candidate, question, config_, rng);
  SimulatorTurn rec{turn, candidate.id, std::nullopt, fb};
  if (candidate.id != target_.id) rec.status = compare(target_, candidate).status;
  trace_.push_back(std::move(rec));
  return fb;
}

nlohmann::json UserSimulator::trace_json() const {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : trace_) {
    nlohmann::json j = {{"turn", t.turn},
                        {"candidate", t.candidate},
                        {"action", to_string(t.feedback.action)},
                        {"feedback", t.feedback}};
    j["status"] = t.status ? nlohmann::json(to_string(*t.status)) : nlohmann::json(nullptr);
    turns.push_back(std::move(j));
  }
  return {{"target", target_.id},
          {"policy", to_string(config_.policy)},
          {"noise", to_string(config_.noise)},
          {"drop_probability", config_.drop_probability},
          {"turns", std::move(turns)}};
}

}  // namespace recovr
