#include <doctest.h>

#include "fixtures.hpp"
#include "recovr/simulator.hpp"

using namespace recovr;

namespace {

Item make(const std::string& id, AttributeMap attrs) {
  Item it;
  it.id = id;
  it.attributes = std::move(attrs);
  return it;
}

const Item kTarget = make("t", {{"category", "dog"}, {"color", "red"}, {"scene", "beach"}, {"action", "running"}});
const Item kMinor = make("m", {{"category", "dog"}, {"color", "blue"}, {"scene", "beach"}, {"action", "sitting"}});
const Item kMajor = make("M", {{"category", "cat"}, {"color", "red"}, {"scene", "forest"}, {"action", "running"}});

}  // namespace

TEST_CASE("compare classifies by category and lists sorted diffs") {
  auto d = compare(kTarget, kMinor);
  CHECK(d.status == DiffStatus::minor);
  REQUIRE(d.diffs.size() == 2);
  CHECK(d.diffs[0] == AttributeDiff{"action", "running", "sitting"});
  CHECK(d.diffs[1] == AttributeDiff{"color", "red", "blue"});
  CHECK(compare(kTarget, kMajor).status == DiffStatus::major);
  CHECK_THROWS_AS(compare(kTarget, kTarget), ProtocolError);
}

TEST_CASE("the target itself is accepted") {
  std::mt19937_64 rng(1);
  auto fb = generate_feedback(kTarget, kTarget, std::nullopt, {}, rng);
  CHECK(fb.action == FeedbackAction::accept);
  CHECK(fb.payload_positive.empty());
}

TEST_CASE("mixed policy modifies minor candidates with target values") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    auto fb = generate_feedback(kTarget, kMinor, Question{"q1-color", "color", {}}, {}, rng);
    CHECK(fb.action == FeedbackAction::modify);
    CHECK_FALSE(fb.payload_positive.empty());
    for (const auto& c : fb.payload_positive) CHECK(kTarget.attributes.at(c.dimension) == c.value);
  }
}

TEST_CASE("mixed policy answers or rewrites on major candidates") {
  SimulatorConfig always;
  always.answer_probability = 1.0;
  std::mt19937_64 rng(2);
  auto fb = generate_feedback(kTarget, kMajor, Question{"q1-scene", "scene", {}}, always, rng);
  CHECK(fb.action == FeedbackAction::answer);
  CHECK(fb.answered_question == "q1-scene");
  CHECK(fb.payload_positive == ConstraintSet{{"scene", "beach"}});

  SimulatorConfig never;
  never.answer_probability = 0.0;
  fb = generate_feedback(kTarget, kMajor, Question{"q1-scene", "scene", {}}, never, rng);
  CHECK(fb.action == FeedbackAction::rewrite);
  CHECK(fb.payload_positive.size() == 4);
  // without a question a major candidate is always a rewrite
  fb = generate_feedback(kTarget, kMajor, std::nullopt, always, rng);
  CHECK(fb.action == FeedbackAction::rewrite);
}

TEST_CASE("single-policy variants") {
  std::mt19937_64 rng(4);
  SimulatorConfig mod;
  mod.policy = FeedbackPolicy::modify_only;
  auto fb = generate_feedback(kTarget, kMajor, std::nullopt, mod, rng);
  CHECK(fb.action == FeedbackAction::modify);
  CHECK(fb.payload_positive.contains({"category", "dog"}));
  CHECK(fb.payload_positive.size() <= 2);

  SimulatorConfig rew;
  rew.policy = FeedbackPolicy::rewrite_only;
  fb = generate_feedback(kTarget, kMinor, std::nullopt, rew, rng);
  CHECK(fb.action == FeedbackAction::rewrite);
  CHECK(fb.payload_positive.size() == 4);
}

TEST_CASE("drop probability one empties the payload") {
  SimulatorConfig cfg;
  cfg.policy = FeedbackPolicy::rewrite_only;
  cfg.drop_probability = 1.0;
  std::mt19937_64 rng(5);
  auto fb = generate_feedback(kTarget, kMinor, std::nullopt, cfg, rng);
  CHECK(fb.payload_positive.empty());
}

TEST_CASE("heavy noise only yields well-formed messages") {
  SimulatorConfig cfg;
  cfg.noise = NoiseLevel::heavy;
  cfg.policy = FeedbackPolicy::rewrite_only;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    auto fb = generate_feedback(kTarget, kMinor, std::nullopt, cfg, rng);
    CHECK_NOTHROW(fb.validate());
    for (const auto& c : fb.payload_positive) CHECK_FALSE(fb.payload_negative.contains(c));
  }
}

TEST_CASE("simulator responses depend only on seed and turn") {
  SimulatorConfig cfg;
  cfg.rng_seed = 99;
  cfg.noise = NoiseLevel::light;
  UserSimulator a(kTarget, cfg), b(kTarget, cfg);
  for (int t = 1; t <= 5; ++t) {
    const Item& cand = t % 2 ? kMinor : kMajor;
    CHECK(a.respond(cand, Question{"q-color", "color", {}}, t) ==
          b.respond(cand, Question{"q-color", "color", {}}, t));
  }
  CHECK(a.trace_json() == b.trace_json());
  CHECK(a.trace().size() == 5);
  CHECK(a.trace()[0].status == DiffStatus::minor);
}

TEST_CASE("invalid simulator settings are rejected") {
  SimulatorConfig cfg;
  cfg.drop_probability = 1.5;
  CHECK_THROWS_AS(UserSimulator(kTarget, cfg), InputError);
  CHECK(parse_feedback_policy("modify-only") == FeedbackPolicy::modify_only);
  CHECK_THROWS_AS(parse_noise_level("loud"), InputError);
}

TEST_CASE("one colour difference yields a single modify") {
  const Item cand = make("c", {{"category", "dog"}, {"color", "blue"}, {"scene", "beach"}, {"action", "running"}});
  auto d = compare(kTarget, cand);
  CHECK(d.status == DiffStatus::minor);
  CHECK(d.diffs.size() == 1);
  std::mt19937_64 rng(6);
  auto fb = generate_feedback(kTarget, cand, std::nullopt, {}, rng);
  CHECK(fb.action == FeedbackAction::modify);
  CHECK(fb.payload_positive == ConstraintSet{{"color", "red"}});
}

TEST_CASE("items differing everywhere are major on every dimension") {
  const Item other = make("o", {{"category", "car"}, {"color", "green"}, {"scene", "indoor"}, {"action", "jumping"}});
  auto d = compare(kTarget, other);
  CHECK(d.status == DiffStatus::major);
  CHECK(d.diffs.size() == 4);
}
