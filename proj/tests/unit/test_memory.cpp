#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "recovr/memory.hpp"

using namespace recovr;

namespace {

RankedList list_of(Channel ch, int turn, std::vector<std::string> ids) {
  std::vector<std::pair<std::string, double>> scored;
  double s = 1.0;
  for (auto& id : ids) scored.emplace_back(std::move(id), s -= 0.01);
  return make_ranked_list(ch, turn, std::move(scored), 100);
}

}  // namespace

TEST_CASE("result memory rejects duplicate records and fused lists") {
  ResultMemory rm;
  rm.append(1, Channel::t2v, list_of(Channel::t2v, 1, {"a", "b"}));
  CHECK_THROWS_AS(rm.append(1, Channel::t2v, list_of(Channel::t2v, 1, {"a"})), ProtocolError);
  CHECK_THROWS_AS(rm.append(1, Channel::fused, list_of(Channel::fused, 1, {"a"})), ProtocolError);
  CHECK_NOTHROW(rm.append(1, Channel::covr, list_of(Channel::covr, 1, {"b", "a"})));
}

TEST_CASE("rank cap examples") {
  ResultMemory rm;
  rm.append(1, Channel::t2v, list_of(Channel::t2v, 1, {"x", "b", "c"}));
  rm.append(1, Channel::covr, list_of(Channel::covr, 1, {"x", "c", "b"}));

  SUBCASE("top item in both channels is capped twice") {
    CHECK(rm.cap("x", 11, 1, 1) == 2);
    CHECK(rm.effective_rank(1, Channel::t2v, "x") == 11);
    CHECK(rm.effective_rank(1, Channel::covr, "x") == 11);
    CHECK(rm.effective_rank(1, Channel::t2v, "b") == 2);
  }
  SUBCASE("an item already below the cap is untouched") {
    std::vector<std::string> ids;
    for (int i = 0; i < 25; ++i) ids.push_back("n" + std::to_string(i));
    ResultMemory deep;
    deep.append(2, Channel::t2v, list_of(Channel::t2v, 2, ids));
    CHECK(deep.effective_rank(2, Channel::t2v, "n19") == 20);
    CHECK(deep.cap("n19", 11, 0, 5) == 0);
  }
  SUBCASE("absent item is a no-op") { CHECK(rm.cap("ghost", 11, 0, 9) == 0); }
  SUBCASE("caps never promote") {
    rm.cap("x", 11, 1, 1);
    CHECK(rm.cap("x", 4, 1, 1) == 0);
    CHECK(rm.effective_rank(1, Channel::t2v, "x") == 11);
  }
  SUBCASE("cap rank must be positive") { CHECK_THROWS_AS(rm.cap("x", 0, 1, 1), InputError); }
}

TEST_CASE("rank caps outside the turn range leave records alone") {
  ResultMemory rm;
  rm.append(1, Channel::t2v, list_of(Channel::t2v, 1, {"x", "a"}));
  rm.append(2, Channel::t2v, list_of(Channel::t2v, 2, {"x", "a"}));
  CHECK(rm.cap("x", 4, 2, 2) == 1);
  CHECK(rm.effective_rank(1, Channel::t2v, "x") == 1);
  CHECK(rm.effective_rank(2, Channel::t2v, "x") == 4);
}

TEST_CASE("random cap sequences only demote and replay identically") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 50; ++round) {
    ResultMemory rm;
    std::vector<std::string> pool;
    for (int i = 0; i < 12; ++i) pool.push_back("c" + std::to_string(i));
    for (int t = 0; t < 4; ++t)
      for (auto ch : {Channel::t2v, Channel::covr}) {
        std::shuffle(pool.begin(), pool.end(), rng);
        rm.append(t, ch, list_of(ch, t, {pool.begin(), pool.begin() + 8}));
      }
    for (int k = 0; k < 6; ++k) {
      int from = static_cast<int>(rng() % 4);
      rm.cap(pool[rng() % pool.size()], 1 + static_cast<int>(rng() % 12), from,
             from + static_cast<int>(rng() % 3));
    }
    for (const auto& rec : rm.records())
      for (const auto& e : rec.list.entries)
        CHECK(rm.effective_rank(rec.turn, rec.channel, e) >= e.rank);
    CHECK(ResultMemory::replay(rm.events()) == rm);
  }
}

TEST_CASE("constraint updates: latest wins and signs stay disjoint") {
  ProgressMemoryShort pm;
  pm.constraints_negative = {{"color", "red"}};

  SUBCASE("positive moves out of negatives") {
    auto out = pm_update_constraints(pm, {{{"color", "red"}}, {}});
    CHECK(out.constraints_positive.contains({"color", "red"}));
    CHECK_FALSE(out.constraints_negative.contains({"color", "red"}));
  }
  SUBCASE("empty delta is the identity") { CHECK(pm_update_constraints(pm, {}) == pm); }
  SUBCASE("later value replaces earlier on the same dimension") {
    auto out = pm_update_constraints(pm, {{{"color", "red"}}, {}});
    out = pm_update_constraints(out, {{{"color", "blue"}}, {}});
    CHECK(out.constraints_positive == ConstraintSet{{"color", "blue"}});
  }
}

TEST_CASE("random constraint deltas preserve disjointness") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> dims = {"a", "b", "c"};
  const std::vector<std::string> vals = {"1", "2", "3"};
  ProgressMemoryShort pm;
  for (int i = 0; i < 500; ++i) {
    ConstraintDelta d;
    for (int k = 0; k < 3; ++k) {
      Constraint c{dims[rng() % 3], vals[rng() % 3]};
      if (rng() % 2)
        d.positive.insert(c);
      else
        d.negative.insert(c);
    }
    for (const auto& c : d.positive) d.negative.erase(c);
    pm = pm_update_constraints(pm, d);
    for (const auto& c : pm.constraints_positive) CHECK_FALSE(pm.constraints_negative.contains(c));
    std::set<std::string> seen;
    for (const auto& c : pm.constraints_positive) CHECK(seen.insert(c.dimension).second);
  }
}

TEST_CASE("progress update advances the turn by one") {
  ProgressMemoryShort pm;
  pm.presented = {"a"};
  auto out = pm_update_progress(pm, Query{}, EditInstruction{}, "b");
  CHECK(out.turn == 1);
  CHECK(out.last_presented() == "b");
}

TEST_CASE("long-term memory covers the gallery and checks its hash on load") {
  auto g = fixtures::random_gallery(20, 4);
  auto pm = ProgressMemoryLong::build(*g, "2026-01-01T00:00:00Z");
  CHECK(pm.covers(*g));
  CHECK(pm.captions().size() == 20);
  CHECK(pm.canonicalize("color", alias_token("red")) == "red");
  CHECK(pm.canonicalize("color", "purple") == std::nullopt);

  auto path = std::filesystem::temp_directory_path() / "recovr_pml_test.jsonl";
  pm.save(path);
  auto back = ProgressMemoryLong::load(path, *g);
  CHECK(back.captions() == pm.captions());
  auto other = fixtures::random_gallery(21, 4);
  CHECK_THROWS_AS(ProgressMemoryLong::load(path, *other), InputError);
  std::filesystem::remove(path);
}
