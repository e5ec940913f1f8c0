// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recovr/benchmark.hpp"
#include "recovr/fusion.hpp"
#include "recovr/memory.hpp"
#include "recovr/metrics.hpp"

using namespace recovr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s  #%-2d %s (%.0f ms)%s%s\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), ms,
              out.detail.empty() ? "" : " :: ", out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------- fusion oracle

struct ListSpec {
  int turn;
  Channel channel;
  std::vector<std::pair<std::string, double>> scored;  // sorted, rank = index + 1
  std::map<std::string, int> cap;                      // item -> floor rank
};

struct Instance {
  std::vector<ListSpec> lists;
  int t = 1;
  int window = 5;
  double k = 60;
  int r_pen = 100;
  double w_t2v = 0.5;
};

Instance random_instance(std::mt19937_64& rng, bool with_caps) {
  Instance in;
  in.t = 1 + int(rng() % 5);
  in.window = 1 + int(rng() % 5);
  in.k = 1 + double(rng() % 100);
  in.r_pen = 1 + int(rng() % 120);
  in.w_t2v = double(1 + rng() % 9) / 10.0;
  const int n = 2 + int(rng() % 19);
  std::vector<std::string> pool;
  for (int i = 0; i < n; ++i) pool.push_back("c" + std::to_string(i));
  std::uniform_real_distribution<double> score(-1.0, 2.0);
  for (int turn = 1; turn <= in.t; ++turn)
    for (auto ch : {Channel::t2v, Channel::covr}) {
      if (rng() % 5 == 0 && !(turn == in.t && ch == Channel::t2v)) continue;
      std::shuffle(pool.begin(), pool.end(), rng);
      const int len = 1 + int(rng() % n);
      std::vector<double> s;
      for (int i = 0; i < len; ++i) s.push_back(std::round(score(rng) * 1000) / 1000);
      std::sort(s.rbegin(), s.rend());
      ListSpec l{turn, ch, {}, {}};
      for (int i = 0; i < len; ++i) l.scored.emplace_back(pool[i], s[i]);
      // equal scores would let make_ranked_list reorder; keep ranks as drawn
      for (std::size_t i = 1; i < l.scored.size(); ++i)
        if (l.scored[i].second >= l.scored[i - 1].second) l.scored[i].second = l.scored[i - 1].second - 1e-3;
      if (with_caps && rng() % 3 == 0) l.cap[l.scored[rng() % len].first] = 1 + int(rng() % 15);
      in.lists.push_back(std::move(l));
    }
  return in;
}

ResultMemory build_rm(const Instance& in, bool with_caps) {
  ResultMemory rm;
  for (const auto& l : in.lists) {
    RankedList list = make_ranked_list(l.channel, l.turn, l.scored, 1000);
    rm.append(l.turn, l.channel, std::move(list));
  }
  if (with_caps)
    for (const auto& l : in.lists)
      for (const auto& [item, cap] : l.cap) rm.cap(item, cap, l.turn, l.turn);
  return rm;
}

// Effective rank in list `l` of the given instance; caps of every list in the
// same turn apply to all lists of that turn (cap targets a turn range).
int oracle_rank(const Instance& in, const ListSpec& l, std::size_t index, bool with_caps) {
  int r = int(index) + 1;
  if (!with_caps) return r;
  for (const auto& other : in.lists)
    if (other.turn == l.turn)
      for (const auto& [item, cap] : other.cap)
        if (item == l.scored[index].first) r = std::max(r, cap);
  return r;
}

std::map<std::string, double> oracle_scores(const Instance& in, FusionVariant v, bool with_caps,
                                            int window) {
  const int t0 = v == FusionVariant::static_rrf ? in.t : std::max(1, in.t - window + 1);
  const int n = in.t - t0 + 1;
  auto turn_w = [&](int turn) {
    if (v == FusionVariant::uniform_rrf) return 1.0 / n;
    return double(turn - t0 + 1) / (n * (n + 1) / 2.0);
  };
  auto chan_w = [&](Channel c) { return c == Channel::t2v ? in.w_t2v : 1.0 - in.w_t2v; };

  std::set<std::string> candidates;
  for (const auto& l : in.lists)
    if (l.turn >= t0 && l.turn <= in.t)
      for (const auto& [id, _] : l.scored) candidates.insert(id);

  std::map<std::string, double> out;
  for (const auto& id : candidates) {
    double s = 0;
    bool first = true;
    for (int turn = t0; turn <= in.t; ++turn)
      for (auto ch : {Channel::t2v, Channel::covr})
        for (const auto& l : in.lists) {
          if (l.turn != turn || l.channel != ch) continue;
          std::optional<std::size_t> pos;
          for (std::size_t i = 0; i < l.scored.size(); ++i)
            if (l.scored[i].first == id) pos = i;
          switch (v) {
            case FusionVariant::twrrf:
            case FusionVariant::uniform_rrf:
              if (pos) s += turn_w(turn) / (in.k + oracle_rank(in, l, *pos, with_caps));
              break;
            case FusionVariant::static_rrf:
              if (pos) s += chan_w(ch) / (in.k + oracle_rank(in, l, *pos, with_caps));
              break;
            case FusionVariant::penalty_rrf:
              if (pos)
                s += turn_w(turn) * chan_w(ch) / (in.k + oracle_rank(in, l, *pos, with_caps));
              else
                s -= turn_w(turn) * chan_w(ch) / (in.k + in.r_pen);
              break;
            case FusionVariant::simmax:
              if (pos) s = first ? l.scored[*pos].second : std::max(s, l.scored[*pos].second);
              if (pos) first = false;
              break;
            case FusionVariant::simsum:
              if (pos) s += l.scored[*pos].second;
              break;
          }
        }
    out[id] = s;
  }
  return out;
}

std::vector<std::string> order_of(const std::map<std::string, double>& scores) {
  std::vector<std::pair<std::string, double>> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> ids;
  for (auto& [id, _] : v) ids.push_back(id);
  return ids;
}

FusionConfig config_for(const Instance& in, FusionVariant v) {
  FusionConfig c;
  c.variant = v;
  c.window = in.window;
  c.k = in.k;
  c.penalty_rank = in.r_pen;
  c.cutoff = 1000;
  c.channel_weights = {in.w_t2v, 1.0 - in.w_t2v};
  return c;
}

const std::vector<FusionVariant> kVariants = {FusionVariant::twrrf,       FusionVariant::static_rrf,
                                              FusionVariant::uniform_rrf, FusionVariant::penalty_rrf,
                                              FusionVariant::simmax,      FusionVariant::simsum};

std::vector<Instance> fusion_instances() {
  std::mt19937_64 rng(2024);
  std::vector<Instance> out;
  for (int i = 0; i < 1000; ++i) out.push_back(random_instance(rng, true));
  return out;
}

// ---------------------------------------------------------------- benchmark runs

struct Frozen {
  Benchmark bench = generate_benchmark(BenchmarkSpec{});
  std::shared_ptr<const ProgressMemoryLong> pm_l =
      std::make_shared<const ProgressMemoryLong>(ProgressMemoryLong::build(*bench.gallery));
  std::map<std::string, RunResult> cache;

  const RunResult& run(const std::string& name, const std::function<void(RunConfig&)>& tweak) {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    RunConfig cfg;
    tweak(cfg);
    return cache[name] = run_benchmark(bench.queries, bench.gallery, pm_l, cfg);
  }
  const RunResult& full() { return run("full", [](RunConfig&) {}); }
};

std::string r1_series(const RunResult& r) {
  std::string s;
  for (const auto& row : r.table) s += (s.empty() ? "" : ",") + fmt("%.3f", row.r1);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Frozen regression baselines from the first green run (R@1 as fractions).
constexpr double kFullR1[6] = {0.545, 0.780, 0.975, 1.000, 1.000, 1.000};
constexpr double kT2vOnlyR1T5 = 1.000;
constexpr double kCovrOnlyR1T5 = 0.985;
constexpr double kDropDeltaT5 = 0.055;
constexpr double kTolerance = 0.005;  // half a point

}  // namespace

int main() {
  report(1, "recency weights sum to one and strictly increase", [] {
    const auto start = std::chrono::steady_clock::now();
    for (int t = 1; t <= 50; ++t)
      for (int w = 1; w <= 10; ++w) {
        auto ws = recency_weights(t, w);
        double sum = 0;
        for (std::size_t i = 0; i < ws.size(); ++i) {
          sum += ws[i].second;
          if (i > 0 && !(ws[i].second > ws[i - 1].second))
            return Outcome{false, fmt("not increasing at t=%g W=%g", t, w)};
        }
        if (std::abs(sum - 1.0) > 1e-12) return Outcome{false, fmt("sum %.17g at t=%g", sum, t)};
      }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return Outcome{s < 1.0, s < 1.0 ? "" : fmt("took %.2f s", s)};
  });

  const auto instances = fusion_instances();

  report(2, "fusion matches brute-force score tables for all variants", [&] {
    const auto start = std::chrono::steady_clock::now();
    int checked = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance& in = instances[i];
      const bool caps = i % 2 == 0;
      ResultMemory rm = build_rm(in, caps);
      for (auto v : kVariants) {
        auto oracle = oracle_scores(in, v, caps, in.window);
        auto got = fused_scores(rm, config_for(in, v), in.t);
        if (got.size() != oracle.size())
          return Outcome{false, "candidate set differs in instance " + std::to_string(i) + " " +
                                    std::string(to_string(v))};
        for (const auto& [id, s] : oracle)
          if (std::abs(got.at(id) - s) > 1e-12)
            return Outcome{false, "score mismatch in instance " + std::to_string(i) + " " +
                                      std::string(to_string(v)) + " item " + id};
        std::vector<std::string> fused_ids;
        for (const auto& e : fuse(rm, config_for(in, v), in.t).entries) fused_ids.push_back(e.item_id);
        if (fused_ids != order_of(oracle))
          return Outcome{false, "ordering differs in instance " + std::to_string(i) + " " +
                                    std::string(to_string(v))};
        ++checked;
      }
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (s >= 10.0) return Outcome{false, fmt("took %.2f s", s)};
    return Outcome{true, std::to_string(checked) + " fusions"};
  });

  report(3, "uniform full-history fusion orders like plain RRF", [&] {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance& in = instances[i];
      ResultMemory rm = build_rm(in, false);
      FusionConfig cfg = config_for(in, FusionVariant::uniform_rrf);
      cfg.window = in.t;
      std::map<std::string, double> plain;
      for (const auto& l : in.lists)
        for (std::size_t r = 0; r < l.scored.size(); ++r) plain[l.scored[r].first] += 1.0 / (in.k + double(r + 1));
      std::vector<std::string> got;
      for (const auto& e : fuse(rm, cfg, in.t).entries) got.push_back(e.item_id);
      if (got != order_of(plain)) return Outcome{false, "instance " + std::to_string(i)};
    }
    return Outcome{true, "1000 instances"};
  });

  report(4, "rank cap lowers only the capped score and removes it from top-1", [] {
    std::mt19937_64 rng(77);
    int top1_checked = 0;
    for (int sc = 0; sc < 500; ++sc) {
      const int n = 11 + int(rng() % 10);  // 11..20 candidates shared by every list
      std::vector<std::string> pool;
      for (int i = 0; i < n; ++i) pool.push_back("p" + std::to_string(i));
      const int t = 1 + int(rng() % 5);
      FusionConfig cfg;
      cfg.window = 1 + int(rng() % 5);
      cfg.variant = rng() % 2 ? FusionVariant::twrrf : FusionVariant::uniform_rrf;
      ResultMemory rm;
      for (int turn = 1; turn <= t; ++turn)
        for (auto ch : {Channel::t2v, Channel::covr}) {
          std::shuffle(pool.begin(), pool.end(), rng);
          std::vector<std::pair<std::string, double>> s;
          for (int i = 0; i < n; ++i) s.emplace_back(pool[i], 1.0 - 0.01 * i);
          rm.append(turn, ch, make_ranked_list(ch, turn, s, 100));
        }
      const int kappa = sc % 2 ? 11 : 1 + int(rng() % 20);
      const std::string x = sc % 3 ? rm.records().back().list.top1() : pool[rng() % n];
      const int from = window_start(t, cfg);

      bool below_kappa = false;
      for (const RmRecord* rec : rm.records_in(from, t))
        if (auto r = rm.effective_rank(rec->turn, rec->channel, x); r && *r < kappa) below_kappa = true;

      const auto before = fused_scores(rm, cfg, t);
      rm.cap(x, kappa, from, t);
      const auto after = fused_scores(rm, cfg, t);
      for (const auto& [id, s] : before) {
        if (id == x) {
          if (below_kappa && !(after.at(id) < s))
            return Outcome{false, "capped score did not drop in scenario " + std::to_string(sc)};
          if (!below_kappa && after.at(id) != s)
            return Outcome{false, "score moved without an override in scenario " + std::to_string(sc)};
        } else if (after.at(id) != s) {
          return Outcome{false, "bystander score changed in scenario " + std::to_string(sc)};
        }
      }
      if (kappa == 11) {
        ++top1_checked;
        if (fuse(rm, cfg, t).top1() == x)
          return Outcome{false, "capped item still top-1 in scenario " + std::to_string(sc)};
      }
    }
    return Outcome{true, "500 scenarios, " + std::to_string(top1_checked) + " top-1 checks"};
  });

  Frozen frozen;

  report(5, "a rejected candidate is never re-presented at the next turn", [&] {
    const auto& run = frozen.full();
    int rejections = 0, repeats = 0;
    for (const auto& q : run.queries)
      for (const auto& turn : q.trace["session"]["turns"]) {
        if (turn["satisfaction"] != "negative") continue;
        ++rejections;
        if (turn["top1"] == turn["presented"]) ++repeats;
      }
    return Outcome{repeats == 0, std::to_string(repeats) + " repeats over " +
                                     std::to_string(rejections) + " rejections"};
  });

  report(6, "rewrite-only feedback reaches R@1 = 1 at turn 1", [&] {
    const auto& run = frozen.run("rewrite", [](RunConfig& c) {
      c.simulator.policy = FeedbackPolicy::rewrite_only;
    });
    return Outcome{run.table.at(1).r1 == 1.0, fmt("R@1 turn 1 = %.3f", run.table.at(1).r1)};
  });

  report(7, "multi-turn R@1 improves and beats single-channel runs", [&] {
    const auto start = std::chrono::steady_clock::now();
    const auto& full = frozen.full();
    const auto& t2v_only = frozen.run("no-covr", [](RunConfig& c) { c.session.ablation.disable_covr = true; });
    const auto& covr_only = frozen.run("no-t2v", [](RunConfig& c) { c.session.ablation.disable_t2v = true; });
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail = "full " + r1_series(full) + fmt(" | T2V-only t5 %.3f | CoVR-only t5 %.3f",
                                                        t2v_only.table[5].r1, covr_only.table[5].r1);
    bool ok = s < 60.0;
    for (int t = 1; t <= 5; ++t) ok = ok && full.table[t].r1 >= full.table[t - 1].r1;
    ok = ok && full.table[5].r1 >= t2v_only.table[5].r1 && full.table[5].r1 >= covr_only.table[5].r1;
    for (int t = 0; t <= 5; ++t) ok = ok && std::abs(full.table[t].r1 - kFullR1[t]) <= kTolerance;
    ok = ok && std::abs(t2v_only.table[5].r1 - kT2vOnlyR1T5) <= kTolerance;
    ok = ok && std::abs(covr_only.table[5].r1 - kCovrOnlyR1T5) <= kTolerance;
    return Outcome{ok, detail};
  });

  report(8, "BRI is zero for perfect sessions and non-increasing over turns", [&] {
    std::vector<QueryTrajectory> perfect = {{"a", {1, 1, 1, 1, 1, 1}}, {"b", {1, 1, 1, 1, 1, 1}}};
    if (bri(perfect, 5) != 0.0) return Outcome{false, "perfect sessions give nonzero BRI"};
    const auto& full = frozen.full();
    std::string detail;
    bool ok = true;
    for (int t = 1; t <= 5; ++t) {
      detail += (detail.empty() ? "" : ",") + fmt("%.4f", *full.table[t].bri);
      if (t > 1 && *full.table[t].bri > *full.table[t - 1].bri) ok = false;
    }
    return Outcome{ok, "BRI " + detail};
  });

  report(9, "dropping half the constraints costs accuracy but still helps", [&] {
    const auto& clean = frozen.full();
    const auto& drop = frozen.run("drop", [](RunConfig& c) { c.simulator.drop_probability = 0.5; });
    const double delta = clean.table[5].r1 - drop.table[5].r1;
    bool ok = drop.table[5].r1 < clean.table[5].r1 && drop.table[5].r1 > drop.table[0].r1 &&
              std::abs(delta - kDropDeltaT5) <= kTolerance;
    return Outcome{ok, fmt("t5 clean %.3f, dropped %.3f, t0 %.3f", clean.table[5].r1, drop.table[5].r1,
                           drop.table[0].r1)};
  });

  report(10, "repeated run invocations write identical bytes", [] {
    const fs::path base = fs::temp_directory_path() / "recovr_acceptance_det";
    fs::remove_all(base);
    const std::string cli = RECOVR_CLI_PATH;
    auto sh = [](const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); };
    if (sh(cli + " gen-bench --out " + (base / "bench").string()) != 0)
      return Outcome{false, "gen-bench failed"};
    const std::string flags = " --gallery " + (base / "bench" / "gallery.jsonl").string() +
                              " --queries " + (base / "bench" / "queries.jsonl").string() +
                              " --noise light --drop-p 0.3 --seed 7";
    if (sh(cli + " run" + flags + " --out " + (base / "a").string()) != 0 ||
        sh(cli + " run" + flags + " --out " + (base / "b").string()) != 0)
      return Outcome{false, "run failed"};
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), base / "a");
      if (!fs::exists(base / "b" / rel) || slurp(e.path()) != slurp(base / "b" / rel))
        return Outcome{false, "differs: " + rel.string()};
      ++files;
    }
    fs::remove_all(base);
    return Outcome{files > 2, std::to_string(files) + " files compared"};
  });

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
