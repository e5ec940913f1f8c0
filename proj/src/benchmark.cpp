#include "recovr/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "recovr/json_io.hpp"

namespace recovr {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- spec

void BenchmarkSpec::validate() const {
  if (gallery_size < 1) throw InputError("gallery size must be >= 1");
  if (query_count < 0) throw InputError("query count must be >= 0");
  if (dimensions.empty()) throw InputError("benchmark needs at least one dimension");
  if (dimensions.front().name != "category")
    throw InputError("the first benchmark dimension must be 'category'");
  std::set<std::string> names;
  for (const auto& d : dimensions) {
    if (d.cardinality < 2)
      throw InputError("dimension '" + d.name + "' needs at least two values");
    if (!names.insert(d.name).second) throw InputError("duplicate dimension '" + d.name + "'");
  }
  if (min_diff < 1 || max_diff < min_diff || max_diff > static_cast<int>(dimensions.size()))
    throw InputError("differing-dimension range must satisfy 1 <= min <= max <= #dimensions");
  if (2 * query_count > gallery_size)
    throw InputError("gallery too small: each query needs its own target and reference");
  if (!allow_duplicates) {
    double combos = 1;
    for (const auto& d : dimensions) combos *= d.cardinality;
    if (combos < gallery_size)
      throw InputError("not enough distinct descriptors for a unique-descriptor gallery");
  }
  if (block_size < 1) throw InputError("feature block size must be >= 1");
}

void to_json(json& j, const BenchmarkSpec& s) {
  json dims = json::array();
  for (const auto& d : s.dimensions) dims.push_back({{"name", d.name}, {"cardinality", d.cardinality}});
  j = {{"gallery_size", s.gallery_size}, {"dimensions", std::move(dims)},
       {"query_count", s.query_count},   {"min_diff", s.min_diff},
       {"max_diff", s.max_diff},         {"seed", s.seed},
       {"allow_duplicates", s.allow_duplicates}, {"block_size", s.block_size}};
}

void from_json(const json& j, BenchmarkSpec& s) {
  s = BenchmarkSpec{};
  try {
    s.gallery_size = j.value("gallery_size", s.gallery_size);
    if (j.contains("dimensions")) {
      s.dimensions.clear();
      for (const auto& d : j.at("dimensions"))
        s.dimensions.push_back({d.at("name").get<std::string>(), d.at("cardinality").get<int>()});
    }
    s.query_count = j.value("query_count", s.query_count);
    s.min_diff = j.value("min_diff", s.min_diff);
    s.max_diff = j.value("max_diff", s.max_diff);
    s.seed = j.value("seed", s.seed);
    s.allow_duplicates = j.value("allow_duplicates", s.allow_duplicates);
    s.block_size = j.value("block_size", s.block_size);
  } catch (const json::exception& e) {
    throw InputError(std::string("benchmark spec: ") + e.what());
  }
  s.validate();
}

std::vector<std::string> dimension_values(const DimensionSpec& dim) {
  static const std::map<std::string, std::vector<std::string>> named = {
      {"category", {"dog", "cat", "car", "bird", "horse", "person", "boat", "tree", "ball", "plane"}},
      {"color", {"red", "blue", "green", "yellow", "black", "white", "brown", "gray"}},
      {"scene", {"indoor", "outdoor", "beach", "forest", "city", "mountain", "street", "field"}},
      {"action", {"running", "sitting", "jumping", "walking", "flying", "swimming", "eating",
                  "sleeping"}},
      {"lighting", {"day", "night", "dusk", "dawn"}},
      {"count", {"one", "two", "three", "many"}}};
  std::vector<std::string> out;
  auto it = named.find(dim.name);
  for (int i = 0; i < dim.cardinality; ++i) {
    if (it != named.end() && i < static_cast<int>(it->second.size()))
      out.push_back(it->second[static_cast<std::size_t>(i)]);
    else
      out.push_back(dim.name + "_" + std::to_string(i));
  }
  return out;
}

// ---------------------------------------------------------------- queries

void to_json(json& j, const BenchmarkQuery& q) {
  j = {{"id", q.id},
       {"reference", q.reference_id},
       {"target", q.target_id},
       {"u0", q.u0},
       {"differing", q.differing}};
}

void from_json(const json& j, BenchmarkQuery& q) {
  q.id = j.at("id").get<std::string>();
  q.reference_id = j.at("reference").get<std::string>();
  q.target_id = j.at("target").get<std::string>();
  q.u0 = j.at("u0").get<EditInstruction>();
  q.differing = j.value("differing", 0);
}

void write_queries_jsonl(std::ostream& out, const std::vector<BenchmarkQuery>& queries) {
  for (const auto& q : queries) out << json(q).dump() << '\n';
}

std::vector<BenchmarkQuery> read_queries_jsonl(std::istream& in) {
  std::vector<BenchmarkQuery> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<BenchmarkQuery>());
    } catch (const std::exception& e) {
      throw InputError("queries line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<BenchmarkQuery> load_queries(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open queries file " + path.string());
  try {
    return read_queries_jsonl(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- generation

Benchmark generate_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<std::string>> values;
  std::vector<std::string> schema;
  for (const auto& d : spec.dimensions) {
    values.push_back(dimension_values(d));
    schema.push_back(d.name);
  }
  const std::size_t ndim = values.size();
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  using Descriptor = std::vector<std::size_t>;
  std::set<Descriptor> used;
  std::vector<Descriptor> items;
  auto random_descriptor = [&] {
    Descriptor d(ndim);
    for (std::size_t i = 0; i < ndim; ++i) d[i] = pick(values[i].size());
    return d;
  };
  auto fresh = [&](const Descriptor& d) { return spec.allow_duplicates || !used.contains(d); };

  struct Triplet {
    std::size_t target, reference;
    std::vector<std::size_t> differing;
    std::size_t u0_dim;
  };
  std::vector<Triplet> triplets;
  for (int q = 0; q < spec.query_count; ++q) {
    Descriptor target;
    do target = random_descriptor();
    while (!fresh(target));
    used.insert(target);

    const int d = std::uniform_int_distribution<int>(spec.min_diff, spec.max_diff)(rng);
    Descriptor reference;
    std::vector<std::size_t> dims;
    do {
      std::vector<std::size_t> order(ndim);
      for (std::size_t i = 0; i < ndim; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      dims.assign(order.begin(), order.begin() + d);
      std::sort(dims.begin(), dims.end());
      reference = target;
      for (std::size_t dim : dims) {
        std::size_t v = pick(values[dim].size() - 1);
        reference[dim] = v >= target[dim] ? v + 1 : v;
      }
    } while (!fresh(reference));
    used.insert(reference);

    items.push_back(target);
    items.push_back(reference);
    triplets.push_back({items.size() - 2, items.size() - 1, dims, dims[pick(dims.size())]});
  }
  while (static_cast<int>(items.size()) < spec.gallery_size) {
    Descriptor d = random_descriptor();
    if (!fresh(d)) continue;
    used.insert(d);
    items.push_back(d);
  }

  // ids follow a random permutation so that id tie-breaks carry no signal
  std::vector<std::size_t> slot(items.size());
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] = i;
  std::shuffle(slot.begin(), slot.end(), rng);
  char buf[32];
  auto id_of = [&](std::size_t index) {
    std::snprintf(buf, sizeof buf, "v%04zu", slot[index]);
    return std::string(buf);
  };

  std::vector<std::pair<std::string, AttributeMap>> rows;
  for (std::size_t i = 0; i < items.size(); ++i) {
    AttributeMap attrs;
    for (std::size_t k = 0; k < ndim; ++k) attrs[schema[k]] = values[k][items[i][k]];
    rows.emplace_back(id_of(i), std::move(attrs));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  auto gallery = std::make_shared<Gallery>(schema, spec.seed, spec.block_size);
  for (auto& [id, attrs] : rows) gallery->add(id, std::move(attrs));

  Benchmark bench;
  bench.gallery = gallery;
  for (std::size_t q = 0; q < triplets.size(); ++q) {
    const auto& tr = triplets[q];
    std::snprintf(buf, sizeof buf, "q%03zu", q);
    BenchmarkQuery query;
    query.id = buf;
    query.target_id = id_of(tr.target);
    query.reference_id = id_of(tr.reference);
    query.differing = static_cast<int>(tr.differing.size());
    query.u0.set_delta(schema[tr.u0_dim], values[tr.u0_dim][items[tr.target][tr.u0_dim]]);
    bench.queries.push_back(std::move(query));
  }
  return bench;
}

void save_benchmark(const Benchmark& bench, const BenchmarkSpec& spec, const fs::path& dir) {
  fs::create_directories(dir);
  bench.gallery->save(dir / "gallery.jsonl");
  std::ofstream q(dir / "queries.jsonl");
  if (!q) throw InputError("cannot write " + (dir / "queries.jsonl").string());
  write_queries_jsonl(q, bench.queries);
  std::ofstream s(dir / "spec.json");
  if (!s) throw InputError("cannot write " + (dir / "spec.json").string());
  s << json(spec).dump(2) << '\n';
}

// ---------------------------------------------------------------- runs

std::uint64_t query_seed(std::uint64_t run_seed, std::string_view query_id) {
  std::uint64_t state = fnv1a64(query_id) ^ run_seed;
  return splitmix64(state);
}

QueryResult run_query(const BenchmarkQuery& query, std::shared_ptr<const Gallery> gallery,
                      std::shared_ptr<const ProgressMemoryLong> pm_l, const RunConfig& config) {
  const Item& target = gallery->at(query.target_id);
  Session session(gallery, pm_l, config.session);
  const RankedList& first = session.start(query.reference_id, query.u0);

  QueryResult result;
  result.query = query;
  result.records.push_back({query.id, 0, first.rank_of(target.id), false});

  SimulatorConfig sim_config = config.simulator;
  sim_config.rng_seed = query_seed(config.seed, query.id);
  UserSimulator sim(target, sim_config);

  bool stopped = false;
  for (int t = 1; t <= config.session.max_turns; ++t) {
    if (stopped || session.state() != SessionState::active) {
      result.records.push_back({query.id, t, stopped ? std::optional<int>(1) : result.records.back().target_rank, stopped});
      continue;
    }
    const Item& candidate = gallery->at(session.current().top1());
    FeedbackMessage fb = sim.respond(candidate, session.current_question(), t);
    const RankedList& fused = session.step(fb);
    if (fb.action == FeedbackAction::accept) {
      stopped = true;
      result.records.push_back({query.id, t, 1, true});
    } else {
      result.records.push_back({query.id, t, fused.rank_of(target.id), false});
    }
  }

  result.trace = {{"query", query},
                  {"session", session.trace_json()},
                  {"simulator", sim.trace_json()}};
  return result;
}

RunResult run_benchmark(const std::vector<BenchmarkQuery>& queries,
                        std::shared_ptr<const Gallery> gallery,
                        std::shared_ptr<const ProgressMemoryLong> pm_l, const RunConfig& config) {
  if (queries.empty()) throw InputError("benchmark has no queries; metric table would be empty");
  config.session.validate();
  config.simulator.validate();

  RunResult out;
  out.queries.resize(queries.size());
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(queries.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i)
      out.queries[i] = run_query(queries[i], gallery, pm_l, config);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = static_cast<std::size_t>(w); i < queries.size();
               i += static_cast<std::size_t>(threads))
            out.queries[i] = run_query(queries[i], gallery, pm_l, config);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<TurnRecord> records;
  for (const auto& q : out.queries) records.insert(records.end(), q.records.begin(), q.records.end());
  out.trajectories = trajectories_from_records(records, config.session.max_turns,
                                               config.session.fusion.cutoff);
  out.table = metric_table(out.trajectories, config.session.max_turns);
  return out;
}

json run_config_json(const RunConfig& c) {
  const auto& s = c.session;
  std::string disabled;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!disabled.empty()) disabled += ',';
    disabled += name;
  };
  add(s.ablation.disable_covr, "covr");
  add(s.ablation.disable_t2v, "t2v");
  add(s.ablation.disable_intent_routing, "intent");
  add(s.ablation.disable_reflection, "reflect");
  add(s.ablation.disable_rank_cap, "cap");
  return {{"turns", s.max_turns},
          {"fusion", to_string(s.fusion.variant)},
          {"window", s.fusion.window},
          {"rrf-k", s.fusion.k},
          {"topk", s.fusion.cutoff},
          {"penalty-rank", s.fusion.penalty_rank},
          {"penalty-mode",
           s.fusion.penalty_mode == PenaltyMode::subtract ? "subtract" : "penalty_rank"},
          {"include-turn0", s.fusion.include_turn0},
          {"cap-neg", s.caps.kappa_neg},
          {"cap-neu", s.caps.kappa_neu},
          {"cap-mode", to_string(s.cap_mode)},
          {"cap-history", s.cap_history},
          {"max-positives", s.max_positives},
          {"hard-negatives", s.channels.hard_negatives},
          {"mine-rejected", s.mine_rejected_attributes},
          {"record-timing", s.record_timing},
          {"disable", disabled},
          {"policy", to_string(c.simulator.policy)},
          {"answer-p", c.simulator.answer_probability},
          {"drop-p", c.simulator.drop_probability},
          {"noise", to_string(c.simulator.noise)},
          {"seed", c.seed}};
}

namespace {

void apply_disable(AblationFlags& f, std::string_view axes);

}  // namespace

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw InputError("run configuration must be a JSON object");
  static const std::set<std::string> ignored = {"gallery", "queries", "out", "axes", "factorial",
                                                "port", "host", "spec", "run", "turn", "reasoner",
                                                "idle-timeout", "cards"};
  auto& s = c.session;
  try {
    for (const auto& [key, v] : j.items()) {
      if (ignored.contains(key)) continue;
      if (key == "turns") s.max_turns = v.get<int>();
      else if (key == "fusion") s.fusion.variant = parse_fusion_variant(v.get<std::string>());
      else if (key == "window") s.fusion.window = v.get<int>();
      else if (key == "rrf-k") s.fusion.k = v.get<double>();
      else if (key == "topk") s.fusion.cutoff = s.channels.cutoff = v.get<int>();
      else if (key == "penalty-rank") s.fusion.penalty_rank = v.get<int>();
      else if (key == "penalty-mode")
        s.fusion.penalty_mode = v.get<std::string>() == "penalty_rank" ? PenaltyMode::penalty_rank
                                                                       : PenaltyMode::subtract;
      else if (key == "include-turn0") s.fusion.include_turn0 = v.get<bool>();
      else if (key == "cap-neg") s.caps.kappa_neg = v.get<int>();
      else if (key == "cap-neu") s.caps.kappa_neu = v.get<int>();
      else if (key == "cap-mode") s.cap_mode = parse_cap_mode(v.get<std::string>());
      else if (key == "cap-history") s.cap_history = v.get<bool>();
      else if (key == "max-positives") s.max_positives = v.get<std::size_t>();
      else if (key == "hard-negatives") s.channels.hard_negatives = v.get<bool>();
      else if (key == "mine-rejected") s.mine_rejected_attributes = v.get<bool>();
      else if (key == "record-timing") s.record_timing = v.get<bool>();
      else if (key == "disable") apply_disable(s.ablation, v.get<std::string>());
      else if (key == "policy") c.simulator.policy = parse_feedback_policy(v.get<std::string>());
      else if (key == "answer-p") c.simulator.answer_probability = v.get<double>();
      else if (key == "drop-p") c.simulator.drop_probability = v.get<double>();
      else if (key == "noise") c.simulator.noise = parse_noise_level(v.get<std::string>());
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threads") c.threads = v.get<int>();
      else throw InputError("unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("configuration: ") + e.what());
  }
  s.validate();
  c.simulator.validate();
  return c;
}

void write_run(const RunResult& result, const RunConfig& config, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (ec) throw InputError("cannot create " + (dir / "traces").string() + ": " + ec.message());
  {
    std::ofstream csv(dir / "metrics.csv");
    if (!csv) throw InputError("cannot write " + (dir / "metrics.csv").string());
    write_metric_csv(csv, result.table);
  }
  {
    std::ofstream cfg(dir / "config.json");
    if (!cfg) throw InputError("cannot write " + (dir / "config.json").string());
    cfg << run_config_json(config).dump(2) << '\n';
  }
  for (const auto& q : result.queries) {
    fs::path p = dir / "traces" / (q.query.id + ".json");
    std::ofstream out(p);
    if (!out) throw InputError("cannot write " + p.string());
    out << q.trace.dump() << '\n';
  }
}

// ---------------------------------------------------------------- ablations

std::string_view to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::covr: return "covr";
    case AblationAxis::t2v: return "t2v";
    case AblationAxis::intent: return "intent";
    case AblationAxis::reflect: return "reflect";
    case AblationAxis::cap: return "cap";
  }
  return "?";
}

std::vector<AblationAxis> parse_axes(std::string_view text) {
  std::vector<AblationAxis> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find(',', pos);
    auto token = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      bool ok = false;
      for (auto a : {AblationAxis::covr, AblationAxis::t2v, AblationAxis::intent,
                     AblationAxis::reflect, AblationAxis::cap})
        if (token == to_string(a)) {
          if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
          ok = true;
        }
      if (!ok) throw InputError("unknown ablation axis '" + std::string(token) + "'");
    }
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

namespace {

void disable(AblationFlags& f, AblationAxis a) {
  switch (a) {
    case AblationAxis::covr: f.disable_covr = true; break;
    case AblationAxis::t2v: f.disable_t2v = true; break;
    case AblationAxis::intent: f.disable_intent_routing = true; break;
    case AblationAxis::reflect: f.disable_reflection = true; break;
    case AblationAxis::cap: f.disable_rank_cap = true; break;
  }
}

void apply_disable(AblationFlags& f, std::string_view axes) {
  for (auto a : parse_axes(axes)) disable(f, a);
}

std::string row_name(const std::vector<AblationAxis>& off) {
  if (off.empty()) return "full";
  std::string s;
  for (auto a : off) s += (s.empty() ? "no-" : "+no-") + std::string(to_string(a));
  return s;
}

}  // namespace

std::vector<AblationRow> run_ablation_matrix(const std::vector<BenchmarkQuery>& queries,
                                             std::shared_ptr<const Gallery> gallery,
                                             std::shared_ptr<const ProgressMemoryLong> pm_l,
                                             const RunConfig& base,
                                             const std::vector<AblationAxis>& axes, bool factorial) {
  std::vector<std::vector<AblationAxis>> rows;
  if (factorial) {
    if (axes.size() > 5) throw InputError("at most five ablation axes");
    for (unsigned mask = 0; mask < (1u << axes.size()); ++mask) {
      std::vector<AblationAxis> off;
      for (std::size_t i = 0; i < axes.size(); ++i)
        if (mask & (1u << i)) off.push_back(axes[i]);
      rows.push_back(std::move(off));
    }
  } else {
    rows.push_back({});
    for (auto a : axes) rows.push_back({a});
  }

  std::vector<AblationRow> out;
  for (const auto& off : rows) {
    RunConfig cfg = base;
    for (auto a : off) disable(cfg.session.ablation, a);
    if (cfg.session.ablation.disable_t2v && cfg.session.ablation.disable_covr) continue;
    out.push_back({row_name(off), cfg.session.ablation, run_benchmark(queries, gallery, pm_l, cfg)});
  }
  return out;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "row,covr,t2v,intent,reflect,cap,R@1_t0,R@1,R@5,R@10,R@50,BRI\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& f = r.flags;
    const auto& first = r.result.table.front();
    const auto& last = r.result.table.back();
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,", r.name.c_str(),
                  !f.disable_covr, !f.disable_t2v, !f.disable_intent_routing, !f.disable_reflection,
                  !f.disable_rank_cap, first.r1, last.r1, last.r5, last.r10, last.r50);
    out << buf;
    if (last.bri) {
      std::snprintf(buf, sizeof buf, "%.6f", *last.bri);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace recovr
