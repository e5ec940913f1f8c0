#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "recovr/benchmark.hpp"
#include "recovr/runfile.hpp"
#include "recovr/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace recovr;

namespace {

// Flags that mirror RunConfig; each one left unset falls back to the
// --config file, then to the built-in default.
struct RunFlags {
  std::optional<int> turns, window, topk, cap_neg, cap_neu, penalty_rank, threads, max_positives;
  std::optional<double> rrf_k, drop_p, answer_p;
  std::optional<std::string> fusion, policy, noise, cap_mode, disable, penalty_mode;
  std::optional<std::uint64_t> seed;
  std::optional<bool> include_turn0, cap_history, hard_negatives, mine_rejected, record_timing;
  std::string config_path;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON file with flag values (flags override it)");
    app->add_option("--turns", turns, "feedback turns T");
    app->add_option("--fusion", fusion, "twrrf|static_rrf|uniform_rrf|penalty_rrf|simmax|simsum");
    app->add_option("--window", window, "fusion window W");
    app->add_option("--rrf-k", rrf_k, "RRF smoothing constant k");
    app->add_option("--topk", topk, "list cutoff K");
    app->add_option("--penalty-rank", penalty_rank, "absent-candidate rank for penalty_rrf");
    app->add_option("--penalty-mode", penalty_mode, "subtract|penalty_rank");
    app->add_option("--include-turn0", include_turn0, "fuse the turn-0 list as well");
    app->add_option("--cap-neg", cap_neg, "cap rank after a rejection");
    app->add_option("--cap-neu", cap_neu, "cap rank after stagnation");
    app->add_option("--cap-mode", cap_mode, "floor|shift");
    app->add_option("--cap-history", cap_history, "cap in-window history as well as fresh lists");
    app->add_option("--max-positives", max_positives, "query compression threshold");
    app->add_option("--hard-negatives", hard_negatives, "filter instead of penalize negatives");
    app->add_option("--mine-rejected", mine_rejected, "mine negatives from rejected results");
    app->add_option("--record-timing", record_timing, "per-stage timings in traces");
    app->add_option("--disable", disable, "comma list of covr,t2v,intent,reflect,cap");
    app->add_option("--policy", policy, "simulator policy: mixed|modify_only|rewrite_only");
    app->add_option("--answer-p", answer_p, "probability of answering a pending question");
    app->add_option("--drop-p", drop_p, "constraint drop probability");
    app->add_option("--noise", noise, "none|light|heavy");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--threads", threads, "parallel sessions");
  }

  json file() const {
    if (config_path.empty()) return json::object();
    std::ifstream in(config_path);
    if (!in) throw InputError("cannot open config file " + config_path);
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError(config_path + ": " + e.what());
    }
  }

  json merged() const {
    json j = file();
    auto put = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    put("turns", turns);
    put("fusion", fusion);
    put("window", window);
    put("rrf-k", rrf_k);
    put("topk", topk);
    put("penalty-rank", penalty_rank);
    put("penalty-mode", penalty_mode);
    put("include-turn0", include_turn0);
    put("cap-neg", cap_neg);
    put("cap-neu", cap_neu);
    put("cap-mode", cap_mode);
    put("cap-history", cap_history);
    put("max-positives", max_positives);
    put("hard-negatives", hard_negatives);
    put("mine-rejected", mine_rejected);
    put("record-timing", record_timing);
    put("disable", disable);
    put("policy", policy);
    put("answer-p", answer_p);
    put("drop-p", drop_p);
    put("noise", noise);
    put("seed", seed);
    put("threads", threads);
    return j;
  }
};

std::string path_from(const std::string& flag, const json& cfg, const char* key) {
  if (!flag.empty()) return flag;
  if (cfg.contains(key)) return cfg[key].get<std::string>();
  throw InputError(std::string("--") + key + " is required");
}

struct Inputs {
  std::shared_ptr<const Gallery> gallery;
  std::shared_ptr<const ProgressMemoryLong> pm_l;
  std::vector<BenchmarkQuery> queries;
};

Inputs load_inputs(const std::string& gallery_path, const std::string& queries_path) {
  Inputs in;
  in.gallery = std::make_shared<const Gallery>(Gallery::load(gallery_path));
  in.pm_l = std::make_shared<const ProgressMemoryLong>(ProgressMemoryLong::build(*in.gallery));
  in.queries = load_queries(queries_path);
  return in;
}

void print_table(const std::vector<MetricRow>& rows) { write_metric_csv(std::cout, rows); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive composed retrieval engine: benchmarks, fusion replay and session API"};
  app.require_subcommand(1);

  // gen-bench
  auto* gen = app.add_subcommand("gen-bench", "generate a synthetic gallery and query set");
  std::string spec_path, gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", spec_path, "benchmark spec JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override the spec seed");

  // run
  auto* run = app.add_subcommand("run", "run the simulated benchmark");
  RunFlags run_flags;
  std::string run_gallery, run_queries, run_out;
  run->add_option("--gallery", run_gallery, "gallery JSONL");
  run->add_option("--queries", run_queries, "queries JSONL");
  run->add_option("--out", run_out, "output directory");
  run_flags.attach(run);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the component ablation matrix");
  RunFlags ab_flags;
  std::string ab_gallery, ab_queries, ab_out, axes = "covr,t2v,intent,reflect,cap";
  bool factorial = false;
  ablate->add_option("--gallery", ab_gallery, "gallery JSONL");
  ablate->add_option("--queries", ab_queries, "queries JSONL");
  ablate->add_option("--out", ab_out, "output directory");
  ablate->add_option("--axes", axes, "comma list of covr,t2v,intent,reflect,cap");
  ablate->add_flag("--factorial", factorial, "every on/off combination instead of leave-one-out");
  ab_flags.attach(ablate);

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse a run file offline");
  RunFlags fuse_flags;
  std::string fuse_in, fuse_out;
  int fuse_turn = -1;
  fuse_cmd->add_option("--run", fuse_in, "input run file (qid channel turn item rank score)")
      ->required();
  fuse_cmd->add_option("--out", fuse_out, "output run file (stdout when omitted)");
  fuse_cmd->add_option("--turn", fuse_turn, "turn to fuse at (default: last turn per query)");
  fuse_flags.attach(fuse_cmd);

  // serve
  auto* serve = app.add_subcommand("serve", "start the HTTP session service");
  RunFlags serve_flags;
  int port = 8080;
  std::string host = "127.0.0.1", reasoner_url;
  std::vector<std::string> serve_galleries;
  int idle_timeout = 3600, cards = 10;
  serve->add_option("--port", port, "listen port");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--gallery", serve_galleries, "gallery JSONL, optionally name=path")->required();
  serve->add_option("--reasoner", reasoner_url, "external reasoner host:port (rule-based if unset)");
  serve->add_option("--idle-timeout", idle_timeout, "idle session eviction in seconds");
  serve->add_option("--cards", cards, "result cards per response");
  serve_flags.attach(serve);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      BenchmarkSpec spec;
      if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw InputError("cannot open spec file " + spec_path);
        spec = json::parse(in).get<BenchmarkSpec>();
      }
      if (gen_seed) spec.seed = *gen_seed;
      Benchmark bench = generate_benchmark(spec);
      save_benchmark(bench, spec, gen_out);
      std::cout << "wrote " << bench.gallery->size() << " items and " << bench.queries.size()
                << " queries to " << gen_out << '\n';
    } else if (*run) {
      json cfg = run_flags.merged();
      RunConfig config = run_config_from_json(cfg);
      Inputs in = load_inputs(path_from(run_gallery, cfg, "gallery"), path_from(run_queries, cfg, "queries"));
      RunResult result = run_benchmark(in.queries, in.gallery, in.pm_l, config);
      std::string out = path_from(run_out, cfg, "out");
      write_run(result, config, out);
      print_table(result.table);
    } else if (*ablate) {
      json cfg = ab_flags.merged();
      RunConfig config = run_config_from_json(cfg);
      Inputs in = load_inputs(path_from(ab_gallery, cfg, "gallery"), path_from(ab_queries, cfg, "queries"));
      auto rows = run_ablation_matrix(in.queries, in.gallery, in.pm_l, config, parse_axes(axes), factorial);
      fs::path out = path_from(ab_out, cfg, "out");
      fs::create_directories(out);
      for (const auto& row : rows) {
        RunConfig rc = config;
        rc.session.ablation = row.flags;
        write_run(row.result, rc, out / row.name);
      }
      std::ofstream csv(out / "ablation.csv");
      if (!csv) throw InputError("cannot write " + (out / "ablation.csv").string());
      write_ablation_csv(csv, rows);
      write_ablation_csv(std::cout, rows);
    } else if (*fuse_cmd) {
      RunConfig config = run_config_from_json(fuse_flags.merged());
      std::ifstream in(fuse_in);
      if (!in) throw InputError("cannot open run file " + fuse_in);
      if (fuse_out.empty()) {
        fuse_run(in, std::cout, config.session.fusion, fuse_turn);
      } else {
        std::ofstream out(fuse_out);
        if (!out) throw InputError("cannot write " + fuse_out);
        fuse_run(in, out, config.session.fusion, fuse_turn);
      }
    } else if (*serve) {
      RunConfig config = run_config_from_json(serve_flags.merged());
      ServiceOptions opts;
      opts.session = config.session;
      opts.simulator = config.simulator;
      opts.simulator.rng_seed = config.seed;
      opts.idle_timeout = std::chrono::seconds(idle_timeout);
      opts.cards = cards;
      if (!reasoner_url.empty()) {
        HttpReasoner::Options ro;
        auto colon = reasoner_url.rfind(':');
        if (colon == std::string::npos) throw InputError("--reasoner expects host:port");
        ro.host = reasoner_url.substr(0, colon);
        ro.port = std::stoi(reasoner_url.substr(colon + 1));
        opts.reasoner = std::make_shared<HttpReasoner>(ro);
      }
      SessionService service(opts);
      for (const auto& spec : serve_galleries) {
        auto eq = spec.find('=');
        std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
        std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        service.add_gallery(name, std::make_shared<const Gallery>(Gallery::load(path)));
      }
      httplib::Server server;
      service.mount(server);
      std::cerr << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw InputError("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
