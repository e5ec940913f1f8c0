#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "recovr/gallery.hpp"
#include "recovr/memory.hpp"
#include "recovr/metrics.hpp"
#include "recovr/session.hpp"
#include "recovr/simulator.hpp"

namespace recovr {

struct DimensionSpec {
  std::string name;
  int cardinality = 0;
};

/// Synthetic benchmark recipe: a gallery of attribute descriptors plus
/// (reference, target, u0) triplets where the reference differs from the
/// target on between min_diff and max_diff dimensions.
struct BenchmarkSpec {
  int gallery_size = 1000;
  std::vector<DimensionSpec> dimensions = {{"category", 10}, {"color", 8}, {"scene", 8},
                                           {"action", 8},    {"lighting", 4}, {"count", 4}};
  int query_count = 200;
  int min_diff = 1;
  int max_diff = 3;
  std::uint64_t seed = 42;
  bool allow_duplicates = false;
  int block_size = 8;

  void validate() const;
};

void to_json(nlohmann::json& j, const BenchmarkSpec& s);
void from_json(const nlohmann::json& j, BenchmarkSpec& s);

/// Value names for a dimension: a readable vocabulary for the default
/// dimensions, "<name>_<i>" otherwise.
std::vector<std::string> dimension_values(const DimensionSpec& dim);

struct BenchmarkQuery {
  std::string id;
  std::string reference_id;
  std::string target_id;
  EditInstruction u0;
  int differing = 0;
};

void to_json(nlohmann::json& j, const BenchmarkQuery& q);
void from_json(const nlohmann::json& j, BenchmarkQuery& q);

struct Benchmark {
  std::shared_ptr<const Gallery> gallery;
  std::vector<BenchmarkQuery> queries;
};

Benchmark generate_benchmark(const BenchmarkSpec& spec);

void write_queries_jsonl(std::ostream& out, const std::vector<BenchmarkQuery>& queries);
/// Throws InputError with the offending line number.
std::vector<BenchmarkQuery> read_queries_jsonl(std::istream& in);
std::vector<BenchmarkQuery> load_queries(const std::filesystem::path& path);

/// Writes gallery.jsonl, queries.jsonl and spec.json into `dir`.
void save_benchmark(const Benchmark& bench, const BenchmarkSpec& spec,
                    const std::filesystem::path& dir);

struct RunConfig {
  SessionConfig session;
  SimulatorConfig simulator;
  std::uint64_t seed = 42;
  int threads = 1;
};

/// Simulator seed of one query: depends only on the run seed and the query id,
/// so every configuration replays the same randomness.
std::uint64_t query_seed(std::uint64_t run_seed, std::string_view query_id);

struct QueryResult {
  BenchmarkQuery query;
  std::vector<TurnRecord> records;  // turns 0..T
  nlohmann::json trace;
};

struct RunResult {
  std::vector<QueryResult> queries;
  std::vector<QueryTrajectory> trajectories;
  std::vector<MetricRow> table;
};

QueryResult run_query(const BenchmarkQuery& query, std::shared_ptr<const Gallery> gallery,
                      std::shared_ptr<const ProgressMemoryLong> pm_l, const RunConfig& config);

/// Runs every query to completion and aggregates the per-turn metrics.
/// Throws InputError for an empty query set.
RunResult run_benchmark(const std::vector<BenchmarkQuery>& queries,
                        std::shared_ptr<const Gallery> gallery,
                        std::shared_ptr<const ProgressMemoryLong> pm_l, const RunConfig& config);

/// metrics.csv, config.json and traces/<query>.json under `dir`.
void write_run(const RunResult& result, const RunConfig& config, const std::filesystem::path& dir);

nlohmann::json run_config_json(const RunConfig& config);

/// Builds a run configuration from a flat object keyed by CLI flag names
/// ("turns", "rrf-k", "cap-neg", "disable", ...). Path keys ("gallery",
/// "queries", "out", ...) are ignored; any other unknown key is an InputError.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

enum class AblationAxis { covr, t2v, intent, reflect, cap };

std::string_view to_string(AblationAxis a);
/// Comma-separated axis list, e.g. "covr,t2v,intent,reflect,cap".
std::vector<AblationAxis> parse_axes(std::string_view text);

struct AblationRow {
  std::string name;
  AblationFlags flags;
  RunResult result;
};

/// One benchmark run per configuration row, all with the same seeds. Rows
/// are the full pipeline plus each axis disabled on its own, or every valid
/// on/off combination of the axes when `factorial` is set.
std::vector<AblationRow> run_ablation_matrix(const std::vector<BenchmarkQuery>& queries,
                                             std::shared_ptr<const Gallery> gallery,
                                             std::shared_ptr<const ProgressMemoryLong> pm_l,
                                             const RunConfig& base,
                                             const std::vector<AblationAxis>& axes,
                                             bool factorial = false);

/// One line per row: enabled components, then R@1/R@5/R@10/R@50/BRI at the
/// final turn and R@1 at turn 0.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace recovr
