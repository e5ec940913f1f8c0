#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "recovr/gallery.hpp"
#include "recovr/intent.hpp"
#include "recovr/memory.hpp"
#include "recovr/reflection.hpp"

namespace recovr {

/// The reasoning seam of the turn loop: intent decomposition, query
/// compression, state reflection and question asking.
class Reasoner {
 public:
  virtual ~Reasoner() = default;

  virtual IntentDecomposition decompose(const FeedbackMessage& feedback,
                                        const ProgressMemoryShort& pm_s,
                                        const ProgressMemoryLong& pm_l) = 0;
  virtual Query compress(const Query& query, std::size_t max_positives,
                         const ProgressMemoryLong& pm_l) = 0;
  virtual ReflectionOutcome reflect(const FeedbackMessage& feedback,
                                    const ProgressMemoryShort& pm_s,
                                    const ProgressMemoryLong& pm_l) = 0;
  virtual std::optional<Question> ask_question(const ProgressMemoryShort& pm_s,
                                               const RankedList& fused,
                                               const Gallery& gallery) = 0;
  /// Whether free-text feedback can be interpreted.
  virtual bool accepts_free_text() const { return false; }
};

class RuleBasedReasoner final : public Reasoner {
 public:
  explicit RuleBasedReasoner(ReflectionConfig config = {}) : config_(config) {}

  IntentDecomposition decompose(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                                const ProgressMemoryLong& pm_l) override;
  Query compress(const Query& query, std::size_t max_positives,
                 const ProgressMemoryLong& pm_l) override;
  ReflectionOutcome reflect(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                            const ProgressMemoryLong& pm_l) override;
  std::optional<Question> ask_question(const ProgressMemoryShort& pm_s, const RankedList& fused,
                                       const Gallery& gallery) override;

 private:
  ReflectionConfig config_;
};

// ----------------------------------------------------------------------------
// External reasoner wire contract. Each request is a JSON object POSTed to
// the endpoint with a "task" discriminator; the response must match the
// output schema of that task exactly (extra keys are rejected). Structured
// values travel as "dimension=value" phrases; in search_query_info a leading
// '!' marks a negative, in edit_query_info a leading '-' marks a removal.
//
//   intent_decompose -> {reasoning, is_answer_to_prev_question,
//                        has_edit_intent, search_query_info, edit_query_info}
//   rewrite_queries  -> {reasoning, rewritten_query}
//   state_reflect    -> {reasoning, satisfaction_level,
//                        positive_constraints, negative_constraints}
//   question_ask     -> {reasoning_brief, question}
// ----------------------------------------------------------------------------

/// Thrown when a reasoner response violates its output schema.
struct SchemaViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string render_feedback_text(const FeedbackMessage& feedback);
std::string render_query_text(const Query& query);

nlohmann::json decompose_request(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                                 const ProgressMemoryLong& pm_l);
nlohmann::json rewrite_request(const Query& query);
nlohmann::json reflect_request(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                               const ProgressMemoryLong& pm_l);
nlohmann::json question_request(const ProgressMemoryShort& pm_s);

IntentDecomposition parse_decompose_response(const nlohmann::json& response,
                                             const ProgressMemoryLong& pm_l);
Query parse_rewrite_response(const nlohmann::json& response, const Query& original,
                             const ProgressMemoryLong& pm_l);
ReflectionOutcome parse_reflect_response(const nlohmann::json& response,
                                         const ProgressMemoryShort& pm_s,
                                         const ProgressMemoryLong& pm_l);
std::optional<Question> parse_question_response(const nlohmann::json& response, int next_turn);

/// Posts JSON to an external reasoner; any transport failure, timeout or
/// schema violation falls back to the rule-based path and is logged.
class HttpReasoner final : public Reasoner {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 8090;
    std::string path = "/reason";
    std::chrono::milliseconds timeout{2000};
  };
  using Logger = std::function<void(const std::string&)>;

  explicit HttpReasoner(Options options, Logger log = {});

  IntentDecomposition decompose(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                                const ProgressMemoryLong& pm_l) override;
  Query compress(const Query& query, std::size_t max_positives,
                 const ProgressMemoryLong& pm_l) override;
  ReflectionOutcome reflect(const FeedbackMessage& feedback, const ProgressMemoryShort& pm_s,
                            const ProgressMemoryLong& pm_l) override;
  std::optional<Question> ask_question(const ProgressMemoryShort& pm_s, const RankedList& fused,
                                       const Gallery& gallery) override;
  bool accepts_free_text() const override { return true; }

  int fallbacks() const { return fallbacks_.load(); }

 private:
  std::optional<nlohmann::json> post(const nlohmann::json& request);
  void note_fallback(const std::string& task, const std::string& why);

  Options options_;
  Logger log_;
  RuleBasedReasoner fallback_;
  std::atomic<int> fallbacks_{0};
};

}  // namespace recovr
