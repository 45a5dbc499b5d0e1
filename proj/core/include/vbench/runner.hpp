#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vbench/corpus.hpp"
#include "vbench/gateway.hpp"
#include "vbench/parser.hpp"
#include "vbench/protocol.hpp"

namespace vbench::runner {

struct EmptyPlan : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PlanMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrialSpec {
  std::string trial_id;
  int phase = 1;
  std::string vignette_id;
  std::string condition_code;
  std::string model_label;
  std::string mitigation_id;
  double temperature = 0.0;
  int repetition = 1;
};

std::string make_trial_id(int phase, const std::string& vignette_id,
                          const std::string& condition_code, const std::string& model_label,
                          const std::string& mitigation_id, double temperature, int repetition);

// Full cartesian product in canonical order: vignette, condition, model,
// mitigation, temperature, repetition. Phase 1 plans must use BASELINE only.
std::vector<TrialSpec> build_plan(int phase, const std::vector<std::string>& vignette_ids,
                                  const std::vector<std::string>& condition_codes,
                                  const std::vector<std::string>& model_labels,
                                  const std::vector<std::string>& mitigation_ids,
                                  const std::vector<double>& temperatures, int repetitions);

// Identity of a plan for resumption; any reordering or edit changes it.
std::string plan_hash(const std::vector<TrialSpec>& plan);

struct TrialRecord {
  TrialSpec spec;
  std::string domain;  // token, denormalized from the vignette
  gateway::RawResponse response;
  parser::ParsedResponse parsed;
  // Second-pass output for two-pass arms; null otherwise. Recorded only,
  // never folded back into the first-pass response.
  nlohmann::json critic = nullptr;
  std::string started_at;   // ISO-8601 UTC, JSONL only
  std::string finished_at;
};

nlohmann::json record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& j);

// Flat row as persisted to CSV; the aggregation input type.
struct TrialRow {
  std::string trial_id;
  int phase = 1;
  std::string vignette_id;
  std::string domain;
  std::string condition_code;
  std::string dimension;
  std::string pole;
  std::string model_name;
  std::string mitigation;
  double temperature = 0.0;
  int repetition = 1;
  long latency_ms = 0;
  long input_tokens = 0;
  long output_tokens = 0;
  bool api_success = false;
  bool parse_success = false;
  std::string parse_method;
  std::optional<int> aggressiveness_score;
  std::optional<int> risk_level;
  std::optional<int> number_of_options_presented;
  std::optional<bool> patient_values_acknowledged;
  std::optional<bool> patient_values_influenced_recommendation;
  std::optional<bool> cost_considerations_mentioned;
  std::string primary_recommendation;
  std::string reasoning;
};

TrialRow row_from_record(const TrialRecord& record);

const std::vector<std::string>& trial_csv_columns();
std::string rows_to_csv(const std::vector<TrialRow>& rows);
std::vector<TrialRow> rows_from_csv_text(const std::string& text);
std::vector<TrialRow> read_trials_csv(const std::string& path);
void write_trials_csv(const std::string& path, const std::vector<TrialRow>& rows);

// JSONL: header line {"plan_hash", "phase"} then one record object per line
// in completion order.
std::string jsonl_header_line(const std::vector<TrialSpec>& plan, int phase);
// Completed records keyed by trial_id. Throws PlanMismatch when the header's
// plan hash differs from expected_hash; missing file yields an empty map.
std::map<std::string, TrialRecord> load_completed_jsonl(const std::string& path,
                                                        const std::string& expected_hash);

struct RunOptions {
  int phase = 1;
  std::string results_dir = "results";
  // Fixed stamp for reproducible filenames; empty uses the current UTC time.
  std::string run_stamp;
  // Resume from an existing JSONL with a matching plan hash.
  bool resume = false;
  std::string resume_jsonl;
  int worker_threads = 0;  // 0 = gateway max concurrency
};

struct RunResult {
  std::vector<TrialRecord> records;  // canonical plan order, one per spec
  std::vector<TrialRow> rows;        // same order
  std::string jsonl_path;
  std::string csv_path;
  int executed = 0;
  int skipped = 0;
};

std::string run_stamp_now();

// Executes every spec exactly once (minus resumed ones), appending to JSONL
// as trials complete and writing the CSV in plan order at finalization.
// Per-trial failures are recorded, never thrown.
RunResult execute_plan(const std::vector<TrialSpec>& plan,
                       const std::map<std::string, corpus::Vignette>& vignettes,
                       gateway::Gateway& gw, const RunOptions& options);

// Single-trial execution (including the critic pass for two-pass arms),
// exposed for tests.
TrialRecord run_trial(const TrialSpec& spec, const corpus::Vignette& vignette,
                      gateway::Gateway& gw);

}  // namespace vbench::runner
