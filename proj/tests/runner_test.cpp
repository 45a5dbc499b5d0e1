#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "support.hpp"
#include "vbench/gateway.hpp"
#include "vbench/protocol.hpp"
#include "vbench/runner.hpp"
#include "vbench/synthetic.hpp"

using namespace vbench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.is_open()) << path;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::unique_ptr<gateway::Gateway> synthetic_gateway(const std::vector<std::string>& labels) {
  auto gw = std::make_unique<gateway::Gateway>(gateway::GatewayConfig{2, 0.0});
  auto profiles = synthetic::default_profiles(labels);
  for (const auto& label : labels) {
    auto profile = profiles.at(label);
    profile.vignette_domains["vig_card"] = "cardiology";
    profile.vignette_domains["vig_onc"] = "oncology";
    gw->register_model(*gateway::model_config_by_label(label),
                       std::make_shared<synthetic::SyntheticBackend>(profile));
  }
  return gw;
}

}  // namespace

TEST(TrialId, Format) {
  EXPECT_EQ(runner::make_trial_id(1, "vig_card", "CONTROL", "gpt-5.2", "BASELINE", 0.0, 1),
            "p1_vig_card_CONTROL_gpt-5.2_BASELINE_t0.0_r1");
  EXPECT_EQ(runner::make_trial_id(2, "vig_onc", "QOL_PLUS", "claude-4.5-sonnet", "VEP", 0.7, 3),
            "p2_vig_onc_QOL_PLUS_claude-4.5-sonnet_VEP_t0.7_r3");
}

TEST(Plan, CardinalityAndOrder) {
  const auto labels = gateway::default_model_labels();
  const auto plan = runner::build_plan(1, {"vig_card", "vig_onc"}, protocol::condition_codes(),
                                       labels, {"BASELINE"}, {0.0}, 1);
  ASSERT_EQ(plan.size(), 104u);

  // Canonical nesting: vignette, condition, model, mitigation, temp, rep.
  EXPECT_EQ(plan[0].vignette_id, "vig_card");
  EXPECT_EQ(plan[0].condition_code, "CONTROL");
  EXPECT_EQ(plan[0].model_label, "gpt-5.2");
  EXPECT_EQ(plan[1].model_label, "claude-4.5-sonnet");
  EXPECT_EQ(plan[4].condition_code, "AUTONOMY_PLUS");
  EXPECT_EQ(plan[52].vignette_id, "vig_onc");

  const auto phase2 = runner::build_plan(2, {"vig_card"}, protocol::condition_codes(), {"gpt-5.2"},
                                         protocol::mitigation_arm_ids(), {0.0}, 1);
  ASSERT_EQ(phase2.size(), 78u);
  EXPECT_EQ(phase2[0].mitigation_id, "VEP");
  EXPECT_EQ(phase2[5].mitigation_id, "VIM_SELF_REPORT");
  for (const auto& spec : phase2) EXPECT_NE(spec.mitigation_id, "BASELINE");
}

TEST(Plan, Validation) {
  const std::vector<std::string> conds = {"CONTROL"};
  EXPECT_THROW(runner::build_plan(3, {"v"}, conds, {"m"}, {"BASELINE"}, {0.0}, 1),
               std::invalid_argument);
  EXPECT_THROW(runner::build_plan(1, {}, conds, {"m"}, {"BASELINE"}, {0.0}, 1), runner::EmptyPlan);
  EXPECT_THROW(runner::build_plan(1, {"v"}, {}, {"m"}, {"BASELINE"}, {0.0}, 1), runner::EmptyPlan);
  EXPECT_THROW(runner::build_plan(1, {"v"}, conds, {"m"}, {"BASELINE"}, {0.0}, 0),
               runner::EmptyPlan);
  EXPECT_THROW(runner::build_plan(1, {"v"}, {"NOT_A_CODE"}, {"m"}, {"BASELINE"}, {0.0}, 1),
               std::out_of_range);
  EXPECT_THROW(runner::build_plan(1, {"v"}, conds, {"m"}, {"NOT_AN_ARM"}, {0.0}, 1),
               std::out_of_range);
  // Mitigation arms are a phase-2 concept; phase 1 runs the plain protocol.
  EXPECT_THROW(runner::build_plan(1, {"v"}, conds, {"m"}, {"VEP"}, {0.0}, 1),
               std::invalid_argument);
  EXPECT_NO_THROW(runner::build_plan(2, {"v"}, conds, {"m"}, {"VEP"}, {0.0}, 1));
}

TEST(Plan, HashTracksIdentity) {
  const auto a = runner::build_plan(1, {"v1", "v2"}, {"CONTROL", "QOL_PLUS"}, {"gpt-5.2"},
                                    {"BASELINE"}, {0.0}, 1);
  const auto b = runner::build_plan(1, {"v1", "v2"}, {"CONTROL", "QOL_PLUS"}, {"gpt-5.2"},
                                    {"BASELINE"}, {0.0}, 1);
  const auto c = runner::build_plan(1, {"v2", "v1"}, {"CONTROL", "QOL_PLUS"}, {"gpt-5.2"},
                                    {"BASELINE"}, {0.0}, 1);
  EXPECT_EQ(runner::plan_hash(a), runner::plan_hash(b));
  EXPECT_NE(runner::plan_hash(a), runner::plan_hash(c));
  EXPECT_EQ(runner::plan_hash(a).size(), 64u);

  const json header = json::parse(runner::jsonl_header_line(a, 1));
  EXPECT_EQ(header.at("plan_hash"), runner::plan_hash(a));
  EXPECT_EQ(header.at("phase"), 1);
  EXPECT_EQ(header.at("n_specs"), a.size());
}

TEST(RunTrial, RecordRoundTrip) {
  auto gw = synthetic_gateway({"gpt-5.2"});
  const auto vignette = testsupport::make_vignette(corpus::Domain::Cardiology, "vig_card");
  runner::TrialSpec spec;
  spec.phase = 1;
  spec.vignette_id = "vig_card";
  spec.condition_code = "RISK_PLUS";
  spec.model_label = "gpt-5.2";
  spec.mitigation_id = "BASELINE";
  spec.trial_id = runner::make_trial_id(1, "vig_card", "RISK_PLUS", "gpt-5.2", "BASELINE", 0.0, 1);

  const auto record = runner::run_trial(spec, vignette, *gw);
  EXPECT_EQ(record.domain, "cardiology");
  EXPECT_TRUE(record.response.api_success);
  EXPECT_TRUE(record.parsed.parse_success);
  EXPECT_EQ(record.parsed.aggressiveness_score, 4);  // base 3 shifted +1
  EXPECT_TRUE(record.critic.is_null());
  EXPECT_FALSE(record.started_at.empty());
  EXPECT_FALSE(record.finished_at.empty());

  const auto back = runner::record_from_json(runner::record_to_json(record));
  EXPECT_EQ(back.spec.trial_id, record.spec.trial_id);
  EXPECT_EQ(back.domain, record.domain);
  EXPECT_EQ(back.response.text, record.response.text);
  EXPECT_EQ(back.parsed.aggressiveness_score, record.parsed.aggressiveness_score);
  EXPECT_EQ(runner::record_to_json(back), runner::record_to_json(record));
}

TEST(RunTrial, TwoPassArmRecordsCritic) {
  auto gw = synthetic_gateway({"gpt-5.2"});
  const auto vignette = testsupport::make_vignette(corpus::Domain::Cardiology, "vig_card");
  runner::TrialSpec spec;
  spec.phase = 2;
  spec.vignette_id = "vig_card";
  spec.condition_code = "QOL_PLUS";
  spec.model_label = "gpt-5.2";
  spec.mitigation_id = "MULTI_AGENT";
  spec.trial_id = runner::make_trial_id(2, "vig_card", "QOL_PLUS", "gpt-5.2", "MULTI_AGENT", 0.0, 1);

  const auto record = runner::run_trial(spec, vignette, *gw);
  ASSERT_TRUE(record.critic.is_object());
  EXPECT_TRUE(record.critic.at("api_success").get<bool>());
  ASSERT_TRUE(record.critic.at("fields").is_object());
  for (const auto& field : protocol::critic_response_fields()) {
    EXPECT_TRUE(record.critic.at("fields").contains(field)) << field;
  }
  // The critic never rewrites the first-pass parse.
  EXPECT_EQ(record.parsed.aggressiveness_score, 2);  // base 3 shifted -1
}

TEST(Rows, FromRecordFailurePolicy) {
  runner::TrialRecord record;
  record.spec.trial_id = "p1_v_CONTROL_m_BASELINE_t0.0_r1";
  record.spec.condition_code = "CONTROL";
  record.domain = "cardiology";
  record.response.api_success = false;
  record.response.error_detail = "boom";

  const auto row = runner::row_from_record(record);
  EXPECT_FALSE(row.api_success);
  EXPECT_FALSE(row.parse_success);
  EXPECT_EQ(row.parse_method, "failed");
  EXPECT_FALSE(row.aggressiveness_score.has_value());
  EXPECT_FALSE(row.patient_values_acknowledged.has_value());
  EXPECT_TRUE(row.primary_recommendation.empty());
  EXPECT_EQ(row.dimension, "control");

  record.spec.condition_code = "SOMETHING_ELSE";
  const auto unknown = runner::row_from_record(record);
  EXPECT_EQ(unknown.dimension, "");
  EXPECT_EQ(unknown.pole, "");
}

TEST(Rows, CsvRoundTrip) {
  std::vector<runner::TrialRow> rows;
  testsupport::RowOpts opts;
  opts.condition = "QOL_PLUS";
  opts.aggr = 2;
  rows.push_back(testsupport::make_row(opts));
  testsupport::RowOpts failed;
  failed.condition = "RISK_PLUS";
  failed.api_success = false;
  rows.push_back(testsupport::make_row(failed));
  // Values that stress CSV quoting.
  rows[0].primary_recommendation = "Start \"low and slow\", then titrate";
  rows[0].reasoning = "line one\nline two, with comma";

  const std::string text = runner::rows_to_csv(rows);
  const auto header_end = text.find('\n');
  EXPECT_EQ(text.substr(0, header_end),
            "trial_id,phase,vignette_id,domain,condition_code,dimension,pole,model_name,"
            "mitigation,temperature,repetition,latency_ms,input_tokens,output_tokens,"
            "api_success,parse_success,parse_method,aggressiveness_score,risk_level,"
            "number_of_options_presented,patient_values_acknowledged,"
            "patient_values_influenced_recommendation,cost_considerations_mentioned,"
            "primary_recommendation,reasoning");

  const auto back = runner::rows_from_csv_text(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].trial_id, rows[0].trial_id);
  EXPECT_EQ(back[0].aggressiveness_score, 2);
  EXPECT_EQ(back[0].primary_recommendation, "Start \"low and slow\", then titrate");
  EXPECT_EQ(back[0].reasoning, "line one\nline two, with comma");
  EXPECT_DOUBLE_EQ(back[0].temperature, 0.0);
  EXPECT_FALSE(back[1].parse_success);
  EXPECT_FALSE(back[1].aggressiveness_score.has_value());
  EXPECT_FALSE(back[1].cost_considerations_mentioned.has_value());

  EXPECT_THROW(runner::rows_from_csv_text("a,b,c\n1,2,3\n"), std::runtime_error);
}

TEST(Jsonl, LoadCompleted) {
  const fs::path dir = testsupport::fresh_dir("runner_jsonl");
  const auto plan = runner::build_plan(1, {"vig_card"}, {"CONTROL", "QOL_PLUS"}, {"gpt-5.2"},
                                       {"BASELINE"}, {0.0}, 1);
  const std::string hash = runner::plan_hash(plan);

  // Missing file: nothing completed yet.
  EXPECT_TRUE(runner::load_completed_jsonl((dir / "absent.jsonl").string(), hash).empty());

  runner::TrialRecord record;
  record.spec.trial_id = plan[0].trial_id;
  record.spec.condition_code = "CONTROL";
  record.response.api_success = true;

  const fs::path good = dir / "good.jsonl";
  {
    std::ofstream out(good);
    out << runner::jsonl_header_line(plan, 1) << "\n";
    out << runner::record_to_json(record).dump() << "\n";
    out << "{\"trial_id\": \"p1_trunc";  // interrupted mid-write
  }
  const auto completed = runner::load_completed_jsonl(good.string(), hash);
  ASSERT_EQ(completed.size(), 1u);
  EXPECT_TRUE(completed.count(plan[0].trial_id));

  EXPECT_THROW(runner::load_completed_jsonl(good.string(), "deadbeef"), runner::PlanMismatch);
}

TEST(Execute, SyntheticPhase1) {
  const fs::path dir = testsupport::fresh_dir("runner_phase1");
  const auto run = testsupport::run_synthetic_phase(1, dir.string(), "20260101_000000", 2);
  EXPECT_EQ(run.result.records.size(), 104u);
  EXPECT_EQ(run.result.rows.size(), 104u);
  EXPECT_EQ(run.result.executed, 104);
  EXPECT_EQ(run.result.skipped, 0);
  EXPECT_EQ(fs::path(run.result.csv_path).filename().string(),
            "values_phase1_20260101_000000.csv");
  EXPECT_EQ(fs::path(run.result.jsonl_path).filename().string(),
            "values_phase1_20260101_000000.jsonl");
  EXPECT_TRUE(fs::exists(run.result.csv_path));

  // Rows come back in plan order regardless of completion order.
  const auto plan = runner::build_plan(1, run.vignette_ids, protocol::condition_codes(),
                                       gateway::default_model_labels(), {"BASELINE"}, {0.0}, 1);
  for (size_t i = 0; i < plan.size(); ++i) {
    EXPECT_EQ(run.result.rows[i].trial_id, plan[i].trial_id) << i;
  }
  for (const auto& row : run.result.rows) {
    EXPECT_TRUE(row.api_success);
    EXPECT_TRUE(row.parse_success);
  }
}

TEST(Execute, ResumeSkipsCompletedTrials) {
  const fs::path dir = testsupport::fresh_dir("runner_resume");
  const auto first = testsupport::run_synthetic_phase(1, dir.string(), "20260101_000000", 2);
  ASSERT_EQ(first.result.executed, 104);
  const std::string csv_before = slurp(first.result.csv_path);

  // Re-run the identical plan against the same JSONL: everything is reused.
  const auto card = testsupport::make_vignette(corpus::Domain::Cardiology, "vig_card");
  const auto onc = testsupport::make_vignette(corpus::Domain::Oncology, "vig_onc");
  std::map<std::string, corpus::Vignette> by_id = {{"vig_card", card}, {"vig_onc", onc}};
  auto gw = synthetic_gateway(gateway::default_model_labels());
  const auto plan = runner::build_plan(1, {"vig_card", "vig_onc"}, protocol::condition_codes(),
                                       gateway::default_model_labels(), {"BASELINE"}, {0.0}, 1);
  runner::RunOptions options;
  options.phase = 1;
  options.results_dir = dir.string();
  options.run_stamp = "20260101_000000";
  options.resume = true;
  const auto second = runner::execute_plan(plan, by_id, *gw, options);
  EXPECT_EQ(second.executed, 0);
  EXPECT_EQ(second.skipped, 104);
  EXPECT_EQ(slurp(second.csv_path), csv_before);

  // A different plan against the same file is refused.
  const auto smaller = runner::build_plan(1, {"vig_card"}, protocol::condition_codes(),
                                          gateway::default_model_labels(), {"BASELINE"}, {0.0}, 1);
  runner::RunOptions mismatched = options;
  mismatched.resume_jsonl = second.jsonl_path;
  EXPECT_THROW(runner::execute_plan(smaller, by_id, *gw, mismatched), runner::PlanMismatch);
}

TEST(Execute, PlanPrevalidation) {
  auto gw = synthetic_gateway({"gpt-5.2"});
  const auto card = testsupport::make_vignette(corpus::Domain::Cardiology, "vig_card");
  std::map<std::string, corpus::Vignette> by_id = {{"vig_card", card}};
  runner::RunOptions options;
  options.results_dir = testsupport::fresh_dir("runner_prevalidate").string();

  EXPECT_THROW(runner::execute_plan({}, by_id, *gw, options), runner::EmptyPlan);

  auto plan = runner::build_plan(1, {"vig_other"}, {"CONTROL"}, {"gpt-5.2"}, {"BASELINE"}, {0.0}, 1);
  EXPECT_THROW(runner::execute_plan(plan, by_id, *gw, options), std::invalid_argument);

  plan = runner::build_plan(1, {"vig_card"}, {"CONTROL"}, {"gemini-3-pro"}, {"BASELINE"}, {0.0}, 1);
  EXPECT_THROW(runner::execute_plan(plan, by_id, *gw, options), std::invalid_argument);
}

TEST(Execute, CsvBytesIndependentOfWorkerThreads) {
  const fs::path dir_a = testsupport::fresh_dir("runner_workers_1");
  const fs::path dir_b = testsupport::fresh_dir("runner_workers_3");
  const auto serial = testsupport::run_synthetic_phase(2, dir_a.string(), "20260101_000000", 1, 1);
  const auto parallel = testsupport::run_synthetic_phase(2, dir_b.string(), "20260101_000000", 3, 3);
  EXPECT_EQ(serial.result.records.size(), 78u);
  EXPECT_EQ(slurp(serial.result.csv_path), slurp(parallel.result.csv_path));
}
