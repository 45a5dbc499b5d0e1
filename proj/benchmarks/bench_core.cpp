// Microbenchmarks for the per-trial hot paths (redaction, response parsing)
// and the analysis batch steps (shift aggregation, exact signed-rank
// enumeration, profiled model fit).

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "vbench/corpus.hpp"
#include "vbench/metrics.hpp"
#include "vbench/parser.hpp"
#include "vbench/protocol.hpp"
#include "vbench/runner.hpp"
#include "vbench/stats.hpp"

using namespace vbench;

namespace {

runner::TrialRow bench_row(const std::string& model, const std::string& condition,
                           const std::string& vignette, const std::string& domain, int score) {
  runner::TrialRow row;
  row.phase = 1;
  row.vignette_id = vignette;
  row.domain = domain;
  row.condition_code = condition;
  const auto& c = protocol::condition_by_code(condition);
  row.dimension = protocol::dimension_token(c.dimension);
  row.pole = protocol::pole_token(c.pole);
  row.model_name = model;
  row.mitigation = "BASELINE";
  row.repetition = 1;
  row.api_success = true;
  row.parse_success = true;
  row.parse_method = "direct";
  row.aggressiveness_score = score;
  row.risk_level = score;
  row.patient_values_acknowledged = true;
  row.patient_values_influenced_recommendation = condition != "CONTROL";
  return row;
}

// Full study shape: 2 vignettes x 13 conditions x 4 models, unit shifts.
std::vector<runner::TrialRow> study_rows() {
  const std::vector<std::string> models = {"gpt-5.2", "claude-4.5-sonnet", "gemini-3-pro",
                                           "deepseek-v1-ollama"};
  std::vector<runner::TrialRow> rows;
  for (const auto& [vig, domain] :
       std::vector<std::pair<std::string, std::string>>{{"vig_card", "cardiology"},
                                                        {"vig_onc", "oncology"}}) {
    for (const auto& condition : protocol::condition_catalog()) {
      for (const auto& model : models) {
        int score = 3 + protocol::expected_sign(condition.expected);
        rows.push_back(bench_row(model, condition.code, vig, domain, score));
      }
    }
  }
  return rows;
}

const std::string kNote =
    "Patient is a 67 year old female. Oncology follow-up for metastatic carcinoma; "
    "chemotherapy discussed. We reviewed options and alternatives; she prefers the least "
    "disruptive plan and asked about risks and benefits. Shared decision making documented. "
    "SSN 123-45-6789. Call (312) 555-0142 or 555-0199, email jane.doe@example.org. Seen on "
    "03/14/2024 and again on 2024-07-02. MRN 10442871.";

const std::string kCleanReply =
    "{\"primary_recommendation\":\"Option A with monitoring\",\"alternatives\":[\"Option B\"],"
    "\"aggressiveness_score\":3,\"risk_level\":2,\"number_of_options_presented\":3,"
    "\"patient_values_acknowledged\":true,\"patient_values_influenced_recommendation\":false,"
    "\"cost_considerations_mentioned\":false,\"reasoning\":\"Stable disease, watchful waiting "
    "is defensible given the stated preference for low treatment burden.\"}";

void BM_RedactPhi(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(corpus::redact_phi(kNote));
  }
}
BENCHMARK(BM_RedactPhi);

void BM_ParseDirect(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(parser::parse_response(kCleanReply));
  }
}
BENCHMARK(BM_ParseDirect);

void BM_ParseFallback(benchmark::State& state) {
  const std::string prose = "Considering the goals of care first.\n\n" + kCleanReply;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parser::parse_response(prose));
  }
}
BENCHMARK(BM_ParseFallback);

void BM_MeanVsi(benchmark::State& state) {
  const auto rows = study_rows();
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::mean_vsi(rows, "gpt-5.2"));
  }
}
BENCHMARK(BM_MeanVsi);

void BM_WilcoxonExact(benchmark::State& state) {
  std::vector<double> diffs;
  for (int i = 0; i < state.range(0); ++i) {
    diffs.push_back((i % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.5 * (i % 5)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::wilcoxon_exact(diffs));
  }
}
BENCHMARK(BM_WilcoxonExact)->Arg(5)->Arg(10)->Arg(15)->Arg(20);

void BM_MixedModelFit(benchmark::State& state) {
  const auto rows = study_rows();
  for (auto _ : state) {
    benchmark::DoNotOptimize(stats::fit_mixed_model(rows, false));
  }
}
BENCHMARK(BM_MixedModelFit);

}  // namespace

BENCHMARK_MAIN();
