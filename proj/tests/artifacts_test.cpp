#include "vbench/artifacts.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vbench/runner.hpp"
#include "vbench/util/sha256.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
namespace artifacts = vbench::artifacts;
namespace runner = vbench::runner;
using nlohmann::json;
using testsupport::RowOpts;
using testsupport::make_row;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

runner::TrialRow simple_row(const std::string& model, const std::string& condition, int score,
                            const std::string& vignette = "vig_card",
                            const std::string& domain = "cardiology") {
  RowOpts opts;
  opts.model = model;
  opts.condition = condition;
  opts.vignette = vignette;
  opts.domain = domain;
  opts.aggr = score;
  opts.risk = score;
  return make_row(opts);
}

runner::TrialRow failed_row(const std::string& model) {
  RowOpts opts;
  opts.model = model;
  opts.api_success = false;
  opts.parse_success = false;
  opts.aggr.reset();
  opts.risk.reset();
  opts.acknowledged.reset();
  opts.influenced.reset();
  return make_row(opts);
}

}  // namespace

TEST(LoadRowsChecked, NamesMissingColumnsInOrder) {
  auto dir = testsupport::fresh_dir("artifacts_load");
  const auto path = dir / "bad.csv";
  spit(path, "trial_id,phase,model_name\nx,1,gpt-5.2\n");
  try {
    artifacts::load_rows_checked(path.string());
    FAIL() << "expected SchemaMismatch";
  } catch (const artifacts::SchemaMismatch& e) {
    ASSERT_FALSE(e.missing_columns.empty());
    const auto& expected = runner::trial_csv_columns();
    // missing columns reported in canonical column order
    std::vector<std::string> want;
    for (const auto& col : expected) {
      if (col != "trial_id" && col != "phase" && col != "model_name") want.push_back(col);
    }
    EXPECT_EQ(e.missing_columns, want);
    EXPECT_NE(std::string(e.what()).find("missing trial columns"), std::string::npos);
  }
}

TEST(LoadRowsChecked, RejectsReorderedHeader) {
  auto dir = testsupport::fresh_dir("artifacts_load_order");
  std::vector<runner::TrialRow> rows = {simple_row("gpt-5.2", "CONTROL", 3)};
  const auto good = dir / "good.csv";
  runner::write_trials_csv(good.string(), rows);

  auto text = slurp(good);
  const auto eol = text.find('\n');
  std::string header = text.substr(0, eol);
  const auto comma = header.find(',');
  // swap the first two header fields, keep every data byte
  const auto second_end = header.find(',', comma + 1);
  std::string swapped = header.substr(comma + 1, second_end - comma - 1) + "," +
                        header.substr(0, comma) + header.substr(second_end);
  const auto bad = dir / "swapped.csv";
  spit(bad, swapped + text.substr(eol));

  try {
    artifacts::load_rows_checked(bad.string());
    FAIL() << "expected SchemaMismatch";
  } catch (const artifacts::SchemaMismatch& e) {
    EXPECT_TRUE(e.missing_columns.empty());
    EXPECT_NE(std::string(e.what()).find("non-canonical order"), std::string::npos);
  }

  auto loaded = artifacts::load_rows_checked(good.string());
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].model_name, "gpt-5.2");
}

TEST(BaselineRows, FiltersModelVignetteAndArm) {
  std::vector<runner::TrialRow> phase1;
  phase1.push_back(simple_row("gpt-5.2", "CONTROL", 3, "vig_card"));
  phase1.push_back(simple_row("gpt-5.2", "CONTROL", 4, "vig_onc", "oncology"));
  phase1.push_back(simple_row("claude-4.5-sonnet", "CONTROL", 2, "vig_card"));
  auto stray = simple_row("gpt-5.2", "CONTROL", 5, "vig_card");
  stray.mitigation = "VEP";
  phase1.push_back(stray);

  std::vector<runner::TrialRow> phase2 = {simple_row("gpt-5.2", "QOL_PLUS", 2, "vig_card")};
  phase2.back().mitigation = "VEP";
  phase2.back().phase = 2;

  auto baseline = artifacts::baseline_rows_for_phase2(phase1, phase2, "gpt-5.2");
  ASSERT_EQ(baseline.size(), 1u);
  EXPECT_EQ(baseline[0].model_name, "gpt-5.2");
  EXPECT_EQ(baseline[0].vignette_id, "vig_card");
  EXPECT_EQ(baseline[0].mitigation, "BASELINE");
  EXPECT_EQ(baseline[0].aggressiveness_score, 3);
}

TEST(PairedDiffs, CellMeansInCatalogOrderDropUnmatched) {
  std::vector<runner::TrialRow> arm;
  arm.push_back(simple_row("gpt-5.2", "CONTROL", 4));
  arm.push_back(simple_row("gpt-5.2", "CONTROL", 5));
  arm.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));
  arm.push_back(simple_row("gpt-5.2", "RISK_PLUS", 5));  // no baseline cell: dropped
  arm.push_back(failed_row("gpt-5.2"));                  // unparsed: never enters a mean

  std::vector<runner::TrialRow> baseline;
  baseline.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  baseline.push_back(simple_row("gpt-5.2", "QOL_PLUS", 4));
  baseline.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));
  // baseline-only vignette contributes nothing: pairs follow arm vignettes
  baseline.push_back(simple_row("gpt-5.2", "RISK_PLUS", 5, "vig_onc", "oncology"));

  auto diffs = artifacts::paired_diffs(arm, baseline);
  ASSERT_EQ(diffs.size(), 2u);
  EXPECT_DOUBLE_EQ(diffs[0], 1.5);   // CONTROL: 4.5 - 3
  EXPECT_DOUBLE_EQ(diffs[1], -1.0);  // QOL_PLUS: 2 - 3
}

TEST(Tables, ModelSummaryRendersGapsAsEmptyFields) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));
  rows.push_back(failed_row("gemini-3-pro"));

  const std::string expected =
      "model,n_trials,parse_rate,dvo_aggressiveness,dvo_risk,mean_vsi,dcr,"
      "var_acknowledged,var_influenced\n"
      "gpt-5.2,3,1.000,3.000,3.000,0.250,0.125,1.000,1.000\n"
      "gemini-3-pro,1,0.000,,,,,,\n";
  EXPECT_EQ(artifacts::phase1_model_summary_csv(rows), expected);
}

TEST(Tables, DvoByDomainMarksMissingControls) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "QOL_PLUS", 5, "vig_onc", "oncology"));
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 4));

  const std::string expected =
      "model,domain,n_control,dvo_aggressiveness,dvo_risk\n"
      "gpt-5.2,oncology,0,,\n"
      "gpt-5.2,cardiology,2,3.500,3.500\n";
  EXPECT_EQ(artifacts::dvo_by_domain_csv(rows), expected);
}

TEST(Tables, DimensionVsiAndAsymmetry) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "AUTONOMY_PLUS", 4));

  auto vsi_csv = artifacts::per_dimension_vsi_csv(rows);
  std::istringstream in(vsi_csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "model,dimension,pole,condition_code,vsi");
  std::getline(in, line);
  EXPECT_EQ(line, "gpt-5.2,autonomy,plus,AUTONOMY_PLUS,0.250");
  std::getline(in, line);
  EXPECT_EQ(line, "gpt-5.2,autonomy,minus,AUTONOMY_MINUS,");
  int data_lines = 2;
  while (std::getline(in, line)) {
    if (!line.empty()) ++data_lines;
  }
  EXPECT_EQ(data_lines, 12);  // every directional condition listed

  auto asym_csv = artifacts::asymmetry_index_csv(rows);
  std::istringstream ain(asym_csv);
  std::getline(ain, line);
  EXPECT_EQ(line, "model,dimension,vsi_plus,vsi_minus,asymmetry");
  std::getline(ain, line);
  EXPECT_EQ(line, "gpt-5.2,autonomy,0.250,,");
}

TEST(Tables, MixedEffectsRendering) {
  vbench::stats::MixedModelFit fit;
  vbench::stats::Coefficient c;
  c.name = "Intercept";
  c.estimate = 2.3851;
  c.std_error = 0.199;
  c.z = 11.986;
  c.p = 0.00004;
  c.ci_low = 1.9951;
  c.ci_high = 2.7751;
  fit.coefficients.push_back(c);
  fit.n_obs = 104;
  fit.n_groups = 2;
  fit.sigma_u2 = 0.0;
  fit.sigma_e2 = 0.15395;
  fit.psi = 0.0;
  fit.log_likelihood = -70.7726;
  fit.aic = 179.5452;
  fit.bic = 229.0391;
  fit.boundary_flag = true;

  const std::string csv = artifacts::mixed_effects_results_csv(fit);
  EXPECT_EQ(csv,
            "term,estimate,std_error,z,p_value,ci_low,ci_high\n"
            "Intercept,2.385,0.199,11.986,0.000,1.995,2.775\n");

  const std::string info_text = artifacts::mixed_effects_info_json(fit);
  ASSERT_FALSE(info_text.empty());
  EXPECT_EQ(info_text.back(), '\n');
  json info = json::parse(info_text);
  EXPECT_EQ(info["n_obs"], 104);
  EXPECT_EQ(info["n_groups"], 2);
  EXPECT_EQ(info["k"], 3);  // one coefficient + two variance parameters
  EXPECT_DOUBLE_EQ(info["sigma_e2"].get<double>(), 0.154);
  EXPECT_DOUBLE_EQ(info["log_likelihood"].get<double>(), -70.773);
  EXPECT_DOUBLE_EQ(info["aic"].get<double>(), 179.545);
  EXPECT_DOUBLE_EQ(info["bic"].get<double>(), 229.039);
  EXPECT_TRUE(info["boundary_flag"].get<bool>());
  const std::vector<std::string> keys = {"aic",   "bic",   "boundary_flag",  "k",
                                         "n_groups", "n_obs", "log_likelihood", "psi",
                                         "sigma_e2", "sigma_u2"};
  for (const auto& key : keys) EXPECT_TRUE(info.contains(key)) << key;
  EXPECT_EQ(info.size(), keys.size());
}

TEST(Tables, WilcoxonEmptyArmsRenderPlaceholders) {
  auto csv = artifacts::wilcoxon_csv({}, {});
  const std::string expected =
      "mitigation,n_pairs,n_nonzero,w,mean_diff,p_exact,p_bonferroni,significant\n"
      "VEP,0,0,,,,,false\n"
      "MATRIX,0,0,,,,,false\n"
      "CONTRASTIVE,0,0,,,,,false\n"
      "FEW_SHOT,0,0,,,,,false\n"
      "MULTI_AGENT,0,0,,,,,false\n"
      "VIM_SELF_REPORT,0,0,,,,,false\n";
  EXPECT_EQ(csv, expected);
}

TEST(Tables, WilcoxonZeroDiffArm) {
  std::vector<runner::TrialRow> phase2 = {simple_row("gpt-5.2", "CONTROL", 3)};
  phase2[0].mitigation = "VEP";
  phase2[0].phase = 2;
  std::vector<runner::TrialRow> baseline = {simple_row("gpt-5.2", "CONTROL", 3)};

  auto csv = artifacts::wilcoxon_csv(phase2, baseline);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  EXPECT_EQ(line, "VEP,1,0,0.000,0.000,1.000,1.000,false");
}

TEST(Tables, EffectSizesPerModel) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 4));
  rows.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));
  rows.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));

  const std::string expected =
      "model,condition_code,n_condition,n_control,cohens_d,caution,gap\n"
      "gpt-5.2,QOL_PLUS,2,2,-3.000,false,\n";
  EXPECT_EQ(artifacts::effect_sizes_csv(rows), expected);
}

TEST(Figures, HeatmapCsvCoversFullConditionGrid) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "QOL_PLUS", 2));

  auto csv = artifacts::fig1_heatmap_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "model,condition_code,mean_aggressiveness");
  std::vector<std::string> data;
  while (std::getline(in, line)) {
    if (!line.empty()) data.push_back(line);
  }
  ASSERT_EQ(data.size(), 13u);  // one model, every condition
  EXPECT_EQ(data[0], "gpt-5.2,CONTROL,3.000");
  EXPECT_EQ(data[1], "gpt-5.2,AUTONOMY_PLUS,");
  EXPECT_EQ(data[2], "gpt-5.2,AUTONOMY_MINUS,");
  EXPECT_EQ(data[3], "gpt-5.2,QOL_PLUS,2.000");

  auto svg = artifacts::fig1_heatmap_svg(rows);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Figures, DeltaVsiSortedDescendingUnknownLast) {
  std::vector<runner::TrialRow> baseline = {simple_row("gpt-5.2", "CONTROL", 3),
                                            simple_row("gpt-5.2", "QOL_PLUS", 4)};
  std::vector<runner::TrialRow> phase2;
  auto add_arm = [&phase2](const std::string& arm, const std::string& cond, int score) {
    auto row = simple_row("gpt-5.2", cond, score);
    row.mitigation = arm;
    row.phase = 2;
    phase2.push_back(row);
  };
  add_arm("VEP", "CONTROL", 3);
  add_arm("VEP", "QOL_PLUS", 3);     // vsi 0.00, baseline 0.25 -> delta -0.25
  add_arm("MATRIX", "CONTROL", 3);
  add_arm("MATRIX", "QOL_PLUS", 5);  // vsi 0.50 -> delta +0.25

  auto csv = artifacts::fig3_delta_vsi_csv(phase2, baseline);
  const std::string expected =
      "mitigation,delta_vsi\n"
      "MATRIX,0.250\n"
      "VEP,-0.250\n"
      "CONTRASTIVE,\n"
      "FEW_SHOT,\n"
      "MULTI_AGENT,\n"
      "VIM_SELF_REPORT,\n";
  EXPECT_EQ(csv, expected);

  auto svg = artifacts::fig3_delta_vsi_svg(phase2, baseline);
  EXPECT_NE(svg.find("MATRIX"), std::string::npos);
  EXPECT_NE(svg.find("n/a"), std::string::npos);
}

TEST(Figures, DomainShiftRowsSkipUnparsedAndUncontrolled) {
  std::vector<runner::TrialRow> rows;
  rows.push_back(simple_row("gpt-5.2", "CONTROL", 3));
  rows.push_back(simple_row("gpt-5.2", "RISK_PLUS", 5));
  rows.push_back(failed_row("gpt-5.2"));
  // no oncology control: the shift has no reference and is dropped
  rows.push_back(simple_row("gpt-5.2", "RISK_PLUS", 4, "vig_onc", "oncology"));

  const std::string expected =
      "model,domain,condition_code,shift\n"
      "gpt-5.2,cardiology,RISK_PLUS,2.000\n";
  EXPECT_EQ(artifacts::figs1_domain_shift_csv(rows), expected);

  auto svg = artifacts::figs1_domain_shift_svg(rows);
  EXPECT_NE(svg.find("card"), std::string::npos);
}

TEST(Manifest, HashesAndLineFormats) {
  auto dir = testsupport::fresh_dir("artifacts_manifest");
  spit(dir / "b.txt", "beta\n");
  spit(dir / "a.txt", "alpha\n");

  auto entries = artifacts::build_manifest(dir.string(), {"b.txt", "a.txt"});
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].relative_path, "a.txt");  // sorted by path
  EXPECT_EQ(entries[1].relative_path, "b.txt");
  EXPECT_EQ(entries[0].sha256_full, vbench::util::sha256_hex("alpha\n"));
  EXPECT_EQ(entries[0].sha256_short, entries[0].sha256_full.substr(0, 12));
  EXPECT_EQ(entries[0].sha256_full.size(), 64u);

  artifacts::write_manifest_files(dir.string(), entries);
  const std::string short_text = slurp(dir / "checksums_sha256.txt");
  const std::string full_text = slurp(dir / "checksums_sha256_full.txt");
  EXPECT_EQ(short_text, entries[0].sha256_short + "  a.txt\n" + entries[1].sha256_short +
                            "  b.txt\n");
  EXPECT_EQ(full_text,
            entries[0].sha256_full + "  a.txt\n" + entries[1].sha256_full + "  b.txt\n");

  auto report = artifacts::verify_static(dir.string());
  EXPECT_TRUE(report.ok);
  ASSERT_EQ(report.checks.size(), 2u);
  EXPECT_EQ(report.checks[0], "ok a.txt");
}

TEST(VerifyStatic, ReportsEachFailureShape) {
  auto dir = testsupport::fresh_dir("artifacts_verify");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].rfind("missing manifest: ", 0), 0u);
  }

  spit(dir / "a.txt", "alpha\n");
  spit(dir / "b.txt", "beta\n");
  auto entries = artifacts::build_manifest(dir.string(), {"a.txt", "b.txt"});
  artifacts::write_manifest_files(dir.string(), entries);

  // flipped byte -> checksum mismatch naming exactly that file
  spit(dir / "a.txt", "Alpha\n");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0], "checksum mismatch: a.txt");
    ASSERT_EQ(report.checks.size(), 1u);
    EXPECT_EQ(report.checks[0], "ok b.txt");
  }
  spit(dir / "a.txt", "alpha\n");

  // deleted payload -> missing file
  fs::remove(dir / "b.txt");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0], "missing file: b.txt");
  }
  spit(dir / "b.txt", "beta\n");

  // tampered short manifest: unknown file and bad hash
  const std::string good_short = slurp(dir / "checksums_sha256.txt");
  spit(dir / "checksums_sha256.txt",
       entries[0].sha256_short + "  a.txt\n" + "000000000000  ghost.txt\n");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    EXPECT_NE(std::find(report.failures.begin(), report.failures.end(),
                        "short manifest lists unknown file: ghost.txt"),
              report.failures.end());
  }
  spit(dir / "checksums_sha256.txt",
       good_short.substr(0, 6) + "000000" + good_short.substr(12));
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0], "short manifest hash differs: a.txt");
  }
  spit(dir / "checksums_sha256.txt", good_short + "extra\n");  // malformed line ignored
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_TRUE(report.ok);
  }

  fs::remove(dir / "checksums_sha256.txt");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].rfind("missing manifest: ", 0), 0u);
    EXPECT_NE(report.failures[0].find("checksums_sha256.txt"), std::string::npos);
  }

  spit(dir / "checksums_sha256_full.txt", "");
  {
    auto report = artifacts::verify_static(dir.string());
    EXPECT_FALSE(report.ok);
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].rfind("manifest is empty: ", 0), 0u);
  }
}

TEST(BuildArtifacts, ClosureVerifiesAndRebuildsIdentically) {
  auto dir = testsupport::fresh_dir("artifacts_build");
  auto p1 = testsupport::run_synthetic_phase(1, (dir / "results").string(), "20260816_000001", 2);
  auto p2 = testsupport::run_synthetic_phase(2, (dir / "results").string(), "20260816_000002", 2);

  artifacts::ArtifactConfig config;
  config.phase1_csv = p1.result.csv_path;
  config.phase2_csv = p2.result.csv_path;
  config.tables_dir = (dir / "out" / "tables").string();
  config.figures_dir = (dir / "out" / "figures").string();

  auto set = artifacts::build_artifacts(config);
  EXPECT_EQ(set.root, (dir / "out").string());
  ASSERT_EQ(set.files.size(), 17u);
  EXPECT_TRUE(std::is_sorted(set.files.begin(), set.files.end()));
  for (const auto& rel : set.files) {
    EXPECT_TRUE(fs::exists(fs::path(set.root) / rel)) << rel;
    EXPECT_EQ(rel.find("checksums"), std::string::npos) << "manifest listed itself";
  }
  EXPECT_TRUE(fs::exists(set.manifest_short_path));
  EXPECT_TRUE(fs::exists(set.manifest_full_path));

  auto report = artifacts::verify_static(set.root);
  EXPECT_TRUE(report.ok) << (report.failures.empty() ? "" : report.failures[0]);
  EXPECT_EQ(report.checks.size(), set.files.size());

  // second build from the same inputs lands byte-identical
  artifacts::ArtifactConfig again = config;
  again.tables_dir = (dir / "out2" / "tables").string();
  again.figures_dir = (dir / "out2" / "figures").string();
  auto set2 = artifacts::build_artifacts(again);
  EXPECT_EQ(slurp(set.manifest_full_path), slurp(set2.manifest_full_path));
  for (const auto& rel : set.files) {
    EXPECT_EQ(slurp(fs::path(set.root) / rel), slurp(fs::path(set2.root) / rel)) << rel;
  }
}

TEST(VerifyIntegrity, ChecksNewestRunShape) {
  auto dir = testsupport::fresh_dir("artifacts_integrity");
  const auto results = dir / "results";
  auto p1 = testsupport::run_synthetic_phase(1, results.string(), "20260816_000001", 2);
  auto p2 = testsupport::run_synthetic_phase(2, results.string(), "20260816_000002", 2);

  const std::vector<std::string> phase1_models = {"gpt-5.2", "claude-4.5-sonnet", "gemini-3-pro",
                                                  "deepseek-v1-ollama"};
  auto report = artifacts::verify_integrity(results.string(), phase1_models, "gpt-5.2");
  EXPECT_TRUE(report.ok) << (report.failures.empty() ? "" : report.failures[0]);
  bool saw_rows = false;
  for (const auto& line : report.checks) {
    if (line == "phase-1 rows: 104 (expected 104)") saw_rows = true;
  }
  EXPECT_TRUE(saw_rows);

  // a truncated copy with a later stamp becomes the newest and fails the count
  std::istringstream in(slurp(p1.result.csv_path));
  std::string line, truncated;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 105u);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) truncated += lines[i] + "\n";
  spit(results / "values_phase1_20990101_000000.csv", truncated);

  auto tampered = artifacts::verify_integrity(results.string(), phase1_models, "gpt-5.2");
  EXPECT_FALSE(tampered.ok);
  ASSERT_EQ(tampered.failures.size(), 1u);
  EXPECT_EQ(tampered.failures[0], "phase-1 rows: 103 (expected 104)");

  auto missing = artifacts::verify_integrity((dir / "nowhere").string(), phase1_models, "gpt-5.2");
  EXPECT_FALSE(missing.ok);
  ASSERT_EQ(missing.failures.size(), 2u);
  EXPECT_EQ(missing.failures[0].rfind("no phase-1 results csv in ", 0), 0u);
}
