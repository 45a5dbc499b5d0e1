#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vbench/metrics.hpp"
#include "vbench/runner.hpp"
#include "vbench/stats.hpp"

namespace vbench::artifacts {

struct SchemaMismatch : std::runtime_error {
  SchemaMismatch(const std::string& what, std::vector<std::string> missing)
      : std::runtime_error(what), missing_columns(std::move(missing)) {}
  std::vector<std::string> missing_columns;
};

// Trial CSV loader that names the missing columns instead of failing opaquely.
std::vector<runner::TrialRow> load_rows_checked(const std::string& csv_path);

// Phase-1 rows standing in for the phase-2 baseline arm: same model,
// restricted to the vignettes the phase-2 rows cover.
std::vector<runner::TrialRow> baseline_rows_for_phase2(
    const std::vector<runner::TrialRow>& phase1_rows,
    const std::vector<runner::TrialRow>& phase2_rows, const std::string& phase2_model);

// Matched-pair differences (arm minus baseline) over (vignette, condition)
// cells where both sides parsed, condition catalog order.
std::vector<double> paired_diffs(const std::vector<runner::TrialRow>& arm_rows,
                                 const std::vector<runner::TrialRow>& baseline_rows);

// Table documents. Every float is rendered with 3 decimals, half-to-even;
// uncomputable values render as empty fields.
std::string phase1_model_summary_csv(const std::vector<runner::TrialRow>& rows);
std::string dvo_by_domain_csv(const std::vector<runner::TrialRow>& rows);
std::string per_dimension_vsi_csv(const std::vector<runner::TrialRow>& rows);
std::string asymmetry_index_csv(const std::vector<runner::TrialRow>& rows);
std::string mitigation_comparison_csv(const std::vector<runner::TrialRow>& phase2_rows,
                                      const std::vector<runner::TrialRow>& baseline_rows);
std::string mixed_effects_results_csv(const stats::MixedModelFit& fit);
std::string mixed_effects_info_json(const stats::MixedModelFit& fit);
std::string wilcoxon_csv(const std::vector<runner::TrialRow>& phase2_rows,
                         const std::vector<runner::TrialRow>& baseline_rows);
std::string effect_sizes_csv(const std::vector<runner::TrialRow>& rows);

// Figure data and companion static renders.
std::string fig1_heatmap_csv(const std::vector<runner::TrialRow>& rows);
std::string fig1_heatmap_svg(const std::vector<runner::TrialRow>& rows);
std::string fig2_dcr_csv(const std::vector<runner::TrialRow>& rows);
std::string fig2_dcr_svg(const std::vector<runner::TrialRow>& rows);
std::string fig3_delta_vsi_csv(const std::vector<runner::TrialRow>& phase2_rows,
                               const std::vector<runner::TrialRow>& baseline_rows);
std::string fig3_delta_vsi_svg(const std::vector<runner::TrialRow>& phase2_rows,
                               const std::vector<runner::TrialRow>& baseline_rows);
std::string figs1_domain_shift_csv(const std::vector<runner::TrialRow>& rows);
std::string figs1_domain_shift_svg(const std::vector<runner::TrialRow>& rows);

struct ManifestEntry {
  std::string relative_path;
  std::string sha256_full;   // 64 hex
  std::string sha256_short;  // first 12 hex
};

// Hashes root-relative files, sorted by path.
std::vector<ManifestEntry> build_manifest(const std::string& root,
                                          const std::vector<std::string>& relative_paths);
// checksums_sha256.txt (short) and checksums_sha256_full.txt under root.
void write_manifest_files(const std::string& root, const std::vector<ManifestEntry>& entries);

struct ArtifactConfig {
  std::string phase1_csv;
  std::string phase2_csv;
  std::string tables_dir = "tables";
  std::string figures_dir = "figures";
  std::string phase2_model = "gpt-5.2";
};

struct ArtifactSet {
  std::string root;                 // manifest root: parent of tables_dir
  std::vector<std::string> files;   // root-relative paths, sorted
  std::string manifest_short_path;
  std::string manifest_full_path;
};

// Writes all tables, figure data files and SVG renders, then the checksum
// manifests. Deterministic: identical inputs produce identical bytes.
ArtifactSet build_artifacts(const ArtifactConfig& config);

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> failures;
  std::vector<std::string> checks;  // human-readable pass lines
};

// Recomputes the full-hash manifest under root and cross-checks the short one.
VerifyReport verify_static(const std::string& root);

// Asserts the published run shape on the newest phase CSVs in results_dir:
// 104/78 rows, phase-1 api_success mean 1.0 within 1e-12, exact model sets.
VerifyReport verify_integrity(const std::string& results_dir,
                              const std::vector<std::string>& phase1_models,
                              const std::string& phase2_model);

}  // namespace vbench::artifacts
