#pragma once

// Shared fixtures and independent oracles. Oracles are deliberately naive
// re-implementations (plain loops, bitmask enumeration, normal equations) so
// library results are checked against something that cannot share a bug.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vbench/corpus.hpp"
#include "vbench/runner.hpp"
#include "vbench/synthetic.hpp"

namespace testsupport {

struct RowOpts {
  std::string model = "gpt-5.2";
  std::string condition = "CONTROL";
  std::string domain = "cardiology";
  std::string vignette = "vig_card";
  std::string mitigation = "BASELINE";
  int phase = 1;
  int repetition = 1;
  std::optional<int> aggr = 3;
  std::optional<int> risk = 3;
  bool api_success = true;
  bool parse_success = true;
  std::optional<bool> acknowledged = true;
  std::optional<bool> influenced = true;
};

vbench::runner::TrialRow make_row(const RowOpts& opts);

// Control rows plus one row per directional condition, shifted by
// delta[code] from a base score of 3. Omitted codes shift by zero.
std::vector<vbench::runner::TrialRow> planted_shift_rows(
    const std::string& model, const std::map<std::string, int>& delta_by_code);

vbench::corpus::Vignette make_vignette(vbench::corpus::Domain domain, const std::string& id);

// Deterministic encounter note with PHI planted in every category the
// redactor covers; index varies domain and signal phrasing.
vbench::corpus::EncounterNote make_phi_note(int index);

struct SyntheticRun {
  vbench::runner::RunResult result;
  std::vector<std::string> vignette_ids;
};

// Full synthetic run: phase 1 over both study vignettes and all four model
// labels, or phase 2 over the first vignette and one model.
SyntheticRun run_synthetic_phase(int phase, const std::string& results_dir,
                                 const std::string& stamp, int max_concurrency,
                                 int worker_threads = 0);

// --- oracles ---

struct WilcoxonOracle {
  int n_nonzero = 0;
  double w = 0.0;
  double p = 1.0;
};

// Midranks over nonzero |diffs|, then the exact two-sided p by bitmask
// enumeration of all 2^m sign assignments.
WilcoxonOracle wilcoxon_oracle(const std::vector<double>& diffs);

// Ordinary least squares via normal equations and Gauss-Jordan elimination.
std::vector<double> ols_oracle(const std::vector<double>& y,
                               const std::vector<std::vector<double>>& x);

// Scratch directory under the system temp root, removed when it existed.
std::filesystem::path fresh_dir(const std::string& name);

}  // namespace testsupport
