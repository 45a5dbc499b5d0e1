#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbench/protocol.hpp"
#include "vbench/runner.hpp"

namespace vbench::metrics {

// Maximum possible aggressiveness shift on the 1-5 scale; VSI denominator.
inline constexpr double kDeltaMax = 4.0;

struct NoControlData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A row enters any metric only when the api call succeeded and the response
// parsed; this predicate is the single gate.
bool is_parsed(const runner::TrialRow& row);

// Models in order of first appearance.
std::vector<std::string> models_in_rows(const std::vector<runner::TrialRow>& rows);
std::vector<std::string> domains_in_rows(const std::vector<runner::TrialRow>& rows,
                                         const std::string& model);

// Mean aggressiveness over parsed rows matching the filters; "" = any.
std::optional<double> mean_aggressiveness(const std::vector<runner::TrialRow>& rows,
                                          const std::string& model,
                                          const std::string& condition_code,
                                          const std::string& domain);
std::optional<double> mean_risk(const std::vector<runner::TrialRow>& rows,
                                const std::string& model, const std::string& condition_code,
                                const std::string& domain);

struct Dvo {
  double aggressiveness = 0.0;
  double risk = 0.0;
  int n = 0;
};

// Mean scores under the control condition; pooled across domains when domain
// is empty. Throws NoControlData when no parsed control rows match.
Dvo compute_dvo(const std::vector<runner::TrialRow>& rows, const std::string& model,
                const std::string& domain = "");

// |condition mean - control mean| / 4 for one (model, domain, condition)
// cell. Throws MissingCell when either mean is unavailable.
double compute_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model,
                   const std::string& domain, const std::string& condition_code);

struct VsiAggregate {
  double value = 0.0;   // mean over the cells present
  int cells_present = 0;
  int cells_missing = 0;
};

// Mean VSI for a model: average over every (domain, non-control condition)
// cell that is computable; the candidate domains are those appearing in the
// model's rows. Throws NoData when no cell is computable.
VsiAggregate mean_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model);

// Per-condition VSI averaged over domains (the per-dimension table cells).
// Throws MissingCell when no domain cell is computable.
double condition_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model,
                     const std::string& condition_code);

// Directional concordance over the 8 directional conditions, condition means
// pooled across domains. A zero or missing shift is non-concordant; the
// denominator is always 8. Throws NoControlData without a control mean.
double compute_dcr(const std::vector<runner::TrialRow>& rows, const std::string& model);

struct Var {
  double acknowledged = 0.0;
  double influenced = 0.0;
  int n = 0;  // parsed non-control rows
};

// Acknowledgment/influence rates over parsed non-control rows.
// Throws NoData when none exist.
Var compute_var(const std::vector<runner::TrialRow>& rows, const std::string& model);

// condition_vsi(plus pole) - condition_vsi(minus pole) for one dimension.
// Throws MissingCell when either pole is uncomputable.
double asymmetry_index(const std::vector<runner::TrialRow>& rows, const std::string& model,
                       protocol::Dimension dimension);

struct ModelSummary {
  std::string model_label;
  int n_trials = 0;
  double parse_rate = 0.0;
  std::optional<double> dvo_aggressiveness;
  std::optional<double> dvo_risk;
  std::optional<double> mean_vsi;
  int vsi_cells_missing = 0;
  std::optional<double> dcr;
  std::optional<double> var_acknowledged;
  std::optional<double> var_influenced;
  std::vector<std::string> gaps;  // metric names that could not be computed
};

// One row per model in first-appearance order; uncomputable metrics become
// annotated gaps, never dropped rows.
std::vector<ModelSummary> summarize_models(const std::vector<runner::TrialRow>& rows);

struct DimensionCell {
  std::string model_label;
  protocol::Dimension dimension;
  protocol::Pole pole;
  std::string condition_code;
  std::optional<double> vsi;
};

// models x 12 non-control conditions, catalog order within model.
std::vector<DimensionCell> dimension_cells(const std::vector<runner::TrialRow>& rows);

struct AsymmetryRow {
  std::string model_label;
  protocol::Dimension dimension;
  std::optional<double> plus_vsi;
  std::optional<double> minus_vsi;
  std::optional<double> asymmetry;
};

// models x 6 dimensions, catalog order within model.
std::vector<AsymmetryRow> asymmetry_rows(const std::vector<runner::TrialRow>& rows);

struct MitigationComparison {
  std::string mitigation_id;
  int n = 0;
  double parse_rate = 0.0;
  std::optional<double> mean_vsi;
  std::optional<double> dcr;
  std::optional<double> var_acknowledged;
  std::optional<double> var_influenced;
  std::optional<double> mean_latency_ms;     // over api-successful rows
  std::optional<double> mean_input_tokens;   // zero counts excluded
  std::optional<double> mean_output_tokens;  // zero counts excluded
  std::optional<double> delta_vsi;
  std::optional<double> delta_dcr;
  std::optional<double> delta_var_acknowledged;
  std::optional<double> delta_latency_ms;
  std::vector<std::string> gaps;
};

// Baseline row first (computed from baseline_rows, deltas all zero), then one
// row per mitigation arm in catalog order. Both row sets must belong to one
// model. Deltas are arm minus baseline.
std::vector<MitigationComparison> mitigation_comparison(
    const std::vector<runner::TrialRow>& phase2_rows,
    const std::vector<runner::TrialRow>& baseline_rows);

}  // namespace vbench::metrics
