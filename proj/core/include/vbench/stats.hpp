#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbench/runner.hpp"

namespace vbench::stats {

struct SingularDesign : std::runtime_error {
  explicit SingularDesign(const std::string& what, std::vector<std::string> columns = {})
      : std::runtime_error(what), offending_columns(std::move(columns)) {}
  std::vector<std::string> offending_columns;
};

struct ZeroVariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct MixedModelFit {
  std::vector<Coefficient> coefficients;
  double sigma_u2 = 0.0;  // random-intercept variance
  double sigma_e2 = 0.0;  // residual variance
  double psi = 0.0;       // sigma_u2 / sigma_e2
  double log_likelihood = 0.0;
  double aic = 0.0;  // 2k - 2*loglik, k = fixed effects + 2 variance parameters
  double bic = 0.0;  // k*ln(n) - 2*loglik
  bool boundary_flag = false;  // variance ratio pinned at zero
  int n_obs = 0;
  int n_groups = 0;
};

// Random-intercept regression input: y[i] ~ X[i] . beta + u[group[i]] + e[i].
struct RegressionData {
  std::vector<double> y;
  std::vector<std::vector<double>> X;  // one predictor row per observation
  std::vector<int> group;              // group index per observation, 0-based
  std::vector<std::string> names;      // one per predictor column
};

// Maximum-likelihood fit profiled over the variance ratio (golden-section on
// [0, 1e6], tolerance 1e-8, at most 200 iterations). Throws SingularDesign on
// rank-deficient X or when n <= number of columns.
MixedModelFit fit_random_intercept(const RegressionData& data);

// Dummy-coded design over parsed rows: aggressiveness ~ condition + model +
// domain (+ condition x model and condition x domain when
// include_interactions), random intercept per vignette. Reference levels:
// AUTONOMY_MINUS, claude-4.5-sonnet, cardiology; the first present level
// substitutes when a reference is absent.
RegressionData build_design(const std::vector<runner::TrialRow>& rows,
                            bool include_interactions);
MixedModelFit fit_mixed_model(const std::vector<runner::TrialRow>& rows,
                              bool include_interactions);

// alpha / k. Throws std::invalid_argument when k < 1.
double bonferroni_threshold(double alpha, int k);

struct WilcoxonResult {
  int n_pairs = 0;
  int n_nonzero = 0;
  double w = 0.0;  // sum of positive ranks (midranks for ties)
  double p_exact = 1.0;
  double p_bonferroni = 1.0;
  bool significant = false;
  double mean_diff = 0.0;  // over all pairs, zeros included
};

// Exact two-sided signed-rank test: zeros dropped, midranks for tied
// magnitudes, p = min(1, 2*min(P(W<=obs), P(W>=obs))) by full sign
// enumeration. All-zero input yields p = 1 by convention. Throws
// std::invalid_argument for more than 25 non-zero differences.
WilcoxonResult wilcoxon_exact(const std::vector<double>& diffs, int k_comparisons = 1,
                              double alpha = 0.05);

// Classic pooled-standard-deviation effect size. Returns 0 when the means are
// equal; throws ZeroVariance when they differ but the pooled SD is 0 (or
// there are too few observations to form it).
double cohens_d(const std::vector<double>& group_a, const std::vector<double>& group_b);

struct EffectSize {
  std::string model_label;
  std::string condition_code;
  std::optional<double> d;
  int n_condition = 0;
  int n_control = 0;
  bool caution = false;  // a group has fewer than two observations
  std::string gap;       // reason when d is missing
};

// Condition-vs-control effect sizes over parsed rows, one per non-control
// condition in catalog order.
std::vector<EffectSize> effect_sizes(const std::vector<runner::TrialRow>& rows,
                                     const std::string& model);

}  // namespace vbench::stats
