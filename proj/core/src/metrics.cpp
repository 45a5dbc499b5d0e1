#include "vbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vbench::metrics {

bool is_parsed(const runner::TrialRow& row) {
  return row.api_success && row.parse_success && row.aggressiveness_score.has_value();
}

std::vector<std::string> models_in_rows(const std::vector<runner::TrialRow>& rows) {
  std::vector<std::string> models;
  for (const auto& r : rows) {
    if (std::find(models.begin(), models.end(), r.model_name) == models.end()) {
      models.push_back(r.model_name);
    }
  }
  return models;
}

std::vector<std::string> domains_in_rows(const std::vector<runner::TrialRow>& rows,
                                         const std::string& model) {
  std::vector<std::string> domains;
  for (const auto& r : rows) {
    if (!model.empty() && r.model_name != model) continue;
    if (std::find(domains.begin(), domains.end(), r.domain) == domains.end()) {
      domains.push_back(r.domain);
    }
  }
  return domains;
}

namespace {

bool row_matches(const runner::TrialRow& r, const std::string& model,
                 const std::string& condition_code, const std::string& domain) {
  return (model.empty() || r.model_name == model) &&
         (condition_code.empty() || r.condition_code == condition_code) &&
         (domain.empty() || r.domain == domain);
}

template <typename Get>
std::optional<double> parsed_mean(const std::vector<runner::TrialRow>& rows,
                                  const std::string& model, const std::string& condition_code,
                                  const std::string& domain, Get get) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (!is_parsed(r) || !row_matches(r, model, condition_code, domain)) continue;
    sum += get(r);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// Non-control conditions appearing in the model's rows, catalog order.
std::vector<std::string> candidate_conditions(const std::vector<runner::TrialRow>& rows,
                                              const std::string& model) {
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (model.empty() || r.model_name == model) seen.insert(r.condition_code);
  }
  std::vector<std::string> out;
  for (const auto& c : protocol::condition_catalog()) {
    if (c.code != "CONTROL" && seen.count(c.code)) out.push_back(c.code);
  }
  return out;
}

}  // namespace

std::optional<double> mean_aggressiveness(const std::vector<runner::TrialRow>& rows,
                                          const std::string& model,
                                          const std::string& condition_code,
                                          const std::string& domain) {
  return parsed_mean(rows, model, condition_code, domain,
                     [](const runner::TrialRow& r) { return double(*r.aggressiveness_score); });
}

std::optional<double> mean_risk(const std::vector<runner::TrialRow>& rows,
                                const std::string& model, const std::string& condition_code,
                                const std::string& domain) {
  return parsed_mean(rows, model, condition_code, domain, [](const runner::TrialRow& r) {
    return r.risk_level ? double(*r.risk_level) : 0.0;
  });
}

Dvo compute_dvo(const std::vector<runner::TrialRow>& rows, const std::string& model,
                const std::string& domain) {
  double aggr_sum = 0.0, risk_sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (!is_parsed(r) || !row_matches(r, model, "CONTROL", domain)) continue;
    aggr_sum += *r.aggressiveness_score;
    risk_sum += r.risk_level.value_or(0);
    ++n;
  }
  if (n == 0) {
    throw NoControlData("no parsed control trials for model '" + model + "' domain '" + domain +
                        "'");
  }
  return Dvo{aggr_sum / n, risk_sum / n, n};
}

double compute_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model,
                   const std::string& domain, const std::string& condition_code) {
  auto cond_mean = mean_aggressiveness(rows, model, condition_code, domain);
  auto ctrl_mean = mean_aggressiveness(rows, model, "CONTROL", domain);
  if (!cond_mean || !ctrl_mean) {
    throw MissingCell("vsi cell uncomputable: model '" + model + "' domain '" + domain +
                      "' condition '" + condition_code + "'");
  }
  return std::abs(*cond_mean - *ctrl_mean) / kDeltaMax;
}

VsiAggregate mean_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model) {
  VsiAggregate agg;
  double sum = 0.0;
  for (const auto& domain : domains_in_rows(rows, model)) {
    for (const auto& code : candidate_conditions(rows, model)) {
      try {
        sum += compute_vsi(rows, model, domain, code);
        ++agg.cells_present;
      } catch (const MissingCell&) {
        ++agg.cells_missing;
      }
    }
  }
  if (agg.cells_present == 0) throw NoData("no computable vsi cells for model '" + model + "'");
  agg.value = sum / agg.cells_present;
  return agg;
}

double condition_vsi(const std::vector<runner::TrialRow>& rows, const std::string& model,
                     const std::string& condition_code) {
  double sum = 0.0;
  int n = 0;
  for (const auto& domain : domains_in_rows(rows, model)) {
    try {
      sum += compute_vsi(rows, model, domain, condition_code);
      ++n;
    } catch (const MissingCell&) {
    }
  }
  if (n == 0) {
    throw MissingCell("condition vsi uncomputable: model '" + model + "' condition '" +
                      condition_code + "'");
  }
  return sum / n;
}

double compute_dcr(const std::vector<runner::TrialRow>& rows, const std::string& model) {
  auto ctrl_mean = mean_aggressiveness(rows, model, "CONTROL", "");
  if (!ctrl_mean) throw NoControlData("no parsed control trials for model '" + model + "'");

  const auto& directional = protocol::directional_condition_codes();
  int concordant = 0;
  for (const auto& code : directional) {
    auto cond_mean = mean_aggressiveness(rows, model, code, "");
    if (!cond_mean) continue;  // missing cell is non-concordant
    double shift = *cond_mean - *ctrl_mean;
    int expected = protocol::expected_sign(protocol::condition_by_code(code).expected);
    if ((shift > 0.0 && expected > 0) || (shift < 0.0 && expected < 0)) ++concordant;
  }
  return double(concordant) / double(directional.size());
}

Var compute_var(const std::vector<runner::TrialRow>& rows, const std::string& model) {
  int n = 0, ack = 0, infl = 0;
  for (const auto& r : rows) {
    if (!is_parsed(r) || r.condition_code == "CONTROL") continue;
    if (!model.empty() && r.model_name != model) continue;
    ++n;
    if (r.patient_values_acknowledged.value_or(false)) ++ack;
    if (r.patient_values_influenced_recommendation.value_or(false)) ++infl;
  }
  if (n == 0) throw NoData("no parsed non-control trials for model '" + model + "'");
  return Var{double(ack) / n, double(infl) / n, n};
}

namespace {

// (dimension, plus code, minus code) triples in catalog order.
std::vector<std::tuple<protocol::Dimension, std::string, std::string>> dimension_poles() {
  std::vector<std::tuple<protocol::Dimension, std::string, std::string>> out;
  for (const auto& c : protocol::condition_catalog()) {
    if (c.pole != protocol::Pole::Plus) continue;
    std::string minus_code;
    for (const auto& m : protocol::condition_catalog()) {
      if (m.dimension == c.dimension && m.pole == protocol::Pole::Minus) minus_code = m.code;
    }
    out.emplace_back(c.dimension, c.code, minus_code);
  }
  return out;
}

}  // namespace

double asymmetry_index(const std::vector<runner::TrialRow>& rows, const std::string& model,
                       protocol::Dimension dimension) {
  for (const auto& [dim, plus_code, minus_code] : dimension_poles()) {
    if (dim != dimension) continue;
    return condition_vsi(rows, model, plus_code) - condition_vsi(rows, model, minus_code);
  }
  throw MissingCell("dimension has no pole pair");
}

std::vector<ModelSummary> summarize_models(const std::vector<runner::TrialRow>& rows) {
  std::vector<ModelSummary> out;
  for (const auto& model : models_in_rows(rows)) {
    ModelSummary s;
    s.model_label = model;
    int parsed = 0;
    for (const auto& r : rows) {
      if (r.model_name != model) continue;
      ++s.n_trials;
      if (is_parsed(r)) ++parsed;
    }
    s.parse_rate = s.n_trials > 0 ? double(parsed) / s.n_trials : 0.0;
    try {
      Dvo dvo = compute_dvo(rows, model);
      s.dvo_aggressiveness = dvo.aggressiveness;
      s.dvo_risk = dvo.risk;
    } catch (const NoControlData&) {
      s.gaps.push_back("dvo");
    }
    try {
      VsiAggregate v = mean_vsi(rows, model);
      s.mean_vsi = v.value;
      s.vsi_cells_missing = v.cells_missing;
    } catch (const NoData&) {
      s.gaps.push_back("mean_vsi");
    }
    try {
      s.dcr = compute_dcr(rows, model);
    } catch (const NoControlData&) {
      s.gaps.push_back("dcr");
    }
    try {
      Var var = compute_var(rows, model);
      s.var_acknowledged = var.acknowledged;
      s.var_influenced = var.influenced;
    } catch (const NoData&) {
      s.gaps.push_back("var");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DimensionCell> dimension_cells(const std::vector<runner::TrialRow>& rows) {
  std::vector<DimensionCell> out;
  for (const auto& model : models_in_rows(rows)) {
    for (const auto& c : protocol::condition_catalog()) {
      if (c.code == "CONTROL") continue;
      DimensionCell cell;
      cell.model_label = model;
      cell.dimension = c.dimension;
      cell.pole = c.pole;
      cell.condition_code = c.code;
      try {
        cell.vsi = condition_vsi(rows, model, c.code);
      } catch (const MissingCell&) {
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::vector<AsymmetryRow> asymmetry_rows(const std::vector<runner::TrialRow>& rows) {
  std::vector<AsymmetryRow> out;
  for (const auto& model : models_in_rows(rows)) {
    for (const auto& [dim, plus_code, minus_code] : dimension_poles()) {
      AsymmetryRow row;
      row.model_label = model;
      row.dimension = dim;
      try {
        row.plus_vsi = condition_vsi(rows, model, plus_code);
      } catch (const MissingCell&) {
      }
      try {
        row.minus_vsi = condition_vsi(rows, model, minus_code);
      } catch (const MissingCell&) {
      }
      if (row.plus_vsi && row.minus_vsi) row.asymmetry = *row.plus_vsi - *row.minus_vsi;
      out.push_back(std::move(row));
    }
  }
  return out;
}

namespace {

MitigationComparison arm_stats(const std::vector<runner::TrialRow>& arm_rows,
                               const std::string& model, const std::string& mitigation_id) {
  MitigationComparison c;
  c.mitigation_id = mitigation_id;
  int parsed = 0;
  double latency_sum = 0.0;
  int latency_n = 0;
  double in_tok_sum = 0.0, out_tok_sum = 0.0;
  int in_tok_n = 0, out_tok_n = 0;
  for (const auto& r : arm_rows) {
    ++c.n;
    if (is_parsed(r)) ++parsed;
    if (r.api_success) {
      latency_sum += double(r.latency_ms);
      ++latency_n;
      if (r.input_tokens > 0) {
        in_tok_sum += double(r.input_tokens);
        ++in_tok_n;
      }
      if (r.output_tokens > 0) {
        out_tok_sum += double(r.output_tokens);
        ++out_tok_n;
      }
    }
  }
  c.parse_rate = c.n > 0 ? double(parsed) / c.n : 0.0;
  if (latency_n > 0) c.mean_latency_ms = latency_sum / latency_n;
  if (in_tok_n > 0) c.mean_input_tokens = in_tok_sum / in_tok_n;
  if (out_tok_n > 0) c.mean_output_tokens = out_tok_sum / out_tok_n;
  if (c.n == 0) {
    c.gaps.push_back("no_rows");
    return c;
  }
  try {
    c.mean_vsi = mean_vsi(arm_rows, model).value;
  } catch (const NoData&) {
    c.gaps.push_back("mean_vsi");
  }
  try {
    c.dcr = compute_dcr(arm_rows, model);
  } catch (const NoControlData&) {
    c.gaps.push_back("dcr");
  }
  try {
    Var var = compute_var(arm_rows, model);
    c.var_acknowledged = var.acknowledged;
    c.var_influenced = var.influenced;
  } catch (const NoData&) {
    c.gaps.push_back("var");
  }
  return c;
}

std::optional<double> opt_delta(const std::optional<double>& arm,
                                const std::optional<double>& base) {
  if (arm && base) return *arm - *base;
  return std::nullopt;
}

}  // namespace

std::vector<MitigationComparison> mitigation_comparison(
    const std::vector<runner::TrialRow>& phase2_rows,
    const std::vector<runner::TrialRow>& baseline_rows) {
  std::set<std::string> models;
  for (const auto& r : phase2_rows) models.insert(r.model_name);
  for (const auto& r : baseline_rows) models.insert(r.model_name);
  if (models.size() > 1) {
    throw std::invalid_argument("mitigation comparison expects rows from a single model");
  }
  std::string model = models.empty() ? std::string() : *models.begin();

  std::vector<MitigationComparison> out;
  MitigationComparison baseline = arm_stats(baseline_rows, model, "BASELINE");
  baseline.delta_vsi = 0.0;
  baseline.delta_dcr = 0.0;
  baseline.delta_var_acknowledged = 0.0;
  baseline.delta_latency_ms = 0.0;
  out.push_back(baseline);

  for (const auto& arm_id : protocol::mitigation_arm_ids()) {
    std::vector<runner::TrialRow> arm_rows;
    for (const auto& r : phase2_rows) {
      if (r.mitigation == arm_id) arm_rows.push_back(r);
    }
    MitigationComparison arm = arm_stats(arm_rows, model, arm_id);
    arm.delta_vsi = opt_delta(arm.mean_vsi, baseline.mean_vsi);
    arm.delta_dcr = opt_delta(arm.dcr, baseline.dcr);
    arm.delta_var_acknowledged = opt_delta(arm.var_acknowledged, baseline.var_acknowledged);
    arm.delta_latency_ms = opt_delta(arm.mean_latency_ms, baseline.mean_latency_ms);
    out.push_back(std::move(arm));
  }
  return out;
}

}  // namespace vbench::metrics
