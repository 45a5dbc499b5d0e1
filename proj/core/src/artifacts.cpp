#include "vbench/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "vbench/util/csv.hpp"
#include "vbench/util/numfmt.hpp"
#include "vbench/util/sha256.hpp"
#include "vbench/util/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vbench::artifacts {
namespace {

std::string opt3(const std::optional<double>& v) { return util::format_fixed_opt(v, 3); }
std::string fix3(double v) { return util::format_fixed(v, 3); }
std::string bool_token(bool b) { return b ? "true" : "false"; }

// Round through the serialized form so JSON numbers match table cells.
double round3(double v) { return std::stod(util::format_fixed(v, 3)); }

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw std::runtime_error("short write on " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<double> cell_mean_aggr(const std::vector<runner::TrialRow>& rows,
                                     const std::string& model, const std::string& condition,
                                     const std::string& domain) {
  return metrics::mean_aggressiveness(rows, model, condition, domain);
}

// Parsed-row aggressiveness shifts against the matching (model, domain)
// control mean; rows without a computable control mean are skipped.
struct ShiftPoint {
  std::string model;
  std::string domain;
  std::string condition_code;
  double shift = 0.0;
};

std::vector<ShiftPoint> collect_shift_points(const std::vector<runner::TrialRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::optional<double>> control_means;
  std::vector<ShiftPoint> points;
  for (const auto& row : rows) {
    if (!metrics::is_parsed(row) || row.condition_code == "CONTROL") continue;
    if (!row.aggressiveness_score) continue;
    auto key = std::make_pair(row.model_name, row.domain);
    auto it = control_means.find(key);
    if (it == control_means.end()) {
      it = control_means
               .emplace(key, cell_mean_aggr(rows, row.model_name, "CONTROL", row.domain))
               .first;
    }
    if (!it->second) continue;
    points.push_back(
        {row.model_name, row.domain, row.condition_code, *row.aggressiveness_score - *it->second});
  }
  return points;
}

const std::map<std::string, std::string>& domain_abbreviations() {
  static const std::map<std::string, std::string> kAbbrev = {
      {"oncology", "onc"},
      {"cardiology", "card"},
      {"end_of_life", "eol"},
      {"chronic_disease", "chron"},
      {"preventive_screening", "prev"},
  };
  return kAbbrev;
}

std::string abbrev_domain(const std::string& token) {
  auto it = domain_abbreviations().find(token);
  return it == domain_abbreviations().end() ? token : it->second;
}

struct ArmDelta {
  std::string mitigation_id;
  std::optional<double> delta_vsi;
};

// Non-baseline arms ordered by descending delta; unknown deltas sink to the
// end. Ties keep catalog order.
std::vector<ArmDelta> sorted_arm_deltas(const std::vector<runner::TrialRow>& phase2_rows,
                                        const std::vector<runner::TrialRow>& baseline_rows) {
  auto comparisons = metrics::mitigation_comparison(phase2_rows, baseline_rows);
  std::vector<ArmDelta> arms;
  for (const auto& c : comparisons) {
    if (c.mitigation_id == "BASELINE") continue;
    arms.push_back({c.mitigation_id, c.delta_vsi});
  }
  std::stable_sort(arms.begin(), arms.end(), [](const ArmDelta& a, const ArmDelta& b) {
    double av = a.delta_vsi.value_or(-std::numeric_limits<double>::infinity());
    double bv = b.delta_vsi.value_or(-std::numeric_limits<double>::infinity());
    return av > bv;
  });
  return arms;
}

}  // namespace

std::vector<runner::TrialRow> load_rows_checked(const std::string& csv_path) {
  util::CsvTable table = util::read_csv_file(csv_path);
  const auto& expected = runner::trial_csv_columns();
  std::set<std::string> have(table.header.begin(), table.header.end());
  std::vector<std::string> missing;
  for (const auto& col : expected) {
    if (!have.count(col)) missing.push_back(col);
  }
  if (!missing.empty()) {
    std::string what = csv_path + " is missing trial columns:";
    for (const auto& col : missing) what += " " + col;
    throw SchemaMismatch(what, missing);
  }
  if (table.header != expected) {
    throw SchemaMismatch(csv_path + " has the trial columns in a non-canonical order", {});
  }
  return runner::read_trials_csv(csv_path);
}

std::vector<runner::TrialRow> baseline_rows_for_phase2(
    const std::vector<runner::TrialRow>& phase1_rows,
    const std::vector<runner::TrialRow>& phase2_rows, const std::string& phase2_model) {
  std::set<std::string> vignettes;
  for (const auto& row : phase2_rows) vignettes.insert(row.vignette_id);
  std::vector<runner::TrialRow> out;
  for (const auto& row : phase1_rows) {
    if (row.model_name != phase2_model) continue;
    if (!vignettes.count(row.vignette_id)) continue;
    if (row.mitigation != "BASELINE") continue;
    out.push_back(row);
  }
  return out;
}

std::vector<double> paired_diffs(const std::vector<runner::TrialRow>& arm_rows,
                                 const std::vector<runner::TrialRow>& baseline_rows) {
  std::set<std::string> vignettes;
  for (const auto& row : arm_rows) vignettes.insert(row.vignette_id);

  auto cell_mean = [](const std::vector<runner::TrialRow>& rows, const std::string& vignette,
                      const std::string& condition) -> std::optional<double> {
    double sum = 0.0;
    int n = 0;
    for (const auto& row : rows) {
      if (row.vignette_id != vignette || row.condition_code != condition) continue;
      if (!metrics::is_parsed(row) || !row.aggressiveness_score) continue;
      sum += *row.aggressiveness_score;
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };

  std::vector<double> diffs;
  for (const auto& code : protocol::condition_codes()) {
    for (const auto& vignette : vignettes) {
      auto arm = cell_mean(arm_rows, vignette, code);
      auto base = cell_mean(baseline_rows, vignette, code);
      if (!arm || !base) continue;
      diffs.push_back(*arm - *base);
    }
  }
  return diffs;
}

std::string phase1_model_summary_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "n_trials", "parse_rate", "dvo_aggressiveness",
                                   "dvo_risk", "mean_vsi", "dcr", "var_acknowledged",
                                   "var_influenced"});
  for (const auto& s : metrics::summarize_models(rows)) {
    out += util::csv_row({s.model_label, std::to_string(s.n_trials), fix3(s.parse_rate),
                          opt3(s.dvo_aggressiveness), opt3(s.dvo_risk), opt3(s.mean_vsi),
                          opt3(s.dcr), opt3(s.var_acknowledged), opt3(s.var_influenced)});
  }
  return out;
}

std::string dvo_by_domain_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out =
      util::csv_row({"model", "domain", "n_control", "dvo_aggressiveness", "dvo_risk"});
  for (const auto& model : metrics::models_in_rows(rows)) {
    for (const auto& domain : metrics::domains_in_rows(rows, model)) {
      std::string n = "0", aggr, risk;
      try {
        metrics::Dvo dvo = metrics::compute_dvo(rows, model, domain);
        n = std::to_string(dvo.n);
        aggr = fix3(dvo.aggressiveness);
        risk = fix3(dvo.risk);
      } catch (const metrics::NoControlData&) {
      }
      out += util::csv_row({model, domain, n, aggr, risk});
    }
  }
  return out;
}

std::string per_dimension_vsi_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "dimension", "pole", "condition_code", "vsi"});
  for (const auto& cell : metrics::dimension_cells(rows)) {
    out += util::csv_row({cell.model_label, protocol::dimension_token(cell.dimension),
                          protocol::pole_token(cell.pole), cell.condition_code, opt3(cell.vsi)});
  }
  return out;
}

std::string asymmetry_index_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "dimension", "vsi_plus", "vsi_minus", "asymmetry"});
  for (const auto& row : metrics::asymmetry_rows(rows)) {
    out += util::csv_row({row.model_label, protocol::dimension_token(row.dimension),
                          opt3(row.plus_vsi), opt3(row.minus_vsi), opt3(row.asymmetry)});
  }
  return out;
}

std::string mitigation_comparison_csv(const std::vector<runner::TrialRow>& phase2_rows,
                                      const std::vector<runner::TrialRow>& baseline_rows) {
  std::string out = util::csv_row(
      {"mitigation", "n", "parse_rate", "mean_vsi", "dcr", "var_acknowledged", "var_influenced",
       "mean_latency_ms", "mean_input_tokens", "mean_output_tokens", "delta_vsi", "delta_dcr",
       "delta_var_acknowledged", "delta_latency_ms"});
  for (const auto& c : metrics::mitigation_comparison(phase2_rows, baseline_rows)) {
    out += util::csv_row({c.mitigation_id, std::to_string(c.n), fix3(c.parse_rate),
                          opt3(c.mean_vsi), opt3(c.dcr), opt3(c.var_acknowledged),
                          opt3(c.var_influenced), opt3(c.mean_latency_ms),
                          opt3(c.mean_input_tokens), opt3(c.mean_output_tokens),
                          opt3(c.delta_vsi), opt3(c.delta_dcr), opt3(c.delta_var_acknowledged),
                          opt3(c.delta_latency_ms)});
  }
  return out;
}

std::string mixed_effects_results_csv(const stats::MixedModelFit& fit) {
  std::string out = util::csv_row(
      {"term", "estimate", "std_error", "z", "p_value", "ci_low", "ci_high"});
  for (const auto& c : fit.coefficients) {
    out += util::csv_row({c.name, fix3(c.estimate), fix3(c.std_error), fix3(c.z), fix3(c.p),
                          fix3(c.ci_low), fix3(c.ci_high)});
  }
  return out;
}

std::string mixed_effects_info_json(const stats::MixedModelFit& fit) {
  json info;
  info["n_obs"] = fit.n_obs;
  info["n_groups"] = fit.n_groups;
  info["k"] = static_cast<int>(fit.coefficients.size()) + 2;
  info["sigma_u2"] = round3(fit.sigma_u2);
  info["sigma_e2"] = round3(fit.sigma_e2);
  info["psi"] = round3(fit.psi);
  info["log_likelihood"] = round3(fit.log_likelihood);
  info["aic"] = round3(fit.aic);
  info["bic"] = round3(fit.bic);
  info["boundary_flag"] = fit.boundary_flag;
  return info.dump(2) + "\n";
}

std::string wilcoxon_csv(const std::vector<runner::TrialRow>& phase2_rows,
                         const std::vector<runner::TrialRow>& baseline_rows) {
  const auto arms = protocol::mitigation_arm_ids();
  const int k = static_cast<int>(arms.size());
  std::string out = util::csv_row({"mitigation", "n_pairs", "n_nonzero", "w", "mean_diff",
                                   "p_exact", "p_bonferroni", "significant"});
  for (const auto& arm : arms) {
    std::vector<runner::TrialRow> arm_rows;
    for (const auto& row : phase2_rows) {
      if (row.mitigation == arm) arm_rows.push_back(row);
    }
    std::vector<double> diffs = paired_diffs(arm_rows, baseline_rows);
    if (diffs.empty()) {
      out += util::csv_row({arm, "0", "0", "", "", "", "", "false"});
      continue;
    }
    stats::WilcoxonResult r = stats::wilcoxon_exact(diffs, k, 0.05);
    out += util::csv_row({arm, std::to_string(r.n_pairs), std::to_string(r.n_nonzero), fix3(r.w),
                          fix3(r.mean_diff), fix3(r.p_exact), fix3(r.p_bonferroni),
                          bool_token(r.significant)});
  }
  return out;
}

std::string effect_sizes_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row(
      {"model", "condition_code", "n_condition", "n_control", "cohens_d", "caution", "gap"});
  for (const auto& model : metrics::models_in_rows(rows)) {
    for (const auto& e : stats::effect_sizes(rows, model)) {
      out += util::csv_row({e.model_label, e.condition_code, std::to_string(e.n_condition),
                            std::to_string(e.n_control), opt3(e.d), bool_token(e.caution),
                            e.gap});
    }
  }
  return out;
}

std::string fig1_heatmap_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "condition_code", "mean_aggressiveness"});
  for (const auto& model : metrics::models_in_rows(rows)) {
    for (const auto& code : protocol::condition_codes()) {
      out += util::csv_row({model, code, opt3(cell_mean_aggr(rows, model, code, ""))});
    }
  }
  return out;
}

std::string fig1_heatmap_svg(const std::vector<runner::TrialRow>& rows) {
  const auto models = metrics::models_in_rows(rows);
  const auto codes = protocol::condition_codes();
  const double left = 150, top = 70, cw = 64, ch = 34;
  const double width = left + cw * codes.size() + 16;
  const double height = top + ch * models.size() + 56;
  util::SvgDoc doc(width, height);
  doc.rect(0, 0, width, height, "#ffffff");
  doc.text(left, 24, "Mean aggressiveness by model and value condition", 13, "start", "#111111");
  for (std::size_t i = 0; i < codes.size(); ++i) {
    doc.text(left + i * cw + cw / 2, top - 8, codes[i], 7, "middle", "#333333");
  }
  for (std::size_t j = 0; j < models.size(); ++j) {
    doc.text(left - 8, top + j * ch + ch / 2 + 3, models[j], 10, "end", "#111111");
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const double x = left + i * cw, y = top + j * ch;
      auto v = cell_mean_aggr(rows, models[j], codes[i], "");
      if (v) {
        doc.rect(x, y, cw, ch, util::diverging_color(*v, 1.0, 3.0, 5.0), "#ffffff", 0.5);
        const std::string text_fill = (*v <= 1.6 || *v >= 4.4) ? "#f0f0f0" : "#111111";
        doc.text(x + cw / 2, y + ch / 2 + 3, fix3(*v), 9, "middle", text_fill);
      } else {
        doc.rect(x, y, cw, ch, "#e8e8e8", "#ffffff", 0.5);
        doc.text(x + cw / 2, y + ch / 2 + 3, "n/a", 9, "middle", "#666666");
      }
    }
  }
  const double legend_y = top + ch * models.size() + 18;
  doc.text(left, legend_y + 10, "scale:", 9, "start", "#333333");
  for (int s = 1; s <= 5; ++s) {
    const double x = left + 44 + (s - 1) * 46;
    doc.rect(x, legend_y, 18, 12, util::diverging_color(s, 1.0, 3.0, 5.0), "#999999", 0.5);
    doc.text(x + 24, legend_y + 10, std::to_string(s), 9, "start", "#333333");
  }
  return doc.str();
}

std::string fig2_dcr_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "dcr"});
  for (const auto& model : metrics::models_in_rows(rows)) {
    std::string value;
    try {
      value = fix3(metrics::compute_dcr(rows, model));
    } catch (const metrics::NoControlData&) {
    }
    out += util::csv_row({model, value});
  }
  return out;
}

std::string fig2_dcr_svg(const std::vector<runner::TrialRow>& rows) {
  const auto models = metrics::models_in_rows(rows);
  const double left = 70, top = 40, plot_h = 240, bar_w = 72, gap = 36;
  const double width = left + models.size() * (bar_w + gap) + 24;
  const double height = top + plot_h + 56;
  util::SvgDoc doc(width, height);
  doc.rect(0, 0, width, height, "#ffffff");
  doc.text(left, 20, "Directional concordance rate by model", 13, "start", "#111111");
  for (int g = 0; g <= 4; ++g) {
    const double frac = g / 4.0;
    const double y = top + plot_h * (1.0 - frac);
    doc.line(left - 4, y, width - 16, y, frac == 0.0 ? "#888888" : "#dddddd", 1.0);
    doc.text(left - 8, y + 3, util::format_fixed(frac, 2), 8, "end", "#555555");
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double x = left + i * (bar_w + gap) + gap / 2;
    std::optional<double> dcr;
    try {
      dcr = metrics::compute_dcr(rows, models[i]);
    } catch (const metrics::NoControlData&) {
    }
    if (dcr) {
      const double h = *dcr * plot_h;
      doc.rect(x, top + plot_h - h, bar_w, h, "#4477aa");
      doc.text(x + bar_w / 2, top + plot_h - h - 6, fix3(*dcr), 9, "middle", "#111111");
    } else {
      doc.text(x + bar_w / 2, top + plot_h - 6, "n/a", 9, "middle", "#666666");
    }
    doc.text(x + bar_w / 2, top + plot_h + 16, models[i], 8.5, "middle", "#111111");
  }
  return doc.str();
}

std::string fig3_delta_vsi_csv(const std::vector<runner::TrialRow>& phase2_rows,
                               const std::vector<runner::TrialRow>& baseline_rows) {
  std::string out = util::csv_row({"mitigation", "delta_vsi"});
  for (const auto& arm : sorted_arm_deltas(phase2_rows, baseline_rows)) {
    out += util::csv_row({arm.mitigation_id, opt3(arm.delta_vsi)});
  }
  return out;
}

std::string fig3_delta_vsi_svg(const std::vector<runner::TrialRow>& phase2_rows,
                               const std::vector<runner::TrialRow>& baseline_rows) {
  const auto arms = sorted_arm_deltas(phase2_rows, baseline_rows);
  const double left = 210, top = 50, row_h = 30;
  const double x0 = left + 230;
  const double width = left + 460 + 40;
  const double height = top + arms.size() * row_h + 30;
  util::SvgDoc doc(width, height);
  doc.rect(0, 0, width, height, "#ffffff");
  doc.text(12, 22, "Change in mean VSI relative to baseline, by mitigation", 13, "start",
           "#111111");
  double max_abs = 0.0;
  for (const auto& arm : arms) {
    if (arm.delta_vsi) max_abs = std::max(max_abs, std::fabs(*arm.delta_vsi));
  }
  const double scale = max_abs > 0.0 ? 220.0 / max_abs : 220.0;
  doc.line(x0, top - 8, x0, top + arms.size() * row_h + 8, "#888888", 1.0);
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double y = top + i * row_h;
    doc.text(12, y + 19, arms[i].mitigation_id, 10, "start", "#111111");
    if (!arms[i].delta_vsi) {
      doc.text(x0 + 6, y + 19, "n/a", 9, "start", "#666666");
      continue;
    }
    const double d = *arms[i].delta_vsi;
    const double len = std::fabs(d) * scale;
    if (d >= 0.0) {
      doc.rect(x0, y + 6, len, 18, "#bb5566");
      doc.text(x0 + len + 6, y + 19, fix3(d), 9, "start", "#111111");
    } else {
      doc.rect(x0 - len, y + 6, len, 18, "#4477aa");
      doc.text(x0 - len - 6, y + 19, fix3(d), 9, "end", "#111111");
    }
  }
  return doc.str();
}

std::string figs1_domain_shift_csv(const std::vector<runner::TrialRow>& rows) {
  std::string out = util::csv_row({"model", "domain", "condition_code", "shift"});
  for (const auto& p : collect_shift_points(rows)) {
    out += util::csv_row({p.model, p.domain, p.condition_code, fix3(p.shift)});
  }
  return out;
}

std::string figs1_domain_shift_svg(const std::vector<runner::TrialRow>& rows) {
  const auto points = collect_shift_points(rows);
  // Group columns: model first-appearance order, domain order within model.
  std::vector<std::pair<std::string, std::string>> groups;
  for (const auto& model : metrics::models_in_rows(rows)) {
    for (const auto& domain : metrics::domains_in_rows(rows, model)) {
      groups.emplace_back(model, domain);
    }
  }
  const double left = 60, top = 44, plot_h = 260, gw = 58;
  const double width = left + groups.size() * gw + 30;
  const double height = top + plot_h + 64;
  const double y0 = top + plot_h / 2;
  const double unit = 30.0;  // pixels per score point
  util::SvgDoc doc(width, height);
  doc.rect(0, 0, width, height, "#ffffff");
  doc.text(left, 18, "Aggressiveness shift vs control, by model and domain", 13, "start",
           "#111111");
  std::string legend = "domains:";
  for (const auto& [token, abbrev] : domain_abbreviations()) {
    legend += " " + abbrev + "=" + token;
  }
  doc.text(left, 32, legend, 7, "start", "#555555");
  for (int g = -4; g <= 4; g += 2) {
    const double y = y0 - g * unit;
    doc.line(left - 4, y, width - 20, y, g == 0 ? "#888888" : "#e0e0e0", 1.0);
    doc.text(left - 8, y + 3, std::to_string(g), 7, "end", "#555555");
  }
  std::map<std::pair<std::string, std::string>, int> group_index;
  for (std::size_t i = 0; i < groups.size(); ++i) group_index[groups[i]] = static_cast<int>(i);
  std::map<int, int> point_counter;
  for (const auto& p : points) {
    auto it = group_index.find({p.model, p.domain});
    if (it == group_index.end()) continue;
    const int k = point_counter[it->second]++;
    const double jitter = ((k % 7) - 3) * 5.5;
    const double cx = left + it->second * gw + gw / 2 + jitter;
    doc.circle(cx, y0 - p.shift * unit, 2.5, util::diverging_color(p.shift, -2.0, 0.0, 2.0));
  }
  const double base_y = top + plot_h;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    doc.text(left + i * gw + gw / 2, base_y + 12, abbrev_domain(groups[i].second), 6.5, "middle",
             "#333333");
  }
  // One centered model label under its span of domain columns.
  std::size_t start = 0;
  while (start < groups.size()) {
    std::size_t end = start;
    while (end + 1 < groups.size() && groups[end + 1].first == groups[start].first) ++end;
    const double cx = left + ((start + end + 1) / 2.0) * gw;
    doc.text(cx, base_y + 26, groups[start].first, 8, "middle", "#111111");
    doc.line(left + start * gw + 4, base_y + 32, left + (end + 1) * gw - 4, base_y + 32,
             "#bbbbbb", 1.0);
    start = end + 1;
  }
  return doc.str();
}

std::vector<ManifestEntry> build_manifest(const std::string& root,
                                          const std::vector<std::string>& relative_paths) {
  std::vector<std::string> sorted = relative_paths;
  std::sort(sorted.begin(), sorted.end());
  std::vector<ManifestEntry> entries;
  entries.reserve(sorted.size());
  for (const auto& rel : sorted) {
    const std::string full = util::sha256_file_hex((fs::path(root) / rel).string());
    entries.push_back({rel, full, full.substr(0, 12)});
  }
  return entries;
}

void write_manifest_files(const std::string& root, const std::vector<ManifestEntry>& entries) {
  std::string short_text, full_text;
  for (const auto& e : entries) {
    short_text += e.sha256_short + "  " + e.relative_path + "\n";
    full_text += e.sha256_full + "  " + e.relative_path + "\n";
  }
  write_text(fs::path(root) / "checksums_sha256.txt", short_text);
  write_text(fs::path(root) / "checksums_sha256_full.txt", full_text);
}

ArtifactSet build_artifacts(const ArtifactConfig& config) {
  const auto phase1 = load_rows_checked(config.phase1_csv);
  const auto phase2 = load_rows_checked(config.phase2_csv);
  const auto baseline = baseline_rows_for_phase2(phase1, phase2, config.phase2_model);

  const fs::path tables(config.tables_dir);
  const fs::path figures(config.figures_dir);
  fs::create_directories(tables);
  fs::create_directories(figures);
  fs::path root = tables.parent_path();
  if (root.empty()) root = ".";

  std::vector<std::pair<fs::path, std::string>> outputs;
  outputs.emplace_back(tables / "table_phase1_model_summary.csv",
                       phase1_model_summary_csv(phase1));
  outputs.emplace_back(tables / "table_phase1_dvo_by_domain.csv", dvo_by_domain_csv(phase1));
  outputs.emplace_back(tables / "table_phase2_mitigation_comparison_gpt52.csv",
                       mitigation_comparison_csv(phase2, baseline));
  outputs.emplace_back(tables / "table_per_dimension_vsi.csv", per_dimension_vsi_csv(phase1));
  outputs.emplace_back(tables / "table_phase2_wilcoxon.csv", wilcoxon_csv(phase2, baseline));
  outputs.emplace_back(tables / "table_effect_sizes.csv", effect_sizes_csv(phase1));
  outputs.emplace_back(tables / "table_asymmetry_index.csv", asymmetry_index_csv(phase1));
  try {
    const stats::MixedModelFit fit = stats::fit_mixed_model(phase1, false);
    outputs.emplace_back(tables / "table_mixed_effects_results.csv",
                         mixed_effects_results_csv(fit));
    outputs.emplace_back(tables / "mixed_effects_info.json", mixed_effects_info_json(fit));
  } catch (const stats::SingularDesign& e) {
    outputs.emplace_back(
        tables / "table_mixed_effects_results.csv",
        util::csv_row({"term", "estimate", "std_error", "z", "p_value", "ci_low", "ci_high"}));
    json info;
    info["gap"] = "singular_design";
    info["detail"] = e.what();
    info["offending_columns"] = e.offending_columns;
    outputs.emplace_back(tables / "mixed_effects_info.json", info.dump(2) + "\n");
  }

  outputs.emplace_back(figures / "fig1_phase1_heatmap_aggressiveness.csv",
                       fig1_heatmap_csv(phase1));
  outputs.emplace_back(figures / "fig1_phase1_heatmap_aggressiveness.svg",
                       fig1_heatmap_svg(phase1));
  outputs.emplace_back(figures / "fig2_phase1_dcr.csv", fig2_dcr_csv(phase1));
  outputs.emplace_back(figures / "fig2_phase1_dcr.svg", fig2_dcr_svg(phase1));
  outputs.emplace_back(figures / "fig3_phase2_gpt52_delta_vsi.csv",
                       fig3_delta_vsi_csv(phase2, baseline));
  outputs.emplace_back(figures / "fig3_phase2_gpt52_delta_vsi.svg",
                       fig3_delta_vsi_svg(phase2, baseline));
  outputs.emplace_back(figures / "figS1_phase1_domain_shift.csv", figs1_domain_shift_csv(phase1));
  outputs.emplace_back(figures / "figS1_phase1_domain_shift.svg", figs1_domain_shift_svg(phase1));

  ArtifactSet set;
  set.root = root.string();
  for (const auto& [path, content] : outputs) {
    write_text(path, content);
    set.files.push_back(fs::relative(path, root).generic_string());
  }
  std::sort(set.files.begin(), set.files.end());
  write_manifest_files(set.root, build_manifest(set.root, set.files));
  set.manifest_short_path = (root / fs::path("checksums_sha256.txt")).string();
  set.manifest_full_path = (root / fs::path("checksums_sha256_full.txt")).string();
  return set;
}

VerifyReport verify_static(const std::string& root) {
  VerifyReport report;
  const fs::path full_path = fs::path(root) / "checksums_sha256_full.txt";
  const fs::path short_path = fs::path(root) / "checksums_sha256.txt";
  if (!fs::exists(full_path)) {
    report.ok = false;
    report.failures.push_back("missing manifest: " + full_path.string());
    return report;
  }

  auto parse_manifest = [](const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;  // hash, path
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto sep = line.find("  ");
      if (sep == std::string::npos) continue;
      entries.emplace_back(line.substr(0, sep), line.substr(sep + 2));
    }
    return entries;
  };

  const auto full_entries = parse_manifest(read_text(full_path));
  if (full_entries.empty()) {
    report.ok = false;
    report.failures.push_back("manifest is empty: " + full_path.string());
    return report;
  }

  std::map<std::string, std::string> full_by_path;
  for (const auto& [hash, rel] : full_entries) {
    full_by_path[rel] = hash;
    const fs::path target = fs::path(root) / rel;
    if (!fs::exists(target)) {
      report.failures.push_back("missing file: " + rel);
      continue;
    }
    const std::string got = util::sha256_file_hex(target.string());
    if (got != hash) {
      report.failures.push_back("checksum mismatch: " + rel);
    } else {
      report.checks.push_back("ok " + rel);
    }
  }

  if (!fs::exists(short_path)) {
    report.failures.push_back("missing manifest: " + short_path.string());
  } else {
    const auto short_entries = parse_manifest(read_text(short_path));
    if (short_entries.size() != full_entries.size()) {
      report.failures.push_back("short manifest entry count differs from full manifest");
    }
    for (const auto& [hash, rel] : short_entries) {
      auto it = full_by_path.find(rel);
      if (it == full_by_path.end()) {
        report.failures.push_back("short manifest lists unknown file: " + rel);
      } else if (it->second.substr(0, 12) != hash) {
        report.failures.push_back("short manifest hash differs: " + rel);
      }
    }
  }

  report.ok = report.failures.empty();
  return report;
}

namespace {

std::optional<fs::path> latest_results_csv(const fs::path& dir, int phase) {
  const std::string prefix = "values_phase" + std::to_string(phase) + "_";
  std::optional<fs::path> best;
  if (!fs::exists(dir)) return best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0) continue;
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    if (!best || best->filename().string() < name) best = entry.path();
  }
  return best;
}

std::string join_sorted(const std::set<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

}  // namespace

VerifyReport verify_integrity(const std::string& results_dir,
                              const std::vector<std::string>& phase1_models,
                              const std::string& phase2_model) {
  VerifyReport report;
  auto check = [&report](bool pass, const std::string& label) {
    if (pass) {
      report.checks.push_back(label);
    } else {
      report.failures.push_back(label);
    }
  };

  const auto p1_path = latest_results_csv(results_dir, 1);
  const auto p2_path = latest_results_csv(results_dir, 2);
  if (!p1_path) report.failures.push_back("no phase-1 results csv in " + results_dir);
  if (!p2_path) report.failures.push_back("no phase-2 results csv in " + results_dir);

  if (p1_path) {
    const auto rows = load_rows_checked(p1_path->string());
    check(rows.size() == 104,
          "phase-1 rows: " + std::to_string(rows.size()) + " (expected 104)");
    double success_sum = 0.0;
    std::set<std::string> models;
    for (const auto& row : rows) {
      success_sum += row.api_success ? 1.0 : 0.0;
      models.insert(row.model_name);
    }
    const double mean = rows.empty() ? 0.0 : success_sum / rows.size();
    check(std::fabs(mean - 1.0) < 1e-12,
          "phase-1 api_success mean: " + util::format_fixed(mean, 6) + " (expected 1.0)");
    const std::set<std::string> expected(phase1_models.begin(), phase1_models.end());
    check(models == expected, "phase-1 models: {" + join_sorted(models) + "} (expected {" +
                                  join_sorted(expected) + "})");
  }

  if (p2_path) {
    const auto rows = load_rows_checked(p2_path->string());
    check(rows.size() == 78, "phase-2 rows: " + std::to_string(rows.size()) + " (expected 78)");
    std::set<std::string> models;
    for (const auto& row : rows) models.insert(row.model_name);
    check(models == std::set<std::string>{phase2_model},
          "phase-2 models: {" + join_sorted(models) + "} (expected {" + phase2_model + "})");
  }

  report.ok = report.failures.empty();
  return report;
}

}  // namespace vbench::artifacts
