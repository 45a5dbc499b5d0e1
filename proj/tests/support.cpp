#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "vbench/gateway.hpp"
#include "vbench/protocol.hpp"

namespace fs = std::filesystem;
using namespace vbench;

namespace testsupport {

runner::TrialRow make_row(const RowOpts& opts) {
  runner::TrialRow row;
  row.phase = opts.phase;
  row.vignette_id = opts.vignette;
  row.domain = opts.domain;
  row.condition_code = opts.condition;
  const auto& condition = protocol::condition_by_code(opts.condition);
  row.dimension = protocol::dimension_token(condition.dimension);
  row.pole = protocol::pole_token(condition.pole);
  row.model_name = opts.model;
  row.mitigation = opts.mitigation;
  row.temperature = 0.0;
  row.repetition = opts.repetition;
  row.trial_id = runner::make_trial_id(opts.phase, opts.vignette, opts.condition, opts.model,
                                       opts.mitigation, 0.0, opts.repetition);
  row.latency_ms = 5;
  row.input_tokens = 100;
  row.output_tokens = 50;
  row.api_success = opts.api_success;
  row.parse_success = opts.api_success && opts.parse_success;
  row.parse_method = row.parse_success ? "direct" : "failed";
  if (row.parse_success) {
    row.aggressiveness_score = opts.aggr;
    row.risk_level = opts.risk;
    row.number_of_options_presented = 3;
    row.patient_values_acknowledged = opts.acknowledged;
    row.patient_values_influenced_recommendation = opts.influenced;
    row.cost_considerations_mentioned = false;
    row.primary_recommendation = "Proceed with standard management.";
    row.reasoning = "Weighed the stated values against clinical safety.";
  }
  return row;
}

std::vector<runner::TrialRow> planted_shift_rows(
    const std::string& model, const std::map<std::string, int>& delta_by_code) {
  std::vector<runner::TrialRow> rows;
  for (const auto& condition : protocol::condition_catalog()) {
    RowOpts opts;
    opts.model = model;
    opts.condition = condition.code;
    int delta = 0;
    auto it = delta_by_code.find(condition.code);
    if (it != delta_by_code.end()) delta = it->second;
    opts.aggr = std::clamp(3 + delta, 1, 5);
    opts.risk = std::clamp(3 + delta, 1, 5);
    rows.push_back(make_row(opts));
  }
  return rows;
}

corpus::Vignette make_vignette(corpus::Domain domain, const std::string& id) {
  corpus::Vignette v;
  v.vignette_id = id;
  v.domain = {domain, 1.0};
  v.age_range = "65-69";
  v.sex = corpus::Sex::Female;
  v.clinical_summary = "Established diagnosis with several reasonable management paths";
  const auto& defaults = corpus::domain_defaults().at(domain);
  v.decision_point = defaults.decision_point;
  v.options = defaults.options;
  v.extraction_quality = "medium";
  v.source_note_id = "note_" + id;
  return v;
}

corpus::EncounterNote make_phi_note(int index) {
  static const std::vector<std::string> domain_text = {
      "Oncology follow-up for metastatic carcinoma; chemotherapy discussed with the oncologist.",
      "Cardiology visit for coronary disease; stent placement versus medical therapy for the "
      "heart.",
      "Palliative care consult; hospice and goals of care reviewed given terminal prognosis.",
      "Diabetes management visit; a1c elevated on metformin, insulin intensification "
      "considered.",
      "Screening visit; colonoscopy and mammogram due, preventive counseling provided.",
  };
  const int d = index % 5;
  corpus::EncounterNote note;
  note.note_id = "note_" + std::to_string(10000 + index);
  const int age = 40 + index % 50;
  note.text = "Patient is a " + std::to_string(age) + " year old female. " + domain_text[d] +
              " We discussed options and alternatives; the patient prefers the least "
              "disruptive plan and asked about risks and benefits. Counseled on the "
              "trade-off between benefit and side effect burden; shared decision making "
              "documented. " +
              "SSN " + std::to_string(100 + index % 900) + "-45-6789. " +
              "Call 555-0" + std::to_string(100 + index % 900) + " ext " +
              std::to_string(index % 90 + 10) + ", phone (312) 555-" +
              std::to_string(1000 + index % 9000) + ". " + "Email patient" +
              std::to_string(index) + "@example.org. " + "Seen on 03/" +
              std::to_string(10 + index % 19) + "/2024 and again on 2024-07-" +
              std::to_string(10 + index % 19) + ". " + "MRN " +
              std::to_string(10000000 + index) + ".";
  static const std::vector<std::vector<std::string>> codes = {
      {"C50.911"}, {"I25.10"}, {"Z51.5"}, {"E11.9"}, {"Z12.11"}};
  note.icd_codes = codes[d];
  return note;
}

SyntheticRun run_synthetic_phase(int phase, const std::string& results_dir,
                                 const std::string& stamp, int max_concurrency,
                                 int worker_threads) {
  const auto card = make_vignette(corpus::Domain::Cardiology, "vig_card");
  const auto onc = make_vignette(corpus::Domain::Oncology, "vig_onc");

  std::vector<std::string> labels =
      phase == 2 ? std::vector<std::string>{"gpt-5.2"} : gateway::default_model_labels();
  std::vector<std::string> vignette_ids =
      phase == 2 ? std::vector<std::string>{card.vignette_id}
                 : std::vector<std::string>{card.vignette_id, onc.vignette_id};
  std::map<std::string, corpus::Vignette> by_id = {{card.vignette_id, card},
                                                   {onc.vignette_id, onc}};

  gateway::GatewayConfig gw_config = gateway::default_gateway_config(phase);
  gw_config.max_concurrency = max_concurrency;
  gw_config.rate_limit_delay_s = 0.0;
  gateway::Gateway gw(gw_config);
  auto profiles = synthetic::default_profiles(labels);
  for (const auto& label : labels) {
    auto config = gateway::model_config_by_label(label);
    if (!config) throw std::runtime_error("unknown label " + label);
    gw.register_model(*config, std::make_shared<synthetic::SyntheticBackend>(profiles.at(label)));
  }

  const std::vector<std::string> mitigations =
      phase == 2 ? protocol::mitigation_arm_ids() : std::vector<std::string>{"BASELINE"};
  const auto plan = runner::build_plan(phase, vignette_ids, protocol::condition_codes(), labels,
                                       mitigations, {0.0}, 1);

  runner::RunOptions options;
  options.phase = phase;
  options.results_dir = results_dir;
  options.run_stamp = stamp;
  options.worker_threads = worker_threads;
  return {runner::execute_plan(plan, by_id, gw, options), vignette_ids};
}

WilcoxonOracle wilcoxon_oracle(const std::vector<double>& diffs) {
  std::vector<double> mags;
  std::vector<int> signs;
  for (double d : diffs) {
    if (d == 0.0) continue;
    mags.push_back(std::fabs(d));
    signs.push_back(d > 0 ? 1 : -1);
  }
  WilcoxonOracle oracle;
  oracle.n_nonzero = static_cast<int>(mags.size());
  if (mags.empty()) return oracle;

  // Midranks: sort magnitudes, average the 1-based ranks across each tie run.
  std::vector<std::size_t> order(mags.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return mags[a] < mags[b]; });
  std::vector<double> ranks(mags.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && mags[order[j + 1]] == mags[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  double w = 0.0;
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (signs[k] > 0) w += ranks[k];
  }
  oracle.w = w;

  const std::size_t m = ranks.size();
  if (m > 25) throw std::invalid_argument("oracle enumeration limit exceeded");
  std::uint64_t le = 0, ge = 0;
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      if (mask >> b & 1) s += ranks[b];
    }
    if (s <= w + 1e-9) ++le;
    if (s >= w - 1e-9) ++ge;
  }
  const double lo = static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
  oracle.p = std::min(1.0, 2.0 * lo);
  return oracle;
}

std::vector<double> ols_oracle(const std::vector<double>& y,
                               const std::vector<std::vector<double>>& x) {
  const std::size_t n = y.size();
  const std::size_t p = x.front().size();
  // A = X'X augmented with X'y, then Gauss-Jordan with partial pivoting.
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += x[i][r] * x[i][c];
      a[r][p] += x[i][r] * y[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    if (std::fabs(a[col][col]) < 1e-12) throw std::runtime_error("singular normal equations");
    const double d = a[col][col];
    for (std::size_t c = col; c <= p; ++c) a[col][c] /= d;
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p];
  return beta;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace testsupport
