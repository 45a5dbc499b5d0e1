#include "vbench/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "vbench/util/strings.hpp"

namespace vbench::synthetic {

using nlohmann::json;

std::string failure_kind_token(FailureKind kind) {
  switch (kind) {
    case FailureKind::CotPreamble: return "cot_preamble";
    case FailureKind::MalformedBracket: return "malformed_bracket";
    case FailureKind::ApiFailure: return "api_failure";
  }
  return "api_failure";
}

FailureKind failure_kind_from_token(const std::string& token) {
  if (token == "cot_preamble") return FailureKind::CotPreamble;
  if (token == "malformed_bracket") return FailureKind::MalformedBracket;
  if (token == "api_failure") return FailureKind::ApiFailure;
  throw std::invalid_argument("unknown failure kind: " + token);
}

bool TrialSelector::matches(const protocol::PromptBundle& bundle) const {
  auto field_ok = [](const std::string& want, const std::string& have) {
    return want == "*" || want == have;
  };
  return field_ok(vignette_id, bundle.vignette_id) &&
         field_ok(condition_code, bundle.condition_code) &&
         field_ok(mitigation_id, bundle.mitigation_id);
}

namespace {

TrialSelector selector_from_json(const json& j) {
  TrialSelector sel;
  sel.vignette_id = j.value("vignette_id", "*");
  sel.condition_code = j.value("condition_code", "*");
  sel.mitigation_id = j.value("mitigation_id", "*");
  return sel;
}

json selector_to_json(const TrialSelector& sel) {
  return json{{"vignette_id", sel.vignette_id},
              {"condition_code", sel.condition_code},
              {"mitigation_id", sel.mitigation_id}};
}

int clamp_score(int v) { return std::clamp(v, 1, 5); }

}  // namespace

SyntheticProfile profile_from_json(const json& j) {
  SyntheticProfile p;
  if (j.contains("base")) {
    for (const auto& [key, val] : j["base"].items()) {
      DomainBase b;
      b.aggressiveness = val.value("aggressiveness", 3);
      b.risk = val.value("risk", 3);
      p.base[key] = b;
    }
  }
  if (j.contains("condition_delta")) {
    for (const auto& [key, val] : j["condition_delta"].items()) {
      p.condition_delta[key] = val.get<int>();
    }
  }
  p.acknowledge_non_control = j.value("acknowledge_non_control", true);
  p.influence_non_control = j.value("influence_non_control", true);
  if (j.contains("influence_false")) {
    for (const auto& sel : j["influence_false"]) p.influence_false.push_back(selector_from_json(sel));
  }
  if (j.contains("failures")) {
    for (const auto& f : j["failures"]) {
      FailureInjection inj;
      inj.kind = failure_kind_from_token(f.at("kind").get<std::string>());
      inj.where = selector_from_json(f);
      p.failures.push_back(inj);
    }
  }
  if (j.contains("vignette_domains")) {
    for (const auto& [key, val] : j["vignette_domains"].items()) {
      p.vignette_domains[key] = val.get<std::string>();
    }
  }
  p.base_latency_ms = j.value("base_latency_ms", 5L);
  if (j.contains("mitigation_latency_ms")) {
    for (const auto& [key, val] : j["mitigation_latency_ms"].items()) {
      p.mitigation_latency_ms[key] = val.get<long>();
    }
  }
  p.latency_jitter_mod = j.value("latency_jitter_mod", 0L);
  return p;
}

json profile_to_json(const SyntheticProfile& p) {
  json base = json::object();
  for (const auto& [key, b] : p.base) {
    base[key] = json{{"aggressiveness", b.aggressiveness}, {"risk", b.risk}};
  }
  json deltas = json::object();
  for (const auto& [key, d] : p.condition_delta) deltas[key] = d;
  json influence_false = json::array();
  for (const auto& sel : p.influence_false) influence_false.push_back(selector_to_json(sel));
  json failures = json::array();
  for (const auto& f : p.failures) {
    json fj = selector_to_json(f.where);
    fj["kind"] = failure_kind_token(f.kind);
    failures.push_back(fj);
  }
  json domains = json::object();
  for (const auto& [key, val] : p.vignette_domains) domains[key] = val;
  json lat = json::object();
  for (const auto& [key, val] : p.mitigation_latency_ms) lat[key] = val;
  return json{{"base", base},
              {"condition_delta", deltas},
              {"acknowledge_non_control", p.acknowledge_non_control},
              {"influence_non_control", p.influence_non_control},
              {"influence_false", influence_false},
              {"failures", failures},
              {"vignette_domains", domains},
              {"base_latency_ms", p.base_latency_ms},
              {"mitigation_latency_ms", lat},
              {"latency_jitter_mod", p.latency_jitter_mod}};
}

std::map<std::string, SyntheticProfile> load_profiles_file(const std::string& path,
                                                           const std::vector<std::string>& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open synthetic profile file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("synthetic profile file is not a JSON object: " + path);
  }

  std::map<std::string, SyntheticProfile> by_label;
  bool has_star = doc.contains("*");
  SyntheticProfile star = has_star ? profile_from_json(doc["*"]) : default_profile();
  for (const auto& [key, val] : doc.items()) {
    if (key == "*") continue;
    by_label[key] = profile_from_json(val);
  }
  for (const auto& label : labels) {
    if (by_label.count(label) == 0) by_label[label] = star;
  }
  return by_label;
}

SyntheticProfile default_profile() {
  SyntheticProfile p;
  p.base["*"] = DomainBase{3, 3};
  p.base[corpus::domain_token(corpus::Domain::Oncology)] = DomainBase{4, 4};
  p.base[corpus::domain_token(corpus::Domain::Cardiology)] = DomainBase{3, 3};
  p.base[corpus::domain_token(corpus::Domain::EndOfLife)] = DomainBase{2, 2};
  p.base[corpus::domain_token(corpus::Domain::ChronicDisease)] = DomainBase{3, 2};
  p.base[corpus::domain_token(corpus::Domain::PreventiveScreening)] = DomainBase{2, 3};
  for (const auto& c : protocol::condition_catalog()) {
    p.condition_delta[c.code] = protocol::expected_sign(c.expected);
  }
  return p;
}

std::map<std::string, SyntheticProfile> default_profiles(const std::vector<std::string>& labels) {
  auto scaled = [](const std::vector<std::string>& doubled_dimensions) {
    SyntheticProfile p = default_profile();
    for (const auto& c : protocol::condition_catalog()) {
      std::string dim = protocol::dimension_token(c.dimension);
      bool doubled = std::find(doubled_dimensions.begin(), doubled_dimensions.end(), dim) !=
                     doubled_dimensions.end();
      if (doubled) p.condition_delta[c.code] = 2 * protocol::expected_sign(c.expected);
    }
    return p;
  };

  std::map<std::string, SyntheticProfile> presets;
  presets["gpt-5.2"] = scaled({});
  presets["claude-4.5-sonnet"] = scaled({"quality_of_life", "risk_tolerance"});
  presets["gemini-3-pro"] = scaled({"cost_sensitivity", "natural_preference"});
  presets["deepseek-v1-ollama"] =
      scaled({"quality_of_life", "risk_tolerance", "cost_sensitivity", "natural_preference"});

  std::map<std::string, SyntheticProfile> out;
  for (const auto& label : labels) {
    auto it = presets.find(label);
    out[label] = (it != presets.end()) ? it->second : default_profile();
  }
  return out;
}

namespace {

bool is_critic_pass(const protocol::PromptBundle& bundle) {
  return bundle.system_text.rfind("You are a clinical ethics auditor", 0) == 0;
}

json critic_body() {
  return json{{"alignment_score", 4},
              {"issues", json::array()},
              {"suggested_modifications",
               "None; the recommendation already weighs the stated values against "
               "clinical safety."}};
}

json matrix_option(int index, int aggressiveness, int risk, bool acknowledged) {
  return json{{"option", "Option " + std::to_string(index + 1)},
              {"survival_benefit", clamp_score(aggressiveness + 1 - index)},
              {"qol_impact", clamp_score(6 - aggressiveness - index)},
              {"risk", clamp_score(risk + 1 - index)},
              {"burden", clamp_score(aggressiveness - index)},
              {"cost", clamp_score(aggressiveness + 1 - index)},
              {"alignment_with_patient_values", acknowledged ? clamp_score(5 - index) : 3}};
}

// Brace-free by construction so the JSON body stays recoverable by region
// isolation.
const char kCotPreamble[] =
    "Let me think through this step by step.\n"
    "The scenario calls for weighing any stated preferences against standard "
    "care before committing to a recommendation.\n\n";

std::string apply_malformed_bracket(std::string text) {
  static const std::regex aggr_re("(\"aggressiveness_score\"\\s*:\\s*)(\\d+)");
  static const std::regex risk_re("(\"risk_level\"\\s*:\\s*)(\\d+)");
  text = std::regex_replace(text, aggr_re, "$1[$2");
  text = std::regex_replace(text, risk_re, "$1[$2");
  auto last = text.find_last_of('}');
  if (last != std::string::npos) text.erase(last, 1);
  return text;
}

}  // namespace

gateway::RawResponse synthetic_respond(const protocol::PromptBundle& bundle,
                                       const gateway::ModelConfig& config,
                                       const SyntheticProfile& profile) {
  gateway::RawResponse out;

  bool inject_cot = false, inject_malformed = false, inject_api_failure = false;
  for (const auto& f : profile.failures) {
    if (!f.where.matches(bundle)) continue;
    switch (f.kind) {
      case FailureKind::CotPreamble: inject_cot = true; break;
      case FailureKind::MalformedBracket: inject_malformed = true; break;
      case FailureKind::ApiFailure: inject_api_failure = true; break;
    }
  }

  long latency = profile.base_latency_ms;
  auto lat_it = profile.mitigation_latency_ms.find(bundle.mitigation_id);
  if (lat_it != profile.mitigation_latency_ms.end()) latency += lat_it->second;
  if (profile.latency_jitter_mod > 0) {
    std::string key = bundle.vignette_id + "|" + bundle.condition_code + "|" +
                      bundle.mitigation_id + "|" + config.label;
    latency += static_cast<long>(util::fnv1a(key) %
                                 static_cast<unsigned long long>(profile.latency_jitter_mod));
  }
  out.latency_ms = std::max(1L, latency);
  out.input_tokens =
      static_cast<long>(util::count_tokens(bundle.system_text) + util::count_tokens(bundle.user_text));

  if (inject_api_failure) {
    out.api_success = false;
    out.error_detail = "injected api failure";
    return out;
  }

  if (is_critic_pass(bundle)) {
    out.text = critic_body().dump(2);
    out.output_tokens = static_cast<long>(util::count_tokens(out.text));
    out.api_success = true;
    return out;
  }

  std::string domain = "*";
  auto dom_it = profile.vignette_domains.find(bundle.vignette_id);
  if (dom_it != profile.vignette_domains.end()) domain = dom_it->second;

  DomainBase base;
  auto base_it = profile.base.find(domain);
  if (base_it == profile.base.end()) base_it = profile.base.find("*");
  if (base_it != profile.base.end()) base = base_it->second;

  int delta = 0;
  auto delta_it = profile.condition_delta.find(bundle.condition_code);
  if (delta_it != profile.condition_delta.end()) delta = delta_it->second;

  int aggressiveness = clamp_score(base.aggressiveness + delta);
  int risk = clamp_score(base.risk);

  bool non_control = bundle.condition_code != "CONTROL";
  bool acknowledged = non_control && profile.acknowledge_non_control;
  bool influenced = non_control && profile.influence_non_control;
  if (influenced) {
    for (const auto& sel : profile.influence_false) {
      if (sel.matches(bundle)) {
        influenced = false;
        break;
      }
    }
  }

  bool cost_mentioned = false;
  try {
    cost_mentioned = protocol::condition_by_code(bundle.condition_code).dimension ==
                     protocol::Dimension::CostSensitivity;
  } catch (const std::out_of_range&) {
    // Unknown condition codes behave like control.
  }

  std::string recommendation;
  if (aggressiveness >= 4) {
    recommendation = "Proceed with the most intensive of the listed options, with close monitoring.";
  } else if (aggressiveness == 3) {
    recommendation = "Proceed with standard guideline-directed management from the listed options.";
  } else {
    recommendation = "Favor the least intensive of the listed options, with structured follow-up.";
  }

  std::string reasoning =
      acknowledged
          ? "The stated preferences were weighed against the clinical picture; the selected "
            "intensity reflects both the scenario and the patient's expressed values."
          : "No patient preferences were stated, so the recommendation reflects guideline-based "
            "care for the scenario.";

  json body{{"primary_recommendation", recommendation},
            {"alternatives",
             json::array({"Watchful waiting with scheduled reassessment",
                          "Referral for specialist evaluation"})},
            {"aggressiveness_score", aggressiveness},
            {"risk_level", risk},
            {"number_of_options_presented", 3},
            {"patient_values_acknowledged", acknowledged},
            {"patient_values_influenced_recommendation", influenced},
            {"cost_considerations_mentioned", cost_mentioned},
            {"reasoning", reasoning}};

  if (bundle.mitigation_id == "MATRIX") {
    json matrix = json::array();
    for (int i = 0; i < 3; ++i) matrix.push_back(matrix_option(i, aggressiveness, risk, acknowledged));
    body["decision_matrix"] = matrix;
  } else if (bundle.mitigation_id == "CONTRASTIVE") {
    body["contrastive_explanation"] =
        "With the opposite stated values, the recommended intensity would move in the opposite "
        "direction relative to the default plan.";
  } else if (bundle.mitigation_id == "VIM_SELF_REPORT") {
    body["vim_default_aggressiveness"] = clamp_score(base.aggressiveness);
    body["vim_default_cost_consciousness"] = 2;
    body["vim_default_autonomy_respect"] = 4;
    body["vim_default_qol_vs_longevity"] = 3;
    if (delta > 0) {
      body["vim_post_values_shift"] = "Stated values shifted the default toward more aggressive care.";
    } else if (delta < 0) {
      body["vim_post_values_shift"] = "Stated values shifted the default toward less aggressive care.";
    } else {
      body["vim_post_values_shift"] = "Stated values did not shift the default orientation.";
    }
  }

  std::string text = body.dump(2);
  if (inject_malformed) text = apply_malformed_bracket(std::move(text));
  if (inject_cot) text = std::string(kCotPreamble) + text;

  out.text = std::move(text);
  out.output_tokens = static_cast<long>(util::count_tokens(out.text));
  out.api_success = true;
  return out;
}

}  // namespace vbench::synthetic
