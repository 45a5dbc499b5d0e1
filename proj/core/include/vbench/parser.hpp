#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace vbench::parser {

enum class ParseMethod { Direct, Fallback, Failed };
std::string parse_method_token(ParseMethod m);  // "direct" / "fallback" / "failed"

struct ParsedResponse {
  bool parse_success = false;
  ParseMethod method = ParseMethod::Failed;

  std::string primary_recommendation;
  std::vector<std::string> alternatives;
  int aggressiveness_score = 0;  // in [1,5] whenever parse_success is true
  int risk_level = 0;            // in [1,5] whenever parse_success is true
  int number_of_options_presented = 0;
  bool patient_values_acknowledged = false;
  bool patient_values_influenced_recommendation = false;
  bool cost_considerations_mentioned = false;
  std::string reasoning;

  // Response keys outside the base schema (decision_matrix, vim_*, ...).
  // Populated only when a full JSON object was recovered.
  nlohmann::json extras = nlohmann::json::object();
};

// Total response parser; never throws.
//
// Pipeline: strip markdown code fences, then attempt a strict JSON parse of
// the whole remaining text (method = direct). On failure, fall back: first
// strict-parse the first balanced {...} region (JSON embedded in prose), then
// regex key-value extraction (method = fallback). Fallback succeeds only when
// both numeric scores and both patient-value booleans are recovered.
//
// Scores outside [1,5] are rejected, not clamped: the trial fails parsing.
// String-typed numerals ("3") and booleans ("true") are coerced.
ParsedResponse parse_response(const std::string& raw);

// Fence stripping stage, exposed for tests.
std::string strip_code_fences(const std::string& text);

}  // namespace vbench::parser
