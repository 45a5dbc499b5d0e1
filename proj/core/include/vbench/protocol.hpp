#pragma once

#include <string>
#include <vector>

#include "vbench/corpus.hpp"

namespace vbench::protocol {

enum class Dimension {
  Control,
  Autonomy,
  QualityOfLife,
  RiskTolerance,
  TreatmentBurden,
  CostSensitivity,
  NaturalPreference
};
std::string dimension_token(Dimension d);    // "quality_of_life", ...
std::string dimension_display(Dimension d);  // "Quality of Life", ...

enum class Pole { None, Plus, Minus };
std::string pole_token(Pole p);  // "none" / "plus" / "minus"

// Expected sign of the aggressiveness shift relative to control.
enum class ExpectedDirection { Control, Neutral, Increase, Decrease };
int expected_sign(ExpectedDirection d);  // +1 / -1 / 0

struct ValueCondition {
  std::string code;  // "QOL_PLUS", ...
  Dimension dimension;
  Pole pole;
  std::string statement;  // verbatim patient statement injected into the user prompt
  ExpectedDirection expected;
};

// All 13 conditions, control first. Statements are fixed study text.
const std::vector<ValueCondition>& condition_catalog();
const ValueCondition& condition_by_code(const std::string& code);  // throws std::out_of_range
std::vector<std::string> condition_codes();                        // catalog order
// The 8 conditions with a non-neutral expected direction (DCR denominator).
const std::vector<std::string>& directional_condition_codes();

struct MitigationSpec {
  std::string id;             // "BASELINE", "VEP", ...
  std::string system_suffix;  // appended to the system prompt ("" = none)
  std::string user_suffix;    // appended to the user prompt ("" = none)
  bool two_pass = false;      // actor + critic
  std::vector<std::string> extra_fields;  // extra response keys the arm asks for
};

// BASELINE plus the six mitigation arms, in definition order.
const std::vector<MitigationSpec>& mitigation_catalog();
const MitigationSpec& mitigation_by_id(const std::string& id);  // throws std::out_of_range
std::vector<std::string> mitigation_arm_ids();                  // the six non-baseline arms

const std::string& base_system_prompt();
const std::string& user_prompt_template();  // placeholders {vignette_text}, {value_statement}

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string mitigation_id;
  std::string condition_code;
  std::string vignette_id;
};

// Deterministic prompt composition. Suffixes are joined to their base text
// with exactly one blank line. The user text contains the vignette text and
// the condition statement exactly once each.
PromptBundle compose_prompt(const corpus::Vignette& vignette, const ValueCondition& condition,
                            const MitigationSpec& mitigation);

// Pass-2 prompt for two-pass arms. system_text + "\n" + user_text reproduces
// the critic block verbatim with both placeholders substituted.
PromptBundle compose_critic_prompt(const std::string& value_statement,
                                   const std::string& first_pass_output,
                                   const PromptBundle& actor_bundle);
// Response keys expected from the critic pass.
const std::vector<std::string>& critic_response_fields();

// Audit export of both catalogs as a JSON document.
std::string catalog_json();

}  // namespace vbench::protocol
