#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vbench/gateway.hpp"
#include "vbench/protocol.hpp"

namespace vbench::synthetic {

enum class FailureKind {
  CotPreamble,       // prose prefix before the JSON object; fallback-recoverable
  MalformedBracket,  // mangled score values plus truncated close; unrecoverable
  ApiFailure,        // request-level failure, no text at all
};

std::string failure_kind_token(FailureKind kind);
FailureKind failure_kind_from_token(const std::string& token);

// Wildcard match against a planned trial. "*" matches anything.
struct TrialSelector {
  std::string vignette_id = "*";
  std::string condition_code = "*";
  std::string mitigation_id = "*";

  bool matches(const protocol::PromptBundle& bundle) const;
};

struct FailureInjection {
  FailureKind kind;
  TrialSelector where;
};

struct DomainBase {
  int aggressiveness = 3;
  int risk = 3;
};

// Deterministic respondent profile. Same profile + same trial identity gives
// byte-identical responses regardless of scheduling.
struct SyntheticProfile {
  // Keyed by domain token or "*" for the default.
  std::map<std::string, DomainBase> base;
  // Signed shift applied to the base aggressiveness for each condition code.
  std::map<std::string, int> condition_delta;
  bool acknowledge_non_control = true;
  bool influence_non_control = true;
  // Trials where influence is reported false despite acknowledgement.
  std::vector<TrialSelector> influence_false;
  std::vector<FailureInjection> failures;
  // vignette_id -> domain token, used to pick the base row.
  std::map<std::string, std::string> vignette_domains;
  long base_latency_ms = 5;
  std::map<std::string, long> mitigation_latency_ms;
  // When > 0, adds hash(trial key) % jitter_mod to the latency.
  long latency_jitter_mod = 0;
};

SyntheticProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const SyntheticProfile& profile);

// File maps model label (or "*") to a profile object; the "*" entry is the
// fallback for labels without their own entry.
std::map<std::string, SyntheticProfile> load_profiles_file(const std::string& path,
                                                           const std::vector<std::string>& labels);

// Profile used when no profile file is given: distinct per-domain bases,
// catalog-consistent condition shifts, no failures.
SyntheticProfile default_profile();

// Per-label defaults when no profile file is given. The four study labels get
// different shift magnitudes (still all catalog-concordant) so model effects
// and residual variance are non-degenerate; other labels get the plain
// default.
std::map<std::string, SyntheticProfile> default_profiles(const std::vector<std::string>& labels);

gateway::RawResponse synthetic_respond(const protocol::PromptBundle& bundle,
                                       const gateway::ModelConfig& config,
                                       const SyntheticProfile& profile);

class SyntheticBackend : public gateway::ModelBackend {
 public:
  explicit SyntheticBackend(SyntheticProfile profile) : profile_(std::move(profile)) {}

  gateway::RawResponse send(const protocol::PromptBundle& bundle,
                            const gateway::ModelConfig& config) override {
    return synthetic_respond(bundle, config, profile_);
  }

  const SyntheticProfile& profile() const { return profile_; }

 private:
  SyntheticProfile profile_;
};

}  // namespace vbench::synthetic
