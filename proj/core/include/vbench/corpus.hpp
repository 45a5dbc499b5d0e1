#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vbench::corpus {

enum class Domain { Oncology, Cardiology, EndOfLife, ChronicDisease, PreventiveScreening };
inline constexpr int kDomainCount = 5;
inline constexpr std::array<Domain, kDomainCount> kAllDomains = {
    Domain::Oncology, Domain::Cardiology, Domain::EndOfLife, Domain::ChronicDisease,
    Domain::PreventiveScreening};

// Stable serialized token ("oncology", "end_of_life", ...) and display name ("Oncology", ...).
std::string domain_token(Domain d);
std::string domain_display(Domain d);
std::optional<Domain> domain_from_token(const std::string& token);

struct DomainLabel {
  Domain domain;
  double confidence;  // assigned-domain matches / total matches across all domains
};

struct EncounterNote {
  std::string note_id;
  std::string text;
  std::vector<std::string> icd_codes;
};

enum class SignalGroup { MultipleOptions, PatientPreferences, ClinicalTradeoffs, SharedDecisionMaking };
inline constexpr int kSignalGroupCount = 4;

struct SensitivitySignals {
  std::array<int, kSignalGroupCount> counts{};  // distinct keywords matched per group

  int total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
  int groups_hit() const {
    int g = 0;
    for (int c : counts) g += (c > 0);
    return g;
  }
  // A note is preference-sensitive when at least 3 signals span at least 2 groups.
  bool flagged() const { return total() >= 3 && groups_hit() >= 2; }
};

struct RedactionResult {
  std::string text;
  std::map<std::string, int> counts;  // per category: ssn, phone, email, date, age, mrn
};

enum class Sex { Female, Male, Unspecified };
std::string sex_token(Sex s);

struct Vignette {
  std::string vignette_id;
  DomainLabel domain;
  std::string age_range;  // "65-69", or "adult" when no age was found
  Sex sex = Sex::Unspecified;
  std::string clinical_summary;
  std::string decision_point;
  std::vector<std::string> options;
  std::string extraction_quality;  // always "medium" for template extractions
  std::string source_note_id;

  // Scenario text used in prompts. Starts with the fixed template sentence
  // "A [age-range] [sex] patient with relevant comorbidities presents with: ..."
  // followed by the decision point and option list.
  std::string text() const;
};

struct CorpusConfig {
  double min_domain_confidence = 0.05;
  int min_per_domain = 0;  // reporting threshold only; extraction keeps everything
  int max_notes = 0;       // 0 = no cap
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keyword/ICD-prefix classification. Returns nullopt when no keyword and no
// ICD prefix matches in any domain. Ties break by domain declaration order
// (Oncology > Cardiology > EndOfLife > ChronicDisease > PreventiveScreening).
std::optional<DomainLabel> classify_domain(const EncounterNote& note);

// Distinct-keyword signal counts over the four preference-sensitivity groups.
SensitivitySignals detect_preference_sensitivity(const std::string& text);

// Regex PHI redaction: SSNs, phone numbers, emails, dates and MRNs become
// [REDACTED_*] tokens; ages collapse to 5-year bins ("67 year old" -> "65-69
// year old"). Idempotent: redact(redact(x)) == redact(x).
RedactionResult redact_phi(const std::string& text);

// Template vignette extraction. Preconditions (classified at or above the
// confidence threshold, sensitivity-flagged) are validated here; violations
// throw std::invalid_argument. Zero non-empty segments throw ExtractionError.
Vignette extract_vignette(const EncounterNote& note, const CorpusConfig& config = {});

struct FunnelStats {
  long loaded = 0;
  long classified = 0;  // domain match at/above the confidence threshold
  long flagged = 0;     // classified and preference-sensitive
  long extracted = 0;   // flagged and extraction succeeded
  std::map<std::string, long> extracted_per_domain;  // domain token -> count
  std::vector<std::string> below_minimum;            // domains under min_per_domain
};

struct ExtractionOutput {
  std::vector<Vignette> vignettes;
  FunnelStats funnel;
};

ExtractionOutput extract_corpus(const std::vector<EncounterNote>& notes, const CorpusConfig& config = {});

// Per-domain default decision point and options used by template extraction.
struct DomainDefaults {
  std::string decision_point;
  std::vector<std::string> options;
};
const std::map<Domain, DomainDefaults>& domain_defaults();
std::string domain_defaults_json();  // mirror of the shipped data file

// Note loading: a directory of <id>.txt files (optional <id>.icd sidecar with
// one code per line or comma-separated), or a JSONL file with
// {"note_id": ..., "text": ..., "icd_codes": [...]} objects.
std::vector<EncounterNote> load_notes_dir(const std::string& dir, int max_notes = 0);
std::vector<EncounterNote> load_notes_jsonl(const std::string& path, int max_notes = 0);

// Vignette JSON array I/O (field names match the Vignette struct).
std::string vignettes_to_json(const std::vector<Vignette>& vignettes);
std::vector<Vignette> vignettes_from_json(const std::string& json_text);
std::vector<Vignette> vignettes_from_json_file(const std::string& path);

}  // namespace vbench::corpus
