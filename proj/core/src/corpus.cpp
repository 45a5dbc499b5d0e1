#include "vbench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "vbench/util/strings.hpp"

namespace vbench::corpus {

namespace fs = std::filesystem;
using nlohmann::json;
using util::normalize_whitespace;
using util::to_lower;
using util::trim;

namespace {

struct DomainLexicon {
  Domain domain;
  std::vector<std::string> keywords;      // lowercase
  std::vector<std::string> icd_prefixes;  // uppercase
};

const std::vector<DomainLexicon>& lexicons() {
  static const std::vector<DomainLexicon> lex = {
      {Domain::Oncology,
       {"cancer", "tumor", "chemo", "chemotherapy", "radiation", "oncology", "oncologist",
        "biopsy", "malignant", "metastasis", "metastatic", "carcinoma", "lymphoma", "leukemia",
        "sarcoma", "melanoma", "neoplasm", "neoplastic"},
       {"C", "D0", "D1", "D2", "D3", "D4"}},
      {Domain::Cardiology,
       {"heart", "cardiac", "chest pain", "hypertension", "atrial", "coronary", "stent",
        "arrhythmia", "chf", "congestive heart failure", "pacemaker", "defibrillator",
        "atrial fibrillation", "blood pressure", "echocardiogram", "ejection fraction"},
       {"I"}},
      {Domain::EndOfLife,
       {"hospice", "palliative", "comfort care", "advance directive", "goals of care", "dnr",
        "dnar", "code status", "terminal", "prognosis", "end of life", "dying",
        "comfort measures"},
       {"Z51.5"}},
      {Domain::ChronicDisease,
       {"diabetes", "a1c", "hemoglobin a1c", "copd", "chronic obstructive", "asthma",
        "depression", "anxiety", "chronic pain", "obesity", "hypertension", "hyperlipidemia",
        "chronic kidney disease", "ckd", "insulin", "metformin"},
       {"E", "F", "J4", "M"}},
      {Domain::PreventiveScreening,
       {"screening", "colonoscopy", "mammogram", "mammography", "psa",
        "prostate-specific antigen", "ldct", "low-dose ct", "preventive", "vaccine",
        "immunization", "pap smear", "cervical screening", "genetic testing"},
       {"Z"}},
  };
  return lex;
}

struct SignalLexicon {
  SignalGroup group;
  std::vector<std::string> keywords;
};

const std::vector<SignalLexicon>& signal_lexicons() {
  static const std::vector<SignalLexicon> lex = {
      {SignalGroup::MultipleOptions,
       {"options", "alternatives", "choice", "versus", "vs", "could also", "another option",
        "we discussed", "considered"}},
      {SignalGroup::PatientPreferences,
       {"patient prefer", "patient wants", "patient concern", "patient worried",
        "patient request", "patient declined", "patient refused", "patient asked",
        "important to the patient", "goals"}},
      {SignalGroup::ClinicalTradeoffs,
       {"risk", "benefit", "side effect", "quality of life", "survival", "prognosis",
        "trade-off", "tradeoff", "weigh", "balance", "burden"}},
      {SignalGroup::SharedDecisionMaking,
       {"shared decision", "informed consent", "goals of care", "patient education", "counseled",
        "risks and benefits", "decision made together"}},
  };
  return lex;
}

std::string normalized_lower(const std::string& text) {
  return normalize_whitespace(to_lower(text));
}

}  // namespace

std::string domain_token(Domain d) {
  switch (d) {
    case Domain::Oncology: return "oncology";
    case Domain::Cardiology: return "cardiology";
    case Domain::EndOfLife: return "end_of_life";
    case Domain::ChronicDisease: return "chronic_disease";
    case Domain::PreventiveScreening: return "preventive_screening";
  }
  return "unknown";
}

std::string domain_display(Domain d) {
  switch (d) {
    case Domain::Oncology: return "Oncology";
    case Domain::Cardiology: return "Cardiology";
    case Domain::EndOfLife: return "End-of-Life Care";
    case Domain::ChronicDisease: return "Chronic Disease Management";
    case Domain::PreventiveScreening: return "Preventive Screening";
  }
  return "Unknown";
}

std::optional<Domain> domain_from_token(const std::string& token) {
  for (Domain d : kAllDomains)
    if (domain_token(d) == token) return d;
  return std::nullopt;
}

std::string sex_token(Sex s) {
  switch (s) {
    case Sex::Female: return "female";
    case Sex::Male: return "male";
    case Sex::Unspecified: return "unspecified";
  }
  return "unspecified";
}

std::optional<DomainLabel> classify_domain(const EncounterNote& note) {
  const std::string text = normalized_lower(note.text);
  std::vector<std::string> codes_upper;
  codes_upper.reserve(note.icd_codes.size());
  for (const auto& c : note.icd_codes) {
    std::string u = trim(c);
    std::transform(u.begin(), u.end(), u.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    codes_upper.push_back(std::move(u));
  }

  std::array<int, kDomainCount> matches{};
  int idx = 0;
  for (const auto& lex : lexicons()) {
    int m = 0;
    for (const auto& kw : lex.keywords)
      if (util::contains_ci(text, kw)) ++m;  // distinct keywords, not occurrences
    for (const auto& code : codes_upper) {
      bool hit = false;
      for (const auto& prefix : lex.icd_prefixes)
        if (code.rfind(prefix, 0) == 0) { hit = true; break; }
      if (hit) ++m;  // each code counts once per domain
    }
    matches[idx++] = m;
  }

  int total = 0, best = 0, best_idx = -1;
  for (int i = 0; i < kDomainCount; ++i) {
    total += matches[i];
    if (matches[i] > best) {  // strict > keeps earliest domain on ties
      best = matches[i];
      best_idx = i;
    }
  }
  if (total == 0) return std::nullopt;
  return DomainLabel{lexicons()[static_cast<size_t>(best_idx)].domain,
                     static_cast<double>(best) / static_cast<double>(total)};
}

SensitivitySignals detect_preference_sensitivity(const std::string& text) {
  const std::string norm = normalized_lower(text);
  SensitivitySignals out;
  int idx = 0;
  for (const auto& lex : signal_lexicons()) {
    int m = 0;
    for (const auto& kw : lex.keywords)
      if (util::contains_ci(norm, kw)) ++m;
    out.counts[idx++] = m;
  }
  return out;
}

namespace {

std::string apply_regex(const std::string& text, const std::regex& re,
                        const std::function<std::string(const std::smatch&)>& repl, int* count) {
  std::string out;
  out.reserve(text.size());
  auto begin = std::sregex_iterator(text.begin(), text.end(), re);
  auto end = std::sregex_iterator();
  size_t last = 0;
  for (auto it = begin; it != end; ++it) {
    const std::smatch& m = *it;
    out.append(text, last, static_cast<size_t>(m.position()) - last);
    std::string r = repl(m);
    if (r != m.str()) ++*count;
    out += r;
    last = static_cast<size_t>(m.position() + m.length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::string age_bin(int age) {
  int lo = (age / 5) * 5;
  return std::to_string(lo) + "-" + std::to_string(lo + 4);
}

}  // namespace

RedactionResult redact_phi(const std::string& text) {
  RedactionResult result;
  result.counts = {{"ssn", 0}, {"phone", 0}, {"email", 0}, {"date", 0}, {"age", 0}, {"mrn", 0}};
  std::string s = text;

  static const std::regex ssn_re(R"(\b\d{3}-\d{2}-\d{4}\b)");
  s = apply_regex(s, ssn_re, [](const std::smatch&) { return std::string("[REDACTED_SSN]"); },
                  &result.counts["ssn"]);

  static const std::regex email_re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})");
  s = apply_regex(s, email_re, [](const std::smatch&) { return std::string("[REDACTED_EMAIL]"); },
                  &result.counts["email"]);

  // (555) 123-4567 | 555-123-4567 | 555.123.4567 | +1 555-123-4567 | 555 123 4567
  static const std::regex phone_re(
      R"((\+?1[-. ])?(\(\d{3}\)\s*|\d{3}[-. ])\d{3}[-. ]\d{4}\b)");
  s = apply_regex(s, phone_re, [](const std::smatch&) { return std::string("[REDACTED_PHONE]"); },
                  &result.counts["phone"]);

  // YYYY-MM-DD, M/D/YY(YY), and written month-day-year forms.
  static const std::regex iso_date_re(R"(\b\d{4}-\d{2}-\d{2}\b)");
  s = apply_regex(s, iso_date_re, [](const std::smatch&) { return std::string("[REDACTED_DATE]"); },
                  &result.counts["date"]);
  static const std::regex num_date_re(R"(\b\d{1,2}/\d{1,2}/\d{2,4}\b)");
  s = apply_regex(s, num_date_re, [](const std::smatch&) { return std::string("[REDACTED_DATE]"); },
                  &result.counts["date"]);
  static const std::regex written_date_re(
      R"(\b(January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec)\.?\s+\d{1,2}(st|nd|rd|th)?,?\s+\d{4}\b)",
      std::regex::icase);
  s = apply_regex(s, written_date_re,
                  [](const std::smatch&) { return std::string("[REDACTED_DATE]"); },
                  &result.counts["date"]);

  // Ages bin to 5-year ranges. An already-binned "65-69 year old" re-matches with
  // the range group set and is emitted unchanged, which keeps redaction idempotent.
  static const std::regex age_unit_re(
      R"((\d{1,3})(\s*-\s*(\d{1,3}))?([- ]?\s*)(years?[- ]old|y/o|y\.o\.|yo\b))",
      std::regex::icase);
  s = apply_regex(
      s, age_unit_re,
      [](const std::smatch& m) {
        if (m[2].matched) return m.str();
        return age_bin(std::stoi(m[1].str())) + m[4].str() + m[5].str();
      },
      &result.counts["age"]);
  static const std::regex age_label_re(R"((\baged?\s*:?\s+)(\d{1,3})(-\d{1,3})?\b)",
                                       std::regex::icase);
  s = apply_regex(
      s, age_label_re,
      [](const std::smatch& m) {
        if (m[3].matched) return m.str();
        return m[1].str() + age_bin(std::stoi(m[2].str()));
      },
      &result.counts["age"]);

  // MRNs last: any surviving run of 6+ digits.
  static const std::regex mrn_re(R"(\d{6,})");
  s = apply_regex(s, mrn_re, [](const std::smatch&) { return std::string("[REDACTED_MRN]"); },
                  &result.counts["mrn"]);

  result.text = std::move(s);
  return result;
}

namespace {

Sex infer_sex(const std::string& text) {
  int female = 0, male = 0;
  std::string tok;
  auto flush = [&] {
    if (tok == "she" || tok == "her" || tok == "hers" || tok == "female" || tok == "woman")
      ++female;
    else if (tok == "he" || tok == "him" || tok == "his" || tok == "male" || tok == "man")
      ++male;
    tok.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c)))
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else
      flush();
  }
  flush();
  if (female > male) return Sex::Female;
  if (male > female) return Sex::Male;
  return Sex::Unspecified;
}

std::string extract_age_range(const std::string& redacted) {
  static const std::regex bin_re(
      R"((\d{1,3}-\d{1,3})\s*[- ]?\s*(years?[- ]old|y/o|y\.o\.|yo\b)|\baged?\s*:?\s+(\d{1,3}-\d{1,3})\b)",
      std::regex::icase);
  std::smatch m;
  if (std::regex_search(redacted, m, bin_re)) return m[1].matched ? m[1].str() : m[3].str();
  return "adult";
}

}  // namespace

std::string Vignette::text() const {
  std::string t = "A " + age_range + " " + sex_token(sex) +
                  " patient with relevant comorbidities presents with: " + clinical_summary + ".";
  t += "\nDecision point: " + decision_point;
  t += "\nOptions: " + util::join(options, "; ");
  return t;
}

Vignette extract_vignette(const EncounterNote& note, const CorpusConfig& config) {
  auto label = classify_domain(note);
  if (!label || label->confidence < config.min_domain_confidence)
    throw std::invalid_argument("note " + note.note_id +
                                " is not classified at or above the confidence threshold");
  if (!detect_preference_sensitivity(note.text).flagged())
    throw std::invalid_argument("note " + note.note_id + " is not preference-sensitive");

  RedactionResult red = redact_phi(note.text);

  std::vector<std::string> segments;
  std::string seg;
  auto push_seg = [&] {
    std::string t = normalize_whitespace(seg);
    if (!t.empty() && segments.size() < 3) segments.push_back(t);
    seg.clear();
  };
  for (char c : red.text) {
    if (c == '.' || c == ';' || c == '\n') push_seg();
    else seg.push_back(c);
  }
  push_seg();
  if (segments.empty()) throw ExtractionError("note " + note.note_id + ": no non-empty segments");

  const DomainDefaults& defaults = domain_defaults().at(label->domain);
  Vignette v;
  v.vignette_id = "vig-" + note.note_id;
  v.domain = *label;
  v.age_range = extract_age_range(red.text);
  v.sex = infer_sex(red.text);
  v.clinical_summary = util::join(segments, "; ");
  v.decision_point = defaults.decision_point;
  v.options = defaults.options;
  v.extraction_quality = "medium";
  v.source_note_id = note.note_id;
  return v;
}

ExtractionOutput extract_corpus(const std::vector<EncounterNote>& notes, const CorpusConfig& config) {
  ExtractionOutput out;
  size_t limit = notes.size();
  if (config.max_notes > 0) limit = std::min<size_t>(limit, static_cast<size_t>(config.max_notes));
  for (Domain d : kAllDomains) out.funnel.extracted_per_domain[domain_token(d)] = 0;

  for (size_t i = 0; i < limit; ++i) {
    const EncounterNote& note = notes[i];
    ++out.funnel.loaded;
    auto label = classify_domain(note);
    if (!label || label->confidence < config.min_domain_confidence) continue;
    ++out.funnel.classified;
    if (!detect_preference_sensitivity(note.text).flagged()) continue;
    ++out.funnel.flagged;
    try {
      Vignette v = extract_vignette(note, config);
      ++out.funnel.extracted;
      ++out.funnel.extracted_per_domain[domain_token(v.domain.domain)];
      out.vignettes.push_back(std::move(v));
    } catch (const ExtractionError&) {
      // counted in the funnel gap between flagged and extracted
    }
  }

  if (config.min_per_domain > 0)
    for (Domain d : kAllDomains)
      if (out.funnel.extracted_per_domain[domain_token(d)] < config.min_per_domain)
        out.funnel.below_minimum.push_back(domain_token(d));
  return out;
}

const std::map<Domain, DomainDefaults>& domain_defaults() {
  static const std::map<Domain, DomainDefaults> defaults = {
      {Domain::Oncology,
       {"Select the next step in cancer treatment planning.",
        {"Begin systemic therapy", "Refer for surgical evaluation",
         "Pursue watchful waiting with supportive care"}}},
      {Domain::Cardiology,
       {"Choose the management approach for symptomatic cardiac disease.",
        {"Start guideline-directed medical therapy", "Refer for invasive evaluation",
         "Lifestyle modification with close follow-up"}}},
      {Domain::EndOfLife,
       {"Clarify goals of care and the intensity of ongoing treatment.",
        {"Continue disease-directed treatment", "Transition to comfort-focused care",
         "Time-limited trial of current therapy"}}},
      {Domain::ChronicDisease,
       {"Adjust the chronic disease management plan.",
        {"Intensify pharmacologic therapy", "Continue current regimen with monitoring",
         "Simplify the regimen and address adherence barriers"}}},
      {Domain::PreventiveScreening,
       {"Decide whether to proceed with the recommended screening.",
        {"Proceed with screening now", "Defer screening and reassess at the next visit",
         "Discuss alternative screening modalities"}}},
  };
  return defaults;
}

std::string domain_defaults_json() {
  json j = json::object();
  for (const auto& [domain, d] : domain_defaults()) {
    j[domain_token(domain)] = {{"decision_point", d.decision_point}, {"options", d.options}};
  }
  return j.dump(2) + "\n";
}

std::vector<EncounterNote> load_notes_dir(const std::string& dir, int max_notes) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<EncounterNote> notes;
  for (const auto& path : files) {
    if (max_notes > 0 && static_cast<int>(notes.size()) >= max_notes) break;
    EncounterNote note;
    note.note_id = path.stem().string();
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    note.text = ss.str();
    fs::path sidecar = path;
    sidecar.replace_extension(".icd");
    if (fs::exists(sidecar)) {
      std::ifstream codes(sidecar);
      std::string line;
      while (std::getline(codes, line))
        for (const auto& piece : util::split(line, ','))
          if (std::string c = trim(piece); !c.empty()) note.icd_codes.push_back(c);
    }
    notes.push_back(std::move(note));
  }
  return notes;
}

std::vector<EncounterNote> load_notes_jsonl(const std::string& path, int max_notes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open notes file: " + path);
  std::vector<EncounterNote> notes;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (max_notes > 0 && static_cast<int>(notes.size()) >= max_notes) break;
    json j = json::parse(line);
    EncounterNote note;
    note.note_id = j.value("note_id", "");
    note.text = j.value("text", "");
    if (j.contains("icd_codes"))
      for (const auto& c : j["icd_codes"]) note.icd_codes.push_back(c.get<std::string>());
    notes.push_back(std::move(note));
  }
  return notes;
}

namespace {

json vignette_to_json(const Vignette& v) {
  return json{{"vignette_id", v.vignette_id},
              {"domain", {{"label", domain_token(v.domain.domain)}, {"confidence", v.domain.confidence}}},
              {"age_range", v.age_range},
              {"sex", sex_token(v.sex)},
              {"clinical_summary", v.clinical_summary},
              {"decision_point", v.decision_point},
              {"options", v.options},
              {"extraction_quality", v.extraction_quality},
              {"source_note_id", v.source_note_id}};
}

Vignette vignette_from_json(const json& j) {
  Vignette v;
  v.vignette_id = j.at("vignette_id").get<std::string>();
  auto dom = domain_from_token(j.at("domain").at("label").get<std::string>());
  if (!dom) throw std::runtime_error("unknown domain token in vignette file");
  v.domain = DomainLabel{*dom, j.at("domain").at("confidence").get<double>()};
  v.age_range = j.at("age_range").get<std::string>();
  std::string sex = j.at("sex").get<std::string>();
  v.sex = sex == "female" ? Sex::Female : sex == "male" ? Sex::Male : Sex::Unspecified;
  v.clinical_summary = j.at("clinical_summary").get<std::string>();
  v.decision_point = j.at("decision_point").get<std::string>();
  for (const auto& o : j.at("options")) v.options.push_back(o.get<std::string>());
  v.extraction_quality = j.value("extraction_quality", "medium");
  v.source_note_id = j.value("source_note_id", "");
  return v;
}

}  // namespace

std::string vignettes_to_json(const std::vector<Vignette>& vignettes) {
  json arr = json::array();
  for (const auto& v : vignettes) arr.push_back(vignette_to_json(v));
  return arr.dump(2) + "\n";
}

std::vector<Vignette> vignettes_from_json(const std::string& json_text) {
  json arr = json::parse(json_text);
  std::vector<Vignette> out;
  for (const auto& j : arr) out.push_back(vignette_from_json(j));
  return out;
}

std::vector<Vignette> vignettes_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vignettes file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return vignettes_from_json(ss.str());
}

}  // namespace vbench::corpus
