#include "vbench/parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <regex>

#include "vbench/util/strings.hpp"

namespace vbench::parser {

using nlohmann::json;

std::string parse_method_token(ParseMethod m) {
  switch (m) {
    case ParseMethod::Direct: return "direct";
    case ParseMethod::Fallback: return "fallback";
    case ParseMethod::Failed: return "failed";
  }
  return "failed";
}

std::string strip_code_fences(const std::string& text) {
  // Drop every ``` fence marker together with its language tag.
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 3, "```") == 0) {
      i += 3;
      while (i < text.size() && text[i] != '\n' && !std::isspace(static_cast<unsigned char>(text[i])))
        ++i;  // language tag
      continue;
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

namespace {

const std::vector<std::string>& schema_keys() {
  static const std::vector<std::string> keys = {
      "primary_recommendation",
      "alternatives",
      "aggressiveness_score",
      "risk_level",
      "number_of_options_presented",
      "patient_values_acknowledged",
      "patient_values_influenced_recommendation",
      "cost_considerations_mentioned",
      "reasoning"};
  return keys;
}

std::optional<int> coerce_int(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string s = util::trim(v.get<std::string>());
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    double d = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    if (d == std::floor(d)) return static_cast<int>(d);
  }
  return std::nullopt;
}

std::optional<bool> coerce_bool(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const std::string s = util::to_lower(util::trim(v.get<std::string>()));
    if (s == "true") return true;
    if (s == "false") return false;
  }
  return std::nullopt;
}

bool valid_score(int s) { return s >= 1 && s <= 5; }

// Fills a ParsedResponse from a full JSON object. Returns false when the
// required scores are missing, non-integral or out of range.
bool extract_from_object(const json& obj, ParsedResponse* out) {
  if (!obj.is_object()) return false;
  auto score = [&](const char* key) -> std::optional<int> {
    if (!obj.contains(key)) return std::nullopt;
    auto v = coerce_int(obj.at(key));
    if (v && valid_score(*v)) return v;
    return std::nullopt;
  };
  auto aggr = score("aggressiveness_score");
  auto risk = score("risk_level");
  if (!aggr || !risk) return false;
  out->aggressiveness_score = *aggr;
  out->risk_level = *risk;

  if (obj.contains("primary_recommendation") && obj.at("primary_recommendation").is_string())
    out->primary_recommendation = obj.at("primary_recommendation").get<std::string>();
  if (obj.contains("reasoning") && obj.at("reasoning").is_string())
    out->reasoning = obj.at("reasoning").get<std::string>();
  if (obj.contains("alternatives") && obj.at("alternatives").is_array())
    for (const auto& a : obj.at("alternatives"))
      out->alternatives.push_back(a.is_string() ? a.get<std::string>() : a.dump());
  if (obj.contains("number_of_options_presented"))
    if (auto n = coerce_int(obj.at("number_of_options_presented")))
      out->number_of_options_presented = *n;
  auto flag = [&](const char* key, bool* dst) {
    if (obj.contains(key))
      if (auto b = coerce_bool(obj.at(key))) *dst = *b;
  };
  flag("patient_values_acknowledged", &out->patient_values_acknowledged);
  flag("patient_values_influenced_recommendation",
       &out->patient_values_influenced_recommendation);
  flag("cost_considerations_mentioned", &out->cost_considerations_mentioned);

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : schema_keys())
      if (k == it.key()) { known = true; break; }
    if (!known) out->extras[it.key()] = it.value();
  }
  return true;
}

// First balanced top-level {...} region, string-aware. Empty when none closes.
std::string first_balanced_object(const std::string& text) {
  size_t start = text.find('{');
  if (start == std::string::npos) return {};
  int depth = 0;
  bool in_string = false, escape = false;
  for (size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escape) escape = false;
      else if (c == '\\') escape = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return {};
}

std::optional<std::string> regex_find(const std::string& text, const std::regex& re, int group) {
  std::smatch m;
  if (std::regex_search(text, m, re)) return m[group].str();
  return std::nullopt;
}

std::string unescape_json_string(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char n = s[++i];
      switch (n) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(n);
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Regex key-value recovery over broken JSON. Success requires both scores
// and both patient-value booleans.
bool regex_extract(const std::string& text, ParsedResponse* out) {
  auto int_field = [&](const char* key) -> std::optional<int> {
    std::regex re("\"" + std::string(key) + "\"\\s*:\\s*\"?(-?\\d+(?:\\.\\d+)?)\"?");
    if (auto s = regex_find(text, re, 1)) {
      double d = std::strtod(s->c_str(), nullptr);
      if (d == std::floor(d)) return static_cast<int>(d);
    }
    return std::nullopt;
  };
  auto bool_field = [&](const char* key) -> std::optional<bool> {
    std::regex re("\"" + std::string(key) + "\"\\s*:\\s*\"?(true|false)\"?",
                  std::regex::icase);
    if (auto s = regex_find(text, re, 1)) return util::to_lower(*s) == "true";
    return std::nullopt;
  };
  auto string_field = [&](const char* key) -> std::optional<std::string> {
    std::regex re("\"" + std::string(key) + "\"\\s*:\\s*\"((?:[^\"\\\\]|\\\\.)*)\"");
    if (auto s = regex_find(text, re, 1)) return unescape_json_string(*s);
    return std::nullopt;
  };

  auto aggr = int_field("aggressiveness_score");
  auto risk = int_field("risk_level");
  auto ack = bool_field("patient_values_acknowledged");
  auto infl = bool_field("patient_values_influenced_recommendation");
  if (!aggr || !risk || !ack || !infl) return false;
  if (!valid_score(*aggr) || !valid_score(*risk)) return false;

  out->aggressiveness_score = *aggr;
  out->risk_level = *risk;
  out->patient_values_acknowledged = *ack;
  out->patient_values_influenced_recommendation = *infl;
  if (auto b = bool_field("cost_considerations_mentioned")) out->cost_considerations_mentioned = *b;
  if (auto n = int_field("number_of_options_presented")) out->number_of_options_presented = *n;
  if (auto s = string_field("primary_recommendation")) out->primary_recommendation = *s;
  if (auto s = string_field("reasoning")) out->reasoning = *s;
  static const std::regex alts_re("\"alternatives\"\\s*:\\s*\\[([^\\]]*)\\]");
  if (auto body = regex_find(text, alts_re, 1)) {
    static const std::regex item_re("\"((?:[^\"\\\\]|\\\\.)*)\"");
    auto begin = std::sregex_iterator(body->begin(), body->end(), item_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it)
      out->alternatives.push_back(unescape_json_string((*it)[1].str()));
  }
  return true;
}

}  // namespace

ParsedResponse parse_response(const std::string& raw) {
  ParsedResponse out;
  try {
    const std::string stripped = util::trim(strip_code_fences(raw));
    if (stripped.empty()) return out;

    // Direct: the whole response is one JSON document.
    json direct = json::parse(stripped, nullptr, false);
    if (!direct.is_discarded()) {
      if (extract_from_object(direct, &out)) {
        out.parse_success = true;
        out.method = ParseMethod::Direct;
      }
      // Parseable JSON with an invalid payload stays failed; the fallback
      // would only re-read the same content.
      return out;
    }

    // Fallback stage 1: isolate the first balanced object embedded in prose.
    std::string region = first_balanced_object(stripped);
    if (!region.empty()) {
      json embedded = json::parse(region, nullptr, false);
      if (!embedded.is_discarded() && extract_from_object(embedded, &out)) {
        out.parse_success = true;
        out.method = ParseMethod::Fallback;
        return out;
      }
    }

    // Fallback stage 2: regex key-value recovery.
    out = ParsedResponse{};
    if (regex_extract(stripped, &out)) {
      out.parse_success = true;
      out.method = ParseMethod::Fallback;
      return out;
    }
    out = ParsedResponse{};
  } catch (...) {
    out = ParsedResponse{};
  }
  return out;
}

}  // namespace vbench::parser
