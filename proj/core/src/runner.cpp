#include "vbench/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "vbench/util/csv.hpp"
#include "vbench/util/numfmt.hpp"
#include "vbench/util/sha256.hpp"

namespace vbench::runner {

namespace fs = std::filesystem;
using nlohmann::json;

std::string make_trial_id(int phase, const std::string& vignette_id,
                          const std::string& condition_code, const std::string& model_label,
                          const std::string& mitigation_id, double temperature, int repetition) {
  std::ostringstream os;
  os << "p" << phase << "_" << vignette_id << "_" << condition_code << "_" << model_label << "_"
     << mitigation_id << "_t" << util::format_temperature(temperature) << "_r" << repetition;
  return os.str();
}

std::vector<TrialSpec> build_plan(int phase, const std::vector<std::string>& vignette_ids,
                                  const std::vector<std::string>& condition_codes,
                                  const std::vector<std::string>& model_labels,
                                  const std::vector<std::string>& mitigation_ids,
                                  const std::vector<double>& temperatures, int repetitions) {
  if (phase != 1 && phase != 2) throw std::invalid_argument("phase must be 1 or 2");
  if (vignette_ids.empty()) throw EmptyPlan("no vignettes");
  if (condition_codes.empty()) throw EmptyPlan("no conditions");
  if (model_labels.empty()) throw EmptyPlan("no models");
  if (mitigation_ids.empty()) throw EmptyPlan("no mitigations");
  if (temperatures.empty()) throw EmptyPlan("no temperatures");
  if (repetitions < 1) throw EmptyPlan("repetitions must be >= 1");

  for (const auto& c : condition_codes) protocol::condition_by_code(c);
  for (const auto& m : mitigation_ids) {
    protocol::mitigation_by_id(m);
    if (phase == 1 && m != "BASELINE") {
      throw std::invalid_argument("phase 1 plans use BASELINE only");
    }
  }

  std::vector<TrialSpec> plan;
  plan.reserve(vignette_ids.size() * condition_codes.size() * model_labels.size() *
               mitigation_ids.size() * temperatures.size() * static_cast<size_t>(repetitions));
  for (const auto& v : vignette_ids) {
    for (const auto& c : condition_codes) {
      for (const auto& m : model_labels) {
        for (const auto& g : mitigation_ids) {
          for (double t : temperatures) {
            for (int r = 1; r <= repetitions; ++r) {
              TrialSpec spec;
              spec.phase = phase;
              spec.vignette_id = v;
              spec.condition_code = c;
              spec.model_label = m;
              spec.mitigation_id = g;
              spec.temperature = t;
              spec.repetition = r;
              spec.trial_id = make_trial_id(phase, v, c, m, g, t, r);
              plan.push_back(std::move(spec));
            }
          }
        }
      }
    }
  }
  return plan;
}

std::string plan_hash(const std::vector<TrialSpec>& plan) {
  std::string joined;
  for (const auto& s : plan) {
    joined += s.trial_id;
    joined += '\n';
  }
  return util::sha256_hex(joined);
}

namespace {

json response_to_json(const gateway::RawResponse& r) {
  return json{{"text", r.text},
              {"latency_ms", r.latency_ms},
              {"input_tokens", r.input_tokens},
              {"output_tokens", r.output_tokens},
              {"api_success", r.api_success},
              {"error_detail", r.error_detail}};
}

gateway::RawResponse response_from_json(const json& j) {
  gateway::RawResponse r;
  r.text = j.value("text", "");
  r.latency_ms = j.value("latency_ms", 0L);
  r.input_tokens = j.value("input_tokens", 0L);
  r.output_tokens = j.value("output_tokens", 0L);
  r.api_success = j.value("api_success", false);
  r.error_detail = j.value("error_detail", "");
  return r;
}

json parsed_to_json(const parser::ParsedResponse& p) {
  return json{{"parse_success", p.parse_success},
              {"method", parser::parse_method_token(p.method)},
              {"primary_recommendation", p.primary_recommendation},
              {"alternatives", p.alternatives},
              {"aggressiveness_score", p.aggressiveness_score},
              {"risk_level", p.risk_level},
              {"number_of_options_presented", p.number_of_options_presented},
              {"patient_values_acknowledged", p.patient_values_acknowledged},
              {"patient_values_influenced_recommendation",
               p.patient_values_influenced_recommendation},
              {"cost_considerations_mentioned", p.cost_considerations_mentioned},
              {"reasoning", p.reasoning},
              {"extras", p.extras}};
}

parser::ParseMethod method_from_token(const std::string& token) {
  if (token == "direct") return parser::ParseMethod::Direct;
  if (token == "fallback") return parser::ParseMethod::Fallback;
  return parser::ParseMethod::Failed;
}

parser::ParsedResponse parsed_from_json(const json& j) {
  parser::ParsedResponse p;
  p.parse_success = j.value("parse_success", false);
  p.method = method_from_token(j.value("method", "failed"));
  p.primary_recommendation = j.value("primary_recommendation", "");
  if (j.contains("alternatives") && j["alternatives"].is_array()) {
    for (const auto& a : j["alternatives"])
      if (a.is_string()) p.alternatives.push_back(a.get<std::string>());
  }
  p.aggressiveness_score = j.value("aggressiveness_score", 0);
  p.risk_level = j.value("risk_level", 0);
  p.number_of_options_presented = j.value("number_of_options_presented", 0);
  p.patient_values_acknowledged = j.value("patient_values_acknowledged", false);
  p.patient_values_influenced_recommendation =
      j.value("patient_values_influenced_recommendation", false);
  p.cost_considerations_mentioned = j.value("cost_considerations_mentioned", false);
  p.reasoning = j.value("reasoning", "");
  if (j.contains("extras") && j["extras"].is_object()) p.extras = j["extras"];
  return p;
}

}  // namespace

json record_to_json(const TrialRecord& record) {
  const auto& s = record.spec;
  return json{{"trial_id", s.trial_id},
              {"phase", s.phase},
              {"vignette_id", s.vignette_id},
              {"condition_code", s.condition_code},
              {"model_label", s.model_label},
              {"mitigation_id", s.mitigation_id},
              {"temperature", s.temperature},
              {"repetition", s.repetition},
              {"domain", record.domain},
              {"response", response_to_json(record.response)},
              {"parsed", parsed_to_json(record.parsed)},
              {"critic", record.critic},
              {"started_at", record.started_at},
              {"finished_at", record.finished_at}};
}

TrialRecord record_from_json(const json& j) {
  TrialRecord record;
  record.spec.trial_id = j.value("trial_id", "");
  record.spec.phase = j.value("phase", 1);
  record.spec.vignette_id = j.value("vignette_id", "");
  record.spec.condition_code = j.value("condition_code", "");
  record.spec.model_label = j.value("model_label", "");
  record.spec.mitigation_id = j.value("mitigation_id", "");
  record.spec.temperature = j.value("temperature", 0.0);
  record.spec.repetition = j.value("repetition", 1);
  record.domain = j.value("domain", "");
  if (j.contains("response")) record.response = response_from_json(j["response"]);
  if (j.contains("parsed")) record.parsed = parsed_from_json(j["parsed"]);
  if (j.contains("critic")) record.critic = j["critic"];
  record.started_at = j.value("started_at", "");
  record.finished_at = j.value("finished_at", "");
  return record;
}

TrialRow row_from_record(const TrialRecord& record) {
  TrialRow row;
  const auto& s = record.spec;
  row.trial_id = s.trial_id;
  row.phase = s.phase;
  row.vignette_id = s.vignette_id;
  row.domain = record.domain;
  row.condition_code = s.condition_code;
  try {
    const auto& cond = protocol::condition_by_code(s.condition_code);
    row.dimension = protocol::dimension_token(cond.dimension);
    row.pole = protocol::pole_token(cond.pole);
  } catch (const std::out_of_range&) {
    row.dimension = "";
    row.pole = "";
  }
  row.model_name = s.model_label;
  row.mitigation = s.mitigation_id;
  row.temperature = s.temperature;
  row.repetition = s.repetition;
  row.latency_ms = record.response.latency_ms;
  row.input_tokens = record.response.input_tokens;
  row.output_tokens = record.response.output_tokens;
  row.api_success = record.response.api_success;
  row.parse_success = record.parsed.parse_success;
  row.parse_method = parser::parse_method_token(record.parsed.method);
  if (record.parsed.parse_success) {
    row.aggressiveness_score = record.parsed.aggressiveness_score;
    row.risk_level = record.parsed.risk_level;
    row.number_of_options_presented = record.parsed.number_of_options_presented;
    row.patient_values_acknowledged = record.parsed.patient_values_acknowledged;
    row.patient_values_influenced_recommendation =
        record.parsed.patient_values_influenced_recommendation;
    row.cost_considerations_mentioned = record.parsed.cost_considerations_mentioned;
    row.primary_recommendation = record.parsed.primary_recommendation;
    row.reasoning = record.parsed.reasoning;
  }
  return row;
}

const std::vector<std::string>& trial_csv_columns() {
  static const std::vector<std::string> columns = {
      "trial_id",
      "phase",
      "vignette_id",
      "domain",
      "condition_code",
      "dimension",
      "pole",
      "model_name",
      "mitigation",
      "temperature",
      "repetition",
      "latency_ms",
      "input_tokens",
      "output_tokens",
      "api_success",
      "parse_success",
      "parse_method",
      "aggressiveness_score",
      "risk_level",
      "number_of_options_presented",
      "patient_values_acknowledged",
      "patient_values_influenced_recommendation",
      "cost_considerations_mentioned",
      "primary_recommendation",
      "reasoning"};
  return columns;
}

namespace {

std::string bool_token(bool v) { return v ? "true" : "false"; }

std::string opt_int_field(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::string opt_bool_field(const std::optional<bool>& v) {
  return v ? bool_token(*v) : std::string();
}

std::vector<std::string> row_fields(const TrialRow& r) {
  return {r.trial_id,
          std::to_string(r.phase),
          r.vignette_id,
          r.domain,
          r.condition_code,
          r.dimension,
          r.pole,
          r.model_name,
          r.mitigation,
          util::format_temperature(r.temperature),
          std::to_string(r.repetition),
          std::to_string(r.latency_ms),
          std::to_string(r.input_tokens),
          std::to_string(r.output_tokens),
          bool_token(r.api_success),
          bool_token(r.parse_success),
          r.parse_method,
          opt_int_field(r.aggressiveness_score),
          opt_int_field(r.risk_level),
          opt_int_field(r.number_of_options_presented),
          opt_bool_field(r.patient_values_acknowledged),
          opt_bool_field(r.patient_values_influenced_recommendation),
          opt_bool_field(r.cost_considerations_mentioned),
          r.primary_recommendation,
          r.reasoning};
}

bool parse_bool_token(const std::string& s) { return s == "true"; }

std::optional<int> parse_opt_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stoi(s);
}

std::optional<bool> parse_opt_bool(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s == "true";
}

}  // namespace

std::string rows_to_csv(const std::vector<TrialRow>& rows) {
  std::string out = util::csv_row(trial_csv_columns());
  for (const auto& r : rows) out += util::csv_row(row_fields(r));
  return out;
}

std::vector<TrialRow> rows_from_csv_text(const std::string& text) {
  std::istringstream stream(text);
  util::CsvTable table = util::read_csv(stream);
  const auto& want = trial_csv_columns();
  if (table.header != want) {
    throw std::runtime_error("trial CSV header does not match the expected column set");
  }
  std::vector<TrialRow> rows;
  rows.reserve(table.rows.size());
  for (const auto& f : table.rows) {
    if (f.size() != want.size()) throw std::runtime_error("trial CSV row has wrong field count");
    TrialRow r;
    size_t i = 0;
    r.trial_id = f[i++];
    r.phase = std::stoi(f[i++]);
    r.vignette_id = f[i++];
    r.domain = f[i++];
    r.condition_code = f[i++];
    r.dimension = f[i++];
    r.pole = f[i++];
    r.model_name = f[i++];
    r.mitigation = f[i++];
    r.temperature = std::stod(f[i++]);
    r.repetition = std::stoi(f[i++]);
    r.latency_ms = std::stol(f[i++]);
    r.input_tokens = std::stol(f[i++]);
    r.output_tokens = std::stol(f[i++]);
    r.api_success = parse_bool_token(f[i++]);
    r.parse_success = parse_bool_token(f[i++]);
    r.parse_method = f[i++];
    r.aggressiveness_score = parse_opt_int(f[i++]);
    r.risk_level = parse_opt_int(f[i++]);
    r.number_of_options_presented = parse_opt_int(f[i++]);
    r.patient_values_acknowledged = parse_opt_bool(f[i++]);
    r.patient_values_influenced_recommendation = parse_opt_bool(f[i++]);
    r.cost_considerations_mentioned = parse_opt_bool(f[i++]);
    r.primary_recommendation = f[i++];
    r.reasoning = f[i++];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<TrialRow> read_trials_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trial CSV: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return rows_from_csv_text(buf.str());
}

void write_trials_csv(const std::string& path, const std::vector<TrialRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trial CSV: " + path);
  out << rows_to_csv(rows);
}

std::string jsonl_header_line(const std::vector<TrialSpec>& plan, int phase) {
  json header{{"plan_hash", plan_hash(plan)}, {"phase", phase}, {"n_specs", plan.size()}};
  return header.dump();
}

std::map<std::string, TrialRecord> load_completed_jsonl(const std::string& path,
                                                        const std::string& expected_hash) {
  std::map<std::string, TrialRecord> completed;
  std::ifstream in(path, std::ios::binary);
  if (!in) return completed;

  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // truncated trailing line from an interrupted run
    if (!saw_header) {
      saw_header = true;
      if (!j.contains("plan_hash") || j["plan_hash"].get<std::string>() != expected_hash) {
        throw PlanMismatch("existing results belong to a different plan: " + path);
      }
      continue;
    }
    if (!j.contains("trial_id")) continue;
    TrialRecord record = record_from_json(j);
    completed[record.spec.trial_id] = std::move(record);
  }
  return completed;
}

namespace {

std::string utc_format_now(const char* fmt) {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), fmt, &tm);
  return buf;
}

std::string now_iso8601() { return utc_format_now("%Y-%m-%dT%H:%M:%SZ"); }

}  // namespace

std::string run_stamp_now() { return utc_format_now("%Y%m%d_%H%M%S"); }

TrialRecord run_trial(const TrialSpec& spec, const corpus::Vignette& vignette,
                      gateway::Gateway& gw) {
  TrialRecord record;
  record.spec = spec;
  record.domain = corpus::domain_token(vignette.domain.domain);
  record.started_at = now_iso8601();

  const auto& condition = protocol::condition_by_code(spec.condition_code);
  const auto& mitigation = protocol::mitigation_by_id(spec.mitigation_id);
  protocol::PromptBundle bundle = protocol::compose_prompt(vignette, condition, mitigation);

  record.response = gw.send(bundle, spec.model_label);
  if (record.response.api_success) {
    record.parsed = parser::parse_response(record.response.text);
  }

  if (mitigation.two_pass && record.response.api_success) {
    protocol::PromptBundle critic_bundle =
        protocol::compose_critic_prompt(condition.statement, record.response.text, bundle);
    gateway::RawResponse critic = gw.send(critic_bundle, spec.model_label);
    json fields = nullptr;
    if (critic.api_success) {
      json parsed = json::parse(parser::strip_code_fences(critic.text), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) fields = parsed;
    }
    record.critic = json{{"text", critic.text},
                         {"api_success", critic.api_success},
                         {"latency_ms", critic.latency_ms},
                         {"input_tokens", critic.input_tokens},
                         {"output_tokens", critic.output_tokens},
                         {"error_detail", critic.error_detail},
                         {"fields", fields}};
  }

  record.finished_at = now_iso8601();
  return record;
}

RunResult execute_plan(const std::vector<TrialSpec>& plan,
                       const std::map<std::string, corpus::Vignette>& vignettes,
                       gateway::Gateway& gw, const RunOptions& options) {
  if (plan.empty()) throw EmptyPlan("empty plan");
  for (const auto& spec : plan) {
    if (vignettes.count(spec.vignette_id) == 0) {
      throw std::invalid_argument("plan references unknown vignette: " + spec.vignette_id);
    }
    if (!gw.has_model(spec.model_label)) {
      throw std::invalid_argument("plan references unregistered model: " + spec.model_label);
    }
  }

  std::string stamp = options.run_stamp.empty() ? run_stamp_now() : options.run_stamp;
  fs::create_directories(options.results_dir);
  std::string base = "values_phase" + std::to_string(options.phase) + "_" + stamp;

  RunResult result;
  result.jsonl_path = (fs::path(options.results_dir) / (base + ".jsonl")).string();
  result.csv_path = (fs::path(options.results_dir) / (base + ".csv")).string();

  std::string hash = plan_hash(plan);
  std::map<std::string, TrialRecord> completed;
  if (options.resume) {
    if (!options.resume_jsonl.empty()) {
      result.jsonl_path = options.resume_jsonl;
      fs::path p(options.resume_jsonl);
      p.replace_extension(".csv");
      result.csv_path = p.string();
    }
    completed = load_completed_jsonl(result.jsonl_path, hash);
  }

  bool fresh = !options.resume || !fs::exists(result.jsonl_path) ||
               fs::file_size(result.jsonl_path) == 0;
  std::ofstream jsonl(result.jsonl_path,
                      std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
  if (!jsonl) throw std::runtime_error("cannot open results file: " + result.jsonl_path);
  if (fresh) jsonl << jsonl_header_line(plan, options.phase) << "\n" << std::flush;

  result.records.resize(plan.size());
  std::atomic<size_t> next{0};
  std::atomic<int> executed{0}, skipped{0};
  std::mutex io_mu;

  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < plan.size(); i = next.fetch_add(1)) {
      const TrialSpec& spec = plan[i];
      auto done = completed.find(spec.trial_id);
      if (done != completed.end()) {
        result.records[i] = done->second;
        skipped.fetch_add(1);
        continue;
      }
      TrialRecord record;
      try {
        record = run_trial(spec, vignettes.at(spec.vignette_id), gw);
      } catch (const std::exception& e) {
        record = TrialRecord{};
        record.spec = spec;
        auto vit = vignettes.find(spec.vignette_id);
        if (vit != vignettes.end()) record.domain = corpus::domain_token(vit->second.domain.domain);
        record.response.api_success = false;
        record.response.error_detail = std::string("trial execution error: ") + e.what();
      }
      executed.fetch_add(1);
      {
        std::lock_guard<std::mutex> lock(io_mu);
        jsonl << record_to_json(record).dump() << "\n" << std::flush;
      }
      result.records[i] = std::move(record);
    }
  };

  int n_threads = options.worker_threads > 0 ? options.worker_threads
                                             : gw.config().max_concurrency;
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(plan.size())));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  result.executed = executed.load();
  result.skipped = skipped.load();

  result.rows.reserve(result.records.size());
  for (const auto& record : result.records) result.rows.push_back(row_from_record(record));
  write_trials_csv(result.csv_path, result.rows);
  return result;
}

}  // namespace vbench::runner
