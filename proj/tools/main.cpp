// Command-line front end: corpus scan/extract, experiment runs, analysis,
// artifact building and integrity verification.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vbench/artifacts.hpp"
#include "vbench/corpus.hpp"
#include "vbench/gateway.hpp"
#include "vbench/metrics.hpp"
#include "vbench/protocol.hpp"
#include "vbench/runner.hpp"
#include "vbench/synthetic.hpp"
#include "vbench/util/numfmt.hpp"

namespace fs = std::filesystem;
using namespace vbench;

namespace {

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_temperatures(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : split_list(csv)) out.push_back(std::stod(item));
  return out;
}

std::vector<corpus::EncounterNote> load_notes(const std::string& notes_dir, int max_notes) {
  if (fs::is_regular_file(notes_dir)) return corpus::load_notes_jsonl(notes_dir, max_notes);
  return corpus::load_notes_dir(notes_dir, max_notes);
}

void print_funnel(const corpus::FunnelStats& funnel) {
  std::cout << "notes loaded:        " << funnel.loaded << "\n"
            << "domain classified:   " << funnel.classified << "\n"
            << "preference flagged:  " << funnel.flagged << "\n"
            << "vignettes extracted: " << funnel.extracted << "\n";
  for (const auto& [domain, count] : funnel.extracted_per_domain) {
    std::cout << "  " << domain << ": " << count << "\n";
  }
  for (const auto& domain : funnel.below_minimum) {
    std::cerr << "warning: domain below requested minimum: " << domain << "\n";
  }
}

std::string opt_text(const std::optional<double>& v) {
  return v ? util::format_fixed(*v, 3) : std::string("n/a");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string newest_results_csv(const std::string& results_dir, int phase) {
  const std::string prefix = "values_phase" + std::to_string(phase) + "_";
  std::string best;
  if (fs::exists(results_dir)) {
    for (const auto& entry : fs::directory_iterator(results_dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (name.rfind(prefix, 0) != 0 || name.size() < 4 ||
          name.substr(name.size() - 4) != ".csv") {
        continue;
      }
      if (best.empty() || fs::path(best).filename().string() < name) {
        best = entry.path().string();
      }
    }
  }
  if (best.empty()) {
    throw std::runtime_error("no phase-" + std::to_string(phase) + " results csv in " +
                             results_dir);
  }
  return best;
}

struct RunArgs {
  int phase = 1;
  std::string vignettes_file;
  std::string results_dir = "results";
  std::string models;
  int max_vignettes = 2;
  std::string temperatures = "0.0";
  int repetitions = 1;
  int max_concurrency = 0;        // 0 = phase default
  double rate_limit_delay = -1.0; // negative = phase default
  int phase2_vignettes = 1;
  std::string phase2_temperatures = "0.0";
  int phase2_repetitions = 1;
  std::string backend = "synthetic";
  std::string synthetic_profile;
  std::string run_stamp;
  bool resume = false;
};

int cmd_run(const RunArgs& args) {
  const auto all = corpus::vignettes_from_json_file(args.vignettes_file);
  const int want = args.phase == 2 ? args.phase2_vignettes : args.max_vignettes;
  if (static_cast<int>(all.size()) < want) {
    throw std::runtime_error("vignettes file has " + std::to_string(all.size()) +
                             " entries, need " + std::to_string(want));
  }
  std::vector<std::string> vignette_ids;
  std::map<std::string, corpus::Vignette> by_id;
  for (int i = 0; i < want; ++i) {
    vignette_ids.push_back(all[i].vignette_id);
    by_id.emplace(all[i].vignette_id, all[i]);
  }

  std::vector<std::string> labels = split_list(args.models);
  if (labels.empty()) {
    labels = args.phase == 2 ? std::vector<std::string>{"gpt-5.2"}
                             : gateway::default_model_labels();
  }

  gateway::GatewayConfig gw_config = gateway::default_gateway_config(args.phase);
  if (args.max_concurrency > 0) gw_config.max_concurrency = args.max_concurrency;
  if (args.rate_limit_delay >= 0.0) gw_config.rate_limit_delay_s = args.rate_limit_delay;
  gateway::Gateway gw(gw_config);

  std::map<std::string, synthetic::SyntheticProfile> profiles;
  if (args.backend == "synthetic") {
    profiles = args.synthetic_profile.empty()
                   ? synthetic::default_profiles(labels)
                   : synthetic::load_profiles_file(args.synthetic_profile, labels);
  } else if (args.backend != "remote") {
    throw std::runtime_error("unknown backend: " + args.backend +
                             " (expected synthetic or remote)");
  }
  for (const auto& label : labels) {
    auto config = gateway::model_config_by_label(label);
    if (!config) throw std::runtime_error("unknown model label: " + label);
    if (args.backend == "synthetic") {
      gw.register_model(*config,
                        std::make_shared<synthetic::SyntheticBackend>(profiles.at(label)));
    } else {
      gw.register_model(*config, gateway::make_remote_backend(config->provider));
    }
  }

  const std::vector<std::string> mitigations =
      args.phase == 2 ? protocol::mitigation_arm_ids() : std::vector<std::string>{"BASELINE"};
  const std::vector<double> temperatures = parse_temperatures(
      args.phase == 2 ? args.phase2_temperatures : args.temperatures);
  const int repetitions = args.phase == 2 ? args.phase2_repetitions : args.repetitions;

  const auto plan = runner::build_plan(args.phase, vignette_ids, protocol::condition_codes(),
                                       labels, mitigations, temperatures, repetitions);

  runner::RunOptions options;
  options.phase = args.phase;
  options.results_dir = args.results_dir;
  options.run_stamp = args.run_stamp;
  options.resume = args.resume;

  fs::create_directories(args.results_dir);
  write_file(fs::path(args.results_dir) / "condition_catalog.json", protocol::catalog_json());

  const runner::RunResult result = runner::execute_plan(plan, by_id, gw, options);
  std::cout << "phase " << args.phase << ": " << plan.size() << " trials planned, "
            << result.executed << " executed, " << result.skipped << " reused\n"
            << "jsonl: " << result.jsonl_path << "\n"
            << "csv:   " << result.csv_path << "\n";
  return 0;
}

int cmd_analyze(const std::string& results_file, const std::string& results_dir) {
  const std::string path =
      results_file.empty() ? newest_results_csv(results_dir, 1) : results_file;
  const auto rows = artifacts::load_rows_checked(path);
  std::cout << "results: " << path << " (" << rows.size() << " trials)\n\n";
  for (const auto& s : metrics::summarize_models(rows)) {
    std::cout << s.model_label << "\n"
              << "  trials:           " << s.n_trials << "\n"
              << "  parse rate:       " << util::format_fixed(s.parse_rate, 3) << "\n"
              << "  dvo aggr/risk:    " << opt_text(s.dvo_aggressiveness) << " / "
              << opt_text(s.dvo_risk) << "\n"
              << "  mean vsi:         " << opt_text(s.mean_vsi);
    if (s.vsi_cells_missing > 0) {
      std::cout << " (" << s.vsi_cells_missing << " cells missing)";
    }
    std::cout << "\n"
              << "  dcr:              " << opt_text(s.dcr) << "\n"
              << "  var ack/infl:     " << opt_text(s.var_acknowledged) << " / "
              << opt_text(s.var_influenced) << "\n";
    if (!s.gaps.empty()) {
      std::cout << "  gaps:            ";
      for (const auto& gap : s.gaps) std::cout << " " << gap;
      std::cout << "\n";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_figures(const std::string& results_file, const std::string& results_dir,
                const std::string& figures_dir) {
  const std::string path =
      results_file.empty() ? newest_results_csv(results_dir, 1) : results_file;
  const auto rows = artifacts::load_rows_checked(path);
  fs::create_directories(figures_dir);
  const fs::path dir(figures_dir);
  write_file(dir / "fig1_phase1_heatmap_aggressiveness.csv", artifacts::fig1_heatmap_csv(rows));
  write_file(dir / "fig1_phase1_heatmap_aggressiveness.svg", artifacts::fig1_heatmap_svg(rows));
  write_file(dir / "fig2_phase1_dcr.csv", artifacts::fig2_dcr_csv(rows));
  write_file(dir / "fig2_phase1_dcr.svg", artifacts::fig2_dcr_svg(rows));
  write_file(dir / "figS1_phase1_domain_shift.csv", artifacts::figs1_domain_shift_csv(rows));
  write_file(dir / "figS1_phase1_domain_shift.svg", artifacts::figs1_domain_shift_svg(rows));
  std::cout << "figures written to " << figures_dir << "\n";
  return 0;
}

int report_outcome(const artifacts::VerifyReport& report) {
  for (const auto& line : report.checks) std::cout << "PASS " << line << "\n";
  for (const auto& line : report.failures) std::cout << "FAIL " << line << "\n";
  std::cout << (report.ok ? "verification passed" : "verification FAILED") << "\n";
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"values-probing experiment harness"};
  app.require_subcommand(1);

  // scan / extract
  std::string notes_dir;
  int max_notes = 0;
  double min_conf = 0.05;
  int min_per_domain = 0;
  std::string output = "data/extracted_vignettes.json";
  std::string provider = "local";

  auto* scan = app.add_subcommand("scan", "corpus funnel statistics");
  scan->add_option("--notes-dir", notes_dir, "notes directory or JSONL file")->required();
  scan->add_option("--max-notes", max_notes, "cap on notes loaded (0 = all)");
  scan->add_option("--min-domain-confidence", min_conf, "classification threshold");

  auto* extract = app.add_subcommand("extract", "extract de-identified vignettes");
  extract->add_option("--notes-dir", notes_dir, "notes directory or JSONL file")->required();
  extract->add_option("--max-notes", max_notes, "cap on notes loaded (0 = all)");
  extract->add_option("--min-domain-confidence", min_conf, "classification threshold");
  extract->add_option("--min-per-domain", min_per_domain, "warn when a domain has fewer");
  extract->add_option("--output", output, "vignette JSON output path");
  extract->add_option("--provider", provider, "extraction provider (local template only)");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "execute a trial plan");
  run->add_option("--phase", run_args.phase, "1 or 2")->check(CLI::Range(1, 2));
  run->add_option("--vignettes-file", run_args.vignettes_file, "vignette JSON file")->required();
  run->add_option("--results-dir", run_args.results_dir, "output directory");
  run->add_option("--models", run_args.models, "comma-separated model labels");
  run->add_option("--max-vignettes", run_args.max_vignettes, "phase-1 vignette count");
  run->add_option("--temperatures", run_args.temperatures, "phase-1 temperatures (comma list)");
  run->add_option("--repetitions", run_args.repetitions, "phase-1 repetitions");
  run->add_option("--max-concurrency", run_args.max_concurrency, "in-flight request bound");
  run->add_option("--rate-limit-delay", run_args.rate_limit_delay,
                  "per-model dispatch spacing, seconds");
  run->add_option("--phase2-vignettes", run_args.phase2_vignettes, "phase-2 vignette count");
  run->add_option("--phase2-temperatures", run_args.phase2_temperatures,
                  "phase-2 temperatures (comma list)");
  run->add_option("--phase2-repetitions", run_args.phase2_repetitions, "phase-2 repetitions");
  run->add_option("--backend", run_args.backend, "synthetic or remote");
  run->add_option("--synthetic-profile", run_args.synthetic_profile,
                  "synthetic profile JSON file");
  run->add_option("--run-stamp", run_args.run_stamp, "fixed UTC stamp for output names");
  run->add_flag("--resume", run_args.resume, "reuse completed trials from the run's JSONL");

  std::string results_file;
  std::string results_dir = "results";
  std::string figures_dir = "figures";
  auto* analyze = app.add_subcommand("analyze", "summarize a results CSV");
  analyze->add_option("--results-file", results_file, "trial CSV (default: newest phase-1)");
  analyze->add_option("--results-dir", results_dir, "search directory");

  auto* figures = app.add_subcommand("figures", "write phase-1 figure data and SVG renders");
  figures->add_option("--results-file", results_file, "trial CSV (default: newest phase-1)");
  figures->add_option("--results-dir", results_dir, "search directory");
  figures->add_option("--figures-dir", figures_dir, "output directory");

  artifacts::ArtifactConfig artifact_config;
  auto* build = app.add_subcommand("build-artifacts", "tables, figures and checksum manifests");
  build->add_option("--phase1", artifact_config.phase1_csv, "phase-1 trial CSV");
  build->add_option("--phase2", artifact_config.phase2_csv, "phase-2 trial CSV");
  build->add_option("--tables-dir", artifact_config.tables_dir, "tables output directory");
  build->add_option("--figures-dir", artifact_config.figures_dir, "figures output directory");
  build->add_option("--results-dir", results_dir, "search directory for defaults");
  build->add_option("--phase2-model", artifact_config.phase2_model, "phase-2 model label");

  std::string verify_root = ".";
  auto* verify_s = app.add_subcommand("verify-static", "recompute checksum manifests");
  verify_s->add_option("--root", verify_root, "manifest directory");

  std::string phase2_model = "gpt-5.2";
  std::string phase1_models;
  auto* verify_i = app.add_subcommand("verify-integrity", "assert the published run shape");
  verify_i->add_option("--results-dir", results_dir, "results directory");
  verify_i->add_option("--phase2-model", phase2_model, "expected phase-2 model label");
  verify_i->add_option("--models", phase1_models, "expected phase-1 labels (comma list)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (scan->parsed()) {
      corpus::CorpusConfig config{min_conf, min_per_domain, max_notes};
      const auto out = corpus::extract_corpus(load_notes(notes_dir, max_notes), config);
      print_funnel(out.funnel);
      return 0;
    }
    if (extract->parsed()) {
      if (provider != "local") {
        std::cerr << "error: only the local template extractor is available\n";
        return 2;
      }
      corpus::CorpusConfig config{min_conf, min_per_domain, max_notes};
      const auto out = corpus::extract_corpus(load_notes(notes_dir, max_notes), config);
      print_funnel(out.funnel);
      const fs::path out_path(output);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      write_file(out_path, corpus::vignettes_to_json(out.vignettes));
      std::cout << "wrote " << output << " (" << out.vignettes.size() << " vignettes)\n";
      return 0;
    }
    if (run->parsed()) return cmd_run(run_args);
    if (analyze->parsed()) return cmd_analyze(results_file, results_dir);
    if (figures->parsed()) return cmd_figures(results_file, results_dir, figures_dir);
    if (build->parsed()) {
      if (artifact_config.phase1_csv.empty()) {
        artifact_config.phase1_csv = newest_results_csv(results_dir, 1);
      }
      if (artifact_config.phase2_csv.empty()) {
        artifact_config.phase2_csv = newest_results_csv(results_dir, 2);
      }
      const auto set = artifacts::build_artifacts(artifact_config);
      for (const auto& file : set.files) std::cout << "wrote " << file << "\n";
      std::cout << "manifest: " << set.manifest_short_path << "\n"
                << "manifest: " << set.manifest_full_path << "\n";
      return 0;
    }
    if (verify_s->parsed()) return report_outcome(artifacts::verify_static(verify_root));
    if (verify_i->parsed()) {
      std::vector<std::string> labels = split_list(phase1_models);
      if (labels.empty()) labels = gateway::default_model_labels();
      return report_outcome(artifacts::verify_integrity(results_dir, labels, phase2_model));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
