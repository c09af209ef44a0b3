// logbench: run log-parsing experiments, score predictions, render reports.
//
//   logbench run --datasets <names|all> --data-dir <path> --method llm|drain
//                --prompt pt1|pt2|pt3|pt4 --shots 0|1|2|4
//                --backend remote|mock-echo|mock-fixture --model <id>
//                --seed <int> --cache <path> --out <dir>
//   logbench eval --pred <file> --truth <file>
//   logbench report --in <dir> --format table|csv
//   logbench replay --manifest <file> [--out <dir>]
//
// Exit codes: 0 success, 2 some datasets failed, 1 configuration error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "logbench/logbench.hpp"

namespace {

std::vector<std::string> split_names(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      auto t = logbench::trim(part);
      if (!t.empty()) out.emplace_back(t);
    }
  }
  return out;
}

void print_run_summary(const logbench::RunResult& result) {
  std::cout << logbench::render_report(result.reports, logbench::ReportFormat::Table);
  for (const auto& o : result.outcomes) {
    if (!o.report) std::cerr << "failed: " << o.error << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log parsing benchmark harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Parse datasets and score the predictions");
  std::vector<std::string> datasets_raw;
  std::string data_dir, method = "llm", prompt = "pt1", backend = "mock-echo", out_dir;
  std::string model, endpoint, cache, fixtures, drain_config;
  int shots = 0;
  std::uint64_t seed = 0;
  double temperature = 0.0, timeout = 60.0;
  int max_retries = 3, rpm = 60, jobs = 1, backoff_ms = 1000;
  std::size_t sample = 0;
  run->add_option("--datasets", datasets_raw, "Dataset names (comma separated) or 'all'")->required();
  run->add_option("--data-dir", data_dir, "Directory holding the structured benchmark files")->required();
  run->add_option("--method", method, "llm or drain")->check(CLI::IsMember({"llm", "drain"}));
  auto* prompt_opt = run->add_option("--prompt", prompt, "pt1|pt2|pt3|pt4")->check(CLI::IsMember({"pt1", "pt2", "pt3", "pt4"}, CLI::ignore_case));
  run->add_option("--shots", shots, "0, 1, 2 or 4 demonstrations")->check(CLI::IsMember({0, 1, 2, 4}));
  run->add_option("--backend", backend, "remote, mock-echo or mock-fixture")
      ->check(CLI::IsMember({"remote", "mock-echo", "mock-fixture"}));
  run->add_option("--model", model, "Model id sent to the endpoint (default gpt-3.5-turbo-0301)");
  run->add_option("--endpoint", endpoint, "Chat-completion URL for the remote backend");
  run->add_option("--seed", seed, "Seed for demonstration sampling and --sample");
  run->add_option("--cache", cache, "Response cache file (JSON lines)");
  run->add_option("--fixtures", fixtures, "Canned responses for mock-fixture");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--temperature", temperature, "Sampling temperature")->check(CLI::Range(0.0, 2.0));
  run->add_option("--max-retries", max_retries, "Retries on 429/5xx/timeouts")->check(CLI::NonNegativeNumber);
  run->add_option("--rpm", rpm, "Requests per minute ceiling")->check(CLI::PositiveNumber);
  run->add_option("--timeout", timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
  run->add_option("--backoff-ms", backoff_ms, "Initial retry backoff in milliseconds")->check(CLI::NonNegativeNumber);
  run->add_option("--jobs", jobs, "Concurrent requests in flight")->check(CLI::PositiveNumber);
  run->add_option("--drain-config", drain_config, "Per-dataset Drain settings (default: built-in)");
  run->add_option("--sample", sample, "Evaluate a seeded sample of this many messages per dataset");

  // eval
  auto* eval = app.add_subcommand("eval", "Score an existing predictions file");
  std::string pred_file, truth_file, eval_name, eval_format = "table";
  eval->add_option("--pred", pred_file, "Predictions CSV (line_id, predicted_template, ...)")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", truth_file, "Structured ground-truth CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--name", eval_name, "Dataset name shown in the report");
  eval->add_option("--format", eval_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  // report
  auto* report = app.add_subcommand("report", "Render the metrics of a run directory");
  std::string report_dir, report_format = "table";
  report->add_option("--in", report_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", report_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a recorded run from its manifest using only the cache");
  std::string manifest_file, replay_out;
  replay->add_option("--manifest", manifest_file, "manifest.json of the original run")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "Output directory (default: the original one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      logbench::ExperimentConfig cfg;
      cfg.dataset_names = split_names(datasets_raw);
      cfg.data_dir = data_dir;
      cfg.method = *logbench::parse_method(method);
      cfg.shots = shots;
      if (prompt_opt->count() == 0 && shots > 0) prompt = "pt2";
      cfg.variant = *logbench::parse_prompt_variant(prompt);
      cfg.seed = seed;
      cfg.output_dir = out_dir;
      cfg.backend.kind = *logbench::parse_backend_kind(backend);
      if (!model.empty()) cfg.backend.model_id = model;
      if (!endpoint.empty()) cfg.backend.endpoint_url = endpoint;
      cfg.backend.temperature = temperature;
      cfg.backend.max_retries = max_retries;
      cfg.backend.requests_per_minute = rpm;
      cfg.backend.timeout_seconds = timeout;
      cfg.backend.backoff_initial_ms = backoff_ms;
      cfg.backend.max_in_flight = jobs;
      cfg.backend.fixture_path = fixtures;
      if (!cache.empty()) cfg.cache_path = cache;
      if (!drain_config.empty()) cfg.drain_config_path = drain_config;
      if (sample > 0) cfg.sample = sample;
      auto result = logbench::run_experiment(cfg);
      print_run_summary(result);
      return result.exit_code();
    }
    if (*eval) {
      auto name = eval_name.empty() ? std::filesystem::path(truth_file).stem().string() : eval_name;
      auto truth = logbench::load_dataset(truth_file, name);
      auto preds = logbench::parse_predictions(logbench::read_text(pred_file));
      auto rep = logbench::evaluate(preds, truth);
      std::cout << logbench::render_report({rep}, eval_format == "csv" ? logbench::ReportFormat::Csv
                                                                        : logbench::ReportFormat::Table);
      return 0;
    }
    if (*report) {
      auto reports = logbench::load_reports(report_dir);
      std::cout << logbench::render_report(reports, report_format == "csv" ? logbench::ReportFormat::Csv
                                                                            : logbench::ReportFormat::Table);
      return 0;
    }
    if (*replay) {
      std::optional<std::filesystem::path> out;
      if (!replay_out.empty()) out = replay_out;
      auto result = logbench::replay_from_manifest(manifest_file, out);
      print_run_summary(result);
      std::cerr << "replay: " << result.backend_calls << " backend call(s), " << result.cache_hits << " cache hit(s)\n";
      return result.exit_code();
    }
  } catch (const logbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
