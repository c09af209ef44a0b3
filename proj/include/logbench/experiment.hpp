#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "logbench/baseline_drain.hpp"
#include "logbench/csv.hpp"
#include "logbench/dataset_io.hpp"
#include "logbench/drain_config.hpp"
#include "logbench/drain_presets.hpp"
#include "logbench/error.hpp"
#include "logbench/llm_client.hpp"
#include "logbench/metrics.hpp"
#include "logbench/prompt_engine.hpp"
#include "logbench/response_cache.hpp"
#include "logbench/template_extractor.hpp"

namespace logbench {

inline constexpr std::string_view kToolVersion = "0.3.0";

enum class Method { Llm, Drain };

constexpr std::string_view to_string(Method m) { return m == Method::Llm ? "llm" : "drain"; }

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "llm") return Method::Llm;
  if (s == "drain") return Method::Drain;
  return std::nullopt;
}

struct ExperimentConfig {
  std::vector<std::string> dataset_names;  // or the single entry "all"
  std::filesystem::path data_dir;
  Method method = Method::Llm;
  PromptVariant variant = PromptVariant::PT1;
  int shots = 0;
  std::uint64_t seed = 0;
  BackendConfig backend;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> cache_path;
  std::optional<std::filesystem::path> drain_config_path;
  std::optional<std::size_t> sample;  // evaluate a seeded subset of this many messages

  void validate() const {
    auto bad = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
    if (dataset_names.empty()) bad("no datasets given");
    if (output_dir.empty()) bad("no output directory given");
    if (sample && *sample == 0) bad("sample size must be positive");
    if (method == Method::Llm) {
      if (shots != 0 && shots != 1 && shots != 2 && shots != 4) bad("shots must be one of 0, 1, 2, 4");
      if ((shots > 0) != (variant == PromptVariant::PT2)) bad("few-shot runs use PT2 and PT2 needs shots > 0");
      backend.validate();
    }
  }
};

struct PredictionRow {
  LineId line_id = 0;
  std::string content;
  std::string truth_template;
  std::string predicted_template;
  std::string status;
};

struct DatasetOutcome {
  std::string name;
  std::filesystem::path source;
  std::optional<MetricsReport> report;
  std::string error;
  std::vector<LineId> demonstrations;
  std::size_t refusals = 0;
  std::size_t no_delimiter = 0;
};

struct RunOptions {
  bool offline = false;                     // serve from cache only; any backend call fails
  std::optional<FixtureStore> fixtures;     // in-memory fixtures for mock_fixture
  std::optional<std::string> api_key = api_key_from_env();
};

struct RunResult {
  std::vector<MetricsReport> reports;  // dataset order; failed ones carry `failure`
  std::vector<DatasetOutcome> outcomes;
  nlohmann::ordered_json manifest;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;

  bool all_ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.report.has_value(); });
  }
  int exit_code() const { return all_ok() ? 0 : 2; }
};

// ---------------------------------------------------------------------------
// Files

inline std::filesystem::path predictions_path(const std::filesystem::path& out, const std::string& name) {
  return out / (name + ".predictions.csv");
}
inline std::filesystem::path metrics_path(const std::filesystem::path& out, const std::string& name) {
  return out / (name + ".metrics.json");
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string format_predictions(const std::vector<PredictionRow>& rows) {
  std::string out = csv::format_row({"line_id", "content", "truth_template", "predicted_template", "status"});
  for (const auto& r : rows) {
    out += csv::format_row({std::to_string(r.line_id), r.content, r.truth_template, r.predicted_template, r.status});
  }
  return out;
}

// Reads line_id and predicted_template columns of a predictions file.
inline std::vector<Prediction> parse_predictions(std::string_view text) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::MissingColumn, "predictions file has no header");
  const auto& header = rows.front().fields;
  auto col = [&](std::string_view name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::MissingColumn, "predictions column '" + std::string(name) + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t id_col = col("line_id");
  const std::size_t tmpl_col = col("predicted_template");
  std::vector<Prediction> preds;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != header.size()) throw Error(ErrorKind::MalformedRow, "predictions row " + std::to_string(r) + " has wrong field count");
    Prediction p;
    try {
      p.line_id = std::stoull(f[id_col]);
      p.template_ = canonicalize(f[tmpl_col]);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::MalformedRow, "predictions row " + std::to_string(r) + ": " + e.what());
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j = {{"dataset", r.dataset}, {"n", r.n}};
  if (r.failure) {
    j["failure"] = *r.failure;
  } else {
    j["ga"] = r.ga;
    j["mla"] = r.mla;
    j["ed"] = r.ed;
  }
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  if (j.contains("failure")) {
    r.failure = j.at("failure").get<std::string>();
  } else {
    r.ga = j.at("ga").get<double>();
    r.mla = j.at("mla").get<double>();
    r.ed = j.at("ed").get<double>();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Table, Csv };

// One row per dataset plus an unweighted Average row over evaluated datasets.
// Failed datasets print "---" and are left out of the average.
inline std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no reports to render");
  double ga = 0, mla = 0, ed = 0;
  std::size_t ok = 0, total_n = 0;
  for (const auto& r : reports) {
    if (r.failure) continue;
    ga += r.ga;
    mla += r.mla;
    ed += r.ed;
    total_n += r.n;
    ++ok;
  }
  std::string out;
  if (format == ReportFormat::Csv) {
    out = "dataset,n,ga,mla,ed\n";
    for (const auto& r : reports) {
      if (r.failure) out += fmt::format("{},{},,,\n", r.dataset, r.n);
      else out += fmt::format("{},{},{:.6f},{:.6f},{:.6f}\n", r.dataset, r.n, r.ga, r.mla, r.ed);
    }
    if (ok) out += fmt::format("Average,{},{:.6f},{:.6f},{:.6f}\n", total_n, ga / ok, mla / ok, ed / ok);
    else out += fmt::format("Average,0,,,\n");
    return out;
  }
  std::size_t width = 9;
  for (const auto& r : reports) width = std::max(width, r.dataset.size() + 2);
  out += fmt::format("{:<{}}{:>6}{:>8}{:>8}{:>9}\n", "Dataset", width, "n", "GA", "MLA", "ED");
  out += std::string(width + 31, '-') + "\n";
  for (const auto& r : reports) {
    if (r.failure) out += fmt::format("{:<{}}{:>6}{:>8}{:>8}{:>9}\n", r.dataset, width, r.n, "---", "---", "---");
    else out += fmt::format("{:<{}}{:>6}{:>8.3f}{:>8.3f}{:>9.3f}\n", r.dataset, width, r.n, r.ga, r.mla, r.ed);
  }
  out += std::string(width + 31, '-') + "\n";
  if (ok) out += fmt::format("{:<{}}{:>6}{:>8.3f}{:>8.3f}{:>9.3f}\n", "Average", width, "", ga / ok, mla / ok, ed / ok);
  else out += fmt::format("{:<{}}{:>6}{:>8}{:>8}{:>9}\n", "Average", width, "", "---", "---", "---");
  out += "ED is a mean edit distance: lower is better.\n";
  return out;
}

// Reads <dir>/*.metrics.json in manifest order (or name order without a manifest).
inline std::vector<MetricsReport> load_reports(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  if (std::filesystem::exists(dir / "manifest.json")) {
    auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
    for (const auto& d : manifest.at("datasets")) names.push_back(d.at("name").get<std::string>());
  } else {
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      auto fname = entry.path().filename().string();
      const std::string suffix = ".metrics.json";
      if (fname.size() > suffix.size() && fname.compare(fname.size() - suffix.size(), suffix.size(), suffix) == 0) {
        names.push_back(fname.substr(0, fname.size() - suffix.size()));
      }
    }
    std::sort(names.begin(), names.end());
  }
  std::vector<MetricsReport> reports;
  for (const auto& n : names) {
    auto path = metrics_path(dir, n);
    if (!std::filesystem::exists(path)) {
      MetricsReport missing;
      missing.dataset = n;
      missing.failure = "no metrics file";
      reports.push_back(missing);
      continue;
    }
    reports.push_back(metrics_from_json(nlohmann::json::parse(read_text(path))));
  }
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no metrics files under " + dir.string());
  return reports;
}

// ---------------------------------------------------------------------------
// Running

// Seeded subset of n records, kept in file order.
inline Dataset sample_dataset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n >= ds.records.size()) return ds;
  std::vector<std::size_t> idx(ds.records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  detail::seeded_shuffle(idx, seed);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.name = ds.name;
  for (std::size_t i : idx) out.records.push_back(ds.records[i]);
  out.template_index = build_template_index(out.records);
  return out;
}

inline std::vector<std::string> resolve_dataset_names(const ExperimentConfig& cfg) {
  if (cfg.dataset_names.size() == 1 && cfg.dataset_names.front() == "all") {
    std::vector<std::string> found;
    for (const auto& n : benchmark_dataset_names())
      if (locate_dataset(cfg.data_dir, n)) found.push_back(n);
    if (found.empty()) throw Error(ErrorKind::InvalidConfig, "no benchmark datasets found under " + cfg.data_dir.string());
    return found;
  }
  return cfg.dataset_names;
}

namespace detail {

inline std::vector<PredictionRow> predict_with_drain(const Dataset& ds, const DrainParams& params) {
  auto assignment = drain_parse(ds.records, params);
  std::vector<PredictionRow> rows;
  rows.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    // Cluster templates share the wildcard syntax; canonicalize so {..} spans match the truth side.
    Template t = canonicalize(assignment.template_for(r.line_id).raw());
    rows.push_back({r.line_id, r.content, r.truth_template.raw(), t.raw(), "Clustered"});
  }
  return rows;
}

inline std::vector<PredictionRow> predict_with_llm(const Dataset& ds, const ExperimentConfig& cfg, ChatClient& client,
                                                   ResponseCache* cache, DatasetOutcome& outcome) {
  auto demos = select_demonstrations(ds, static_cast<std::size_t>(cfg.shots), cfg.seed);
  for (const auto& d : demos) outcome.demonstrations.push_back(d.source_line);

  const std::size_t n = ds.records.size();
  std::vector<PredictionRow> rows(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::optional<Error> first_error;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      const auto& rec = ds.records[i];
      try {
        auto prompt = render_prompt(cfg.variant, demos, rec.content);
        auto resp = cache ? client.cached_complete(prompt, *cache, &rec.truth_template)
                          : client.complete(prompt, &rec.truth_template);
        auto extraction = extract_delimited(resp.text);
        rows[i] = {rec.line_id, rec.content, rec.truth_template.raw(), prediction_template(extraction).raw(),
                   std::string(to_string(extraction.status))};
      } catch (const Error& e) {
        std::lock_guard lock(err_mu);
        if (!first_error) {
          first_error.emplace(e.kind(), "dataset " + ds.name + " line " + std::to_string(rec.line_id) + ": " + e.what());
        }
        failed = true;
        return;
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, cfg.backend.max_in_flight));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) throw *first_error;

  for (const auto& r : rows) {
    outcome.refusals += r.status == to_string(ExtractionStatus::Refusal);
    outcome.no_delimiter += r.status == to_string(ExtractionStatus::NoDelimiter);
  }
  return rows;
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  auto abs = [](const std::filesystem::path& p) { return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string(); };
  nlohmann::ordered_json j = {
      {"datasets", cfg.dataset_names},
      {"data_dir", abs(cfg.data_dir)},
      {"method", to_string(cfg.method)},
      {"prompt", to_string(cfg.variant)},
      {"shots", cfg.shots},
      {"seed", cfg.seed},
      {"output_dir", abs(cfg.output_dir)},
      {"cache", cfg.cache_path ? abs(*cfg.cache_path) : std::string()},
      {"drain_config", cfg.drain_config_path ? abs(*cfg.drain_config_path) : std::string()},
      {"sample", cfg.sample ? nlohmann::ordered_json(*cfg.sample) : nlohmann::ordered_json(nullptr)},
      {"backend",
       {{"kind", to_string(cfg.backend.kind)},
        {"model", cfg.backend.model_id},
        {"endpoint", cfg.backend.endpoint_url},
        {"temperature", cfg.backend.temperature},
        {"max_retries", cfg.backend.max_retries},
        {"requests_per_minute", cfg.backend.requests_per_minute},
        {"timeout_seconds", cfg.backend.timeout_seconds},
        {"max_in_flight", cfg.backend.max_in_flight},
        {"fixtures", abs(cfg.backend.fixture_path)}}},
  };
  return j;
}

}  // namespace detail

inline ExperimentConfig config_from_manifest(const nlohmann::json& manifest) {
  const auto& c = manifest.at("config");
  ExperimentConfig cfg;
  cfg.dataset_names = c.at("datasets").get<std::vector<std::string>>();
  cfg.data_dir = c.at("data_dir").get<std::string>();
  auto method = parse_method(c.at("method").get<std::string>());
  auto variant = parse_prompt_variant(c.at("prompt").get<std::string>());
  if (!method || !variant) throw Error(ErrorKind::InvalidConfig, "manifest has an unknown method or prompt");
  cfg.method = *method;
  cfg.variant = *variant;
  cfg.shots = c.at("shots").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.output_dir = c.at("output_dir").get<std::string>();
  if (auto s = c.at("cache").get<std::string>(); !s.empty()) cfg.cache_path = s;
  if (auto s = c.at("drain_config").get<std::string>(); !s.empty()) cfg.drain_config_path = s;
  if (!c.at("sample").is_null()) cfg.sample = c.at("sample").get<std::size_t>();
  const auto& b = c.at("backend");
  auto kind = parse_backend_kind(b.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorKind::InvalidConfig, "manifest has an unknown backend");
  cfg.backend.kind = *kind;
  cfg.backend.model_id = b.at("model").get<std::string>();
  cfg.backend.endpoint_url = b.at("endpoint").get<std::string>();
  cfg.backend.temperature = b.at("temperature").get<double>();
  cfg.backend.max_retries = b.at("max_retries").get<int>();
  cfg.backend.requests_per_minute = b.at("requests_per_minute").get<int>();
  cfg.backend.timeout_seconds = b.at("timeout_seconds").get<double>();
  cfg.backend.max_in_flight = b.at("max_in_flight").get<int>();
  cfg.backend.fixture_path = b.at("fixtures").get<std::string>();
  return cfg;
}

// Runs every dataset, writing <out>/<name>.predictions.csv, <out>/<name>.metrics.json,
// <out>/report.txt, <out>/report.csv and <out>/manifest.json. A failing dataset is
// recorded and skipped; configuration problems throw before any dataset is touched.
inline RunResult run_experiment(const ExperimentConfig& cfg, RunOptions opts = {}) {
  cfg.validate();
  const std::string started = utc_timestamp();
  const auto names = resolve_dataset_names(cfg);

  std::optional<ChatClient> client;
  std::unique_ptr<ResponseCache> cache;
  DrainConfig drain_cfg;
  if (cfg.method == Method::Llm) {
    if (opts.offline && !cfg.cache_path) throw Error(ErrorKind::InvalidConfig, "offline replay needs a response cache");
    BackendConfig backend = cfg.backend;
    std::optional<FixtureStore> fixtures = std::move(opts.fixtures);
    if (opts.offline && backend.kind == BackendKind::MockFixture && !fixtures) fixtures = FixtureStore{};
    client.emplace(backend, opts.api_key, std::move(fixtures));
    client->set_offline(opts.offline);
    if (cfg.cache_path) cache = std::make_unique<ResponseCache>(*cfg.cache_path);
  } else {
    drain_cfg = cfg.drain_config_path ? DrainConfig::load(*cfg.drain_config_path) : DrainConfig::parse(kBuiltinDrainConfig);
  }

  std::filesystem::create_directories(cfg.output_dir);
  RunResult result;
  for (const auto& name : names) {
    DatasetOutcome outcome;
    outcome.name = name;
    try {
      auto path = locate_dataset(cfg.data_dir, name);
      if (!path) throw Error(ErrorKind::IoError, "dataset " + name + " not found under " + cfg.data_dir.string());
      outcome.source = *path;
      Dataset ds = load_dataset(*path, name);
      if (cfg.sample) ds = sample_dataset(ds, *cfg.sample, cfg.seed);

      std::vector<PredictionRow> rows = cfg.method == Method::Drain
                                            ? detail::predict_with_drain(ds, drain_cfg.params_for(name))
                                            : detail::predict_with_llm(ds, cfg, *client, cache.get(), outcome);
      std::vector<Prediction> preds;
      preds.reserve(rows.size());
      for (const auto& r : rows) preds.push_back({r.line_id, Template::from_text(r.predicted_template)});
      auto report = evaluate(preds, ds);
      write_text(predictions_path(cfg.output_dir, name), format_predictions(rows));
      write_text(metrics_path(cfg.output_dir, name), metrics_to_json(report).dump(2) + "\n");
      outcome.report = std::move(report);
    } catch (const Error& e) {
      std::string msg = e.what();
      outcome.error = msg.find("dataset " + name) == std::string::npos ? "dataset " + name + ": " + msg : msg;
      MetricsReport failed;
      failed.dataset = name;
      failed.failure = outcome.error;
      write_text(metrics_path(cfg.output_dir, name), metrics_to_json(failed).dump(2) + "\n");
      std::error_code ec;
      std::filesystem::remove(predictions_path(cfg.output_dir, name), ec);
    }
    if (outcome.report) {
      MetricsReport summary = *outcome.report;
      summary.per_message.clear();
      result.reports.push_back(std::move(summary));
    } else {
      MetricsReport failed;
      failed.dataset = name;
      failed.failure = outcome.error;
      result.reports.push_back(std::move(failed));
    }
    result.outcomes.push_back(std::move(outcome));
  }

  write_text(cfg.output_dir / "report.txt", render_report(result.reports, ReportFormat::Table));
  write_text(cfg.output_dir / "report.csv", render_report(result.reports, ReportFormat::Csv));

  if (client) {
    result.backend_calls = client->backend_calls();
    result.cache_hits = client->cache_hits();
    result.cache_misses = client->cache_misses();
  }
  nlohmann::ordered_json datasets = nlohmann::ordered_json::array();
  for (const auto& o : result.outcomes) {
    nlohmann::ordered_json d = {{"name", o.name}, {"source", o.source.string()}, {"status", o.report ? "ok" : "failed"}};
    if (o.report) {
      d["n"] = o.report->n;
      d["refusals"] = o.refusals;
      d["no_delimiter"] = o.no_delimiter;
      d["demonstration_line_ids"] = o.demonstrations;
    } else {
      d["error"] = o.error;
    }
    datasets.push_back(std::move(d));
  }
  result.manifest = {
      {"tool", "logbench"},
      {"version", kToolVersion},
      {"started_at", started},
      {"finished_at", utc_timestamp()},
      {"replay", opts.offline},
      {"config", detail::config_to_json(cfg)},
      {"execution",
       {{"request_order", "records submitted in file order per dataset; datasets processed sequentially"},
        {"max_in_flight", cfg.method == Method::Llm ? cfg.backend.max_in_flight : 1}}},
      {"cache",
       {{"backend_calls", result.backend_calls}, {"hits", result.cache_hits}, {"misses", result.cache_misses}}},
      {"datasets", datasets},
  };
  write_text(cfg.output_dir / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

// Re-runs a recorded run from its manifest, serving every response from the cache.
inline RunResult replay_from_manifest(const std::filesystem::path& manifest_path,
                                      std::optional<std::filesystem::path> output_dir = std::nullopt) {
  auto manifest = nlohmann::json::parse(read_text(manifest_path));
  ExperimentConfig cfg = config_from_manifest(manifest);
  if (output_dir) cfg.output_dir = *output_dir;
  RunOptions opts;
  opts.offline = true;
  if (cfg.backend.kind == BackendKind::Remote) opts.api_key = opts.api_key.value_or("replay-offline");
  return run_experiment(cfg, std::move(opts));
}

}  // namespace logbench
