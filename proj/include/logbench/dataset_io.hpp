#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "logbench/core_model.hpp"
#include "logbench/csv.hpp"
#include "logbench/error.hpp"
#include "logbench/template_extractor.hpp"

namespace logbench {

using Grouping = std::map<std::string, std::set<LineId>>;

struct Dataset {
  std::string name;
  std::vector<LogRecord> records;
  Grouping template_index;  // canonical truth template -> line ids

  const LogRecord* find(LineId id) const {
    for (const auto& r : records)
      if (r.line_id == id) return &r;
    return nullptr;
  }
};

inline Grouping build_template_index(const std::vector<LogRecord>& records) {
  Grouping index;
  for (const auto& r : records) index[r.truth_template.raw()].insert(r.line_id);
  return index;
}

// Parses the text of a structured benchmark file. Row numbers in errors are
// 1-based data rows (the header is row 0).
inline Dataset parse_dataset(std::string_view text, std::string name) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw Error(ErrorKind::MissingColumn, "file has no header row");

  const auto& header = rows.front().fields;
  auto column = [&](std::string_view col) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == col) return i;
    return std::nullopt;
  };
  auto content_col = column("Content");
  auto template_col = column("EventTemplate");
  auto line_col = column("LineId");
  if (!content_col) throw Error(ErrorKind::MissingColumn, "required column 'Content' not found");
  if (!template_col) throw Error(ErrorKind::MissingColumn, "required column 'EventTemplate' not found");
  if (rows.size() == 1) throw Error(ErrorKind::EmptyDataset, "no data rows in dataset '" + name + "'");

  Dataset ds;
  ds.name = std::move(name);
  ds.records.reserve(rows.size() - 1);
  std::unordered_set<LineId> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorKind::MalformedRow,
                  "row " + std::to_string(r) + " (line " + std::to_string(rows[r].line) + "): " + why);
    };
    if (f.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
    }
    LogRecord rec;
    if (line_col) {
      auto text_id = trim(f[*line_col]);
      LineId id = 0;
      auto [ptr, ec] = std::from_chars(text_id.data(), text_id.data() + text_id.size(), id);
      if (ec != std::errc{} || ptr != text_id.data() + text_id.size() || id == 0) fail("invalid LineId '" + std::string(text_id) + "'");
      rec.line_id = id;
    } else {
      rec.line_id = r;
    }
    if (!seen.insert(rec.line_id).second) fail("duplicate LineId " + std::to_string(rec.line_id));
    rec.content = f[*content_col];
    if (trim(rec.content).empty()) fail("empty Content");
    try {
      rec.truth_template = canonicalize(f[*template_col]);
    } catch (const Error&) {
      fail("empty EventTemplate");
    }
    ds.records.push_back(std::move(rec));
  }
  ds.template_index = build_template_index(ds.records);
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), std::move(name));
}

inline Grouping truth_grouping(const Dataset& ds) { return ds.template_index; }

// The sixteen systems of the corrected loghub-2k benchmark.
inline const std::vector<std::string>& benchmark_dataset_names() {
  static const std::vector<std::string> names = {
      "HDFS",    "Hadoop", "Spark",     "Zookeeper", "BGL",       "HPC",     "Thunderbird", "Windows",
      "Linux",   "Android", "HealthApp", "Apache",    "Proxifier", "OpenSSH", "OpenStack",   "Mac"};
  return names;
}

// Looks for a dataset file under data_dir using the common loghub layouts.
inline std::optional<std::filesystem::path> locate_dataset(const std::filesystem::path& data_dir,
                                                           const std::string& name) {
  const std::vector<std::string> files = {
      name + "_2k.log_structured_corrected.csv",
      name + "_2k.log_structured.csv",
      name + ".csv",
  };
  for (const auto& f : files) {
    for (const auto& candidate : {data_dir / name / f, data_dir / f}) {
      std::error_code ec;
      if (std::filesystem::is_regular_file(candidate, ec)) return candidate;
    }
  }
  return std::nullopt;
}

}  // namespace logbench
