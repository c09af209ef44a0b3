#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "logbench/baseline_drain.hpp"
#include "logbench/core_model.hpp"
#include "logbench/error.hpp"

namespace logbench {

// Per-dataset Drain settings:
//
//   [Apache]
//   depth = 4
//   similarity_threshold = 0.5
//   max_children = 100
//   preprocess = (\d+\.){3}\d+     (repeatable; order is preserved)
//
// A [default] section, when present, applies to datasets without their own.
class DrainConfig {
 public:
  static DrainConfig parse(std::string_view text) {
    DrainConfig cfg;
    DrainParams* current = nullptr;
    std::size_t line_no = 0;
    std::size_t b = 0;
    while (b <= text.size()) {
      std::size_t e = text.find('\n', b);
      if (e == std::string_view::npos) e = text.size();
      std::string_view line = trim(text.substr(b, e - b));
      b = e + 1;
      ++line_no;
      auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::InvalidConfig, "drain config line " + std::to_string(line_no) + ": " + why);
      };
      if (line.empty() || line.front() == '#') continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail("unterminated section header");
        std::string name(trim(line.substr(1, line.size() - 2)));
        if (name.empty()) fail("empty section name");
        current = &cfg.sections_[name];
        continue;
      }
      auto eq = line.find('=');
      if (eq == std::string_view::npos) fail("expected key = value");
      if (!current) fail("setting outside of a [dataset] section");
      std::string key(trim(line.substr(0, eq)));
      std::string value(trim(line.substr(eq + 1)));
      if (key == "depth") current->depth = parse_number<int>(value, fail);
      else if (key == "similarity_threshold") current->similarity_threshold = parse_number<double>(value, fail);
      else if (key == "max_children") current->max_children = parse_number<int>(value, fail);
      else if (key == "preprocess") current->preprocess_patterns.push_back(value);
      else fail("unknown key '" + key + "'");
    }
    for (const auto& [name, p] : cfg.sections_) p.validate();
    return cfg;
  }

  static DrainConfig load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open drain config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  DrainParams params_for(const std::string& dataset) const {
    if (auto it = sections_.find(dataset); it != sections_.end()) return it->second;
    if (auto it = sections_.find("default"); it != sections_.end()) return it->second;
    return DrainParams{};
  }

  bool has(const std::string& dataset) const { return sections_.count(dataset) > 0; }
  const std::map<std::string, DrainParams>& sections() const noexcept { return sections_; }

 private:
  template <typename T, typename Fail>
  static T parse_number(const std::string& value, Fail&& fail) {
    if constexpr (std::is_same_v<T, double>) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        fail("not a number: '" + value + "'");
      }
      if (used != value.size()) fail("not a number: '" + value + "'");
      return v;
    } else {
      T v{};
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr != value.data() + value.size()) fail("not an integer: '" + value + "'");
      return v;
    }
  }

  std::map<std::string, DrainParams> sections_;
};

}  // namespace logbench
