#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logbench/core_model.hpp"
#include "logbench/dataset_io.hpp"
#include "logbench/error.hpp"

namespace logbench {

enum class PromptVariant { PT1, PT2, PT3, PT4 };

constexpr std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::PT1: return "PT1";
    case PromptVariant::PT2: return "PT2";
    case PromptVariant::PT3: return "PT3";
    case PromptVariant::PT4: return "PT4";
  }
  return "PT?";
}

inline std::optional<PromptVariant> parse_prompt_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "pt1") return PromptVariant::PT1;
  if (lower == "pt2") return PromptVariant::PT2;
  if (lower == "pt3") return PromptVariant::PT3;
  if (lower == "pt4") return PromptVariant::PT4;
  return std::nullopt;
}

struct Demonstration {
  LineId source_line = 0;  // record the demonstration was drawn from; 0 if hand-made
  std::string log;
  Template template_;
};

struct PromptSpec {
  PromptVariant variant = PromptVariant::PT1;
  std::vector<Demonstration> demos;
  std::string target_log;
  std::string rendered;
};

namespace prompt_text {

inline constexpr std::string_view kOpening = "You will be provided with a log message delimited by backticks.";
inline constexpr std::string_view kAbstract =
    " You must abstract variables with `{placeholders}' to extract the corresponding template.";
inline constexpr std::string_view kPrint = "Print the input log's template delimited by backticks.";
inline constexpr std::string_view kSimple = " Please extract the log template from this log message:";
inline constexpr std::string_view kEnhanced =
    " You must identify and abstract all the dynamic variables in logs with `{placeholders}` and output a "
    "static log template.";

}  // namespace prompt_text

// Renders one of the four prompt templates. Layout:
//   PT1  opening + abstract + print, blank line, "Log message: `<log>'"
//   PT2  opening + abstract, "For example:", one line per demo, print, blank line, log line
//   PT3  opening + simple request, then "`<log>'" on its own line
//   PT4  opening + enhanced request + print, blank line, log line
inline PromptSpec render_prompt(PromptVariant variant, std::vector<Demonstration> demos, std::string target_log) {
  using namespace prompt_text;
  if (trim(target_log).empty()) throw Error(ErrorKind::EmptyLog, "target log message is empty");
  bool few_shot = variant == PromptVariant::PT2;
  if (few_shot && demos.empty()) throw Error(ErrorKind::ArityMismatch, "PT2 requires at least one demonstration");
  if (!few_shot && !demos.empty()) {
    throw Error(ErrorKind::ArityMismatch, std::string(to_string(variant)) + " is zero-shot; demonstrations given");
  }
  for (const auto& d : demos) {
    if (trim(d.log).empty() || d.template_.empty()) {
      throw Error(ErrorKind::ArityMismatch, "demonstration with empty log or template");
    }
  }

  std::string text;
  const std::string log_line = "Log message: `" + target_log + "'";
  switch (variant) {
    case PromptVariant::PT1:
      text.append(kOpening).append(kAbstract).append(" ").append(kPrint).append("\n\n").append(log_line);
      break;
    case PromptVariant::PT2:
      text.append(kOpening).append(kAbstract).append("\nFor example:\n");
      for (const auto& d : demos) {
        text.append("The template of `").append(d.log).append("' is `").append(d.template_.raw()).append("'.\n");
      }
      text.append(kPrint).append("\n\n").append(log_line);
      break;
    case PromptVariant::PT3:
      text.append(kOpening).append(kSimple).append("\n`").append(target_log).append("'");
      break;
    case PromptVariant::PT4:
      text.append(kOpening).append(kEnhanced).append(" ").append(kPrint).append("\n\n").append(log_line);
      break;
  }
  return PromptSpec{variant, std::move(demos), std::move(target_log), std::move(text)};
}

namespace detail {

// Uniform integer in [0, bound) from a fully specified engine, so sampling is
// identical across standard library implementations.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace detail

// k = 0: none. k = 1: the most frequent content string (ties -> smallest line id).
// k >= 2: seeded sampling without replacement over truth-template groups; each
// chosen group contributes its smallest-line-id member, in selection order.
inline std::vector<Demonstration> select_demonstrations(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k > ds.template_index.size()) {
    throw Error(ErrorKind::InsufficientTemplates, "requested " + std::to_string(k) + " demonstrations but dataset '" +
                                                      ds.name + "' has only " +
                                                      std::to_string(ds.template_index.size()) + " distinct templates");
  }
  std::vector<Demonstration> out;
  if (k == 0) return out;

  std::unordered_map<LineId, const LogRecord*> by_id;
  for (const auto& r : ds.records) by_id.emplace(r.line_id, &r);

  if (k == 1) {
    struct Tally {
      std::size_t count = 0;
      const LogRecord* first = nullptr;
    };
    std::unordered_map<std::string_view, Tally> tally;
    for (const auto& r : ds.records) {
      auto& t = tally[r.content];
      ++t.count;
      if (!t.first || r.line_id < t.first->line_id) t.first = &r;
    }
    const LogRecord* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [content, t] : tally) {
      if (t.count > best_count || (t.count == best_count && t.first->line_id < best->line_id)) {
        best = t.first;
        best_count = t.count;
      }
    }
    out.push_back({best->line_id, best->content, best->truth_template});
    return out;
  }

  // Groups in order of first appearance, represented by their smallest line id.
  std::vector<LineId> representatives;
  representatives.reserve(ds.template_index.size());
  for (const auto& [tmpl, ids] : ds.template_index) representatives.push_back(*ids.begin());
  std::sort(representatives.begin(), representatives.end());
  detail::seeded_shuffle(representatives, seed);
  for (std::size_t i = 0; i < k; ++i) {
    const LogRecord* r = by_id.at(representatives[i]);
    out.push_back({r->line_id, r->content, r->truth_template});
  }
  return out;
}

}  // namespace logbench
