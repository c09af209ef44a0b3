#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logbench/core_model.hpp"
#include "logbench/error.hpp"

namespace logbench {

// Prediction placeholder for refused responses; never equals a real template.
inline constexpr std::string_view kRefusedSentinel = "<REFUSED>";

enum class ExtractionStatus { Extracted, NoDelimiter, Refusal };

constexpr std::string_view to_string(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::Extracted: return "Extracted";
    case ExtractionStatus::NoDelimiter: return "NoDelimiter";
    case ExtractionStatus::Refusal: return "Refusal";
  }
  return "Unknown";
}

struct ExtractionOutcome {
  ExtractionStatus status = ExtractionStatus::Refusal;
  std::optional<Template> template_;
  std::string note;
};

namespace detail {

// Replaces innermost {...} spans with "<*>". Returns true if anything changed.
inline bool replace_brace_spans_once(std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::optional<std::size_t> open;
  bool changed = false;
  for (char c : text) {
    if (c == '{') {
      open = out.size();
      out += c;
    } else if (c == '}' && open) {
      out.resize(*open);
      out += kWildcard;
      open.reset();
      changed = true;
    } else {
      out += c;
    }
  }
  text = std::move(out);
  return changed;
}

inline constexpr std::string_view kLeftQuote = "\xE2\x80\x98";   // U+2018
inline constexpr std::string_view kRightQuote = "\xE2\x80\x99";  // U+2019

inline bool is_word_byte(char c) noexcept {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

// Length of a closing-quote candidate at pos ("'" or U+2019), 0 otherwise.
inline std::size_t apostrophe_at(std::string_view s, std::size_t pos) noexcept {
  if (s[pos] == '\'') return 1;
  if (s.substr(pos, kRightQuote.size()) == kRightQuote) return kRightQuote.size();
  return 0;
}

inline std::size_t opener_at(std::string_view s, std::size_t pos) noexcept {
  if (s[pos] == '`') return 1;
  if (s.substr(pos, kLeftQuote.size()) == kLeftQuote) return kLeftQuote.size();
  return 0;
}

struct Span {
  std::size_t opener = 0;  // offset of the opening delimiter
  std::string text;        // interior, trimmed
};

// End of the interior for a single-character-delimited span starting at begin.
// Apostrophes glued inside words ("Can't") are skipped; quotes opened inside the
// span are balanced before one can close it.
inline std::size_t find_span_end(std::string_view s, std::size_t begin) {
  std::size_t limit = begin;
  while (limit < s.size() && s[limit] != '`' && s[limit] != '\n') ++limit;
  int depth = 0;
  std::size_t j = begin;
  while (j < limit) {
    std::size_t len = apostrophe_at(s, j);
    if (len == 0 && s.substr(j, kLeftQuote.size()) == kLeftQuote) {
      ++depth;
      j += kLeftQuote.size();
      continue;
    }
    if (len == 0) {
      ++j;
      continue;
    }
    std::size_t after = j + len;
    bool at_end = after >= limit;
    char prev = j == begin ? ' ' : s[j - 1];
    bool prev_boundary = j == begin || is_space(prev) || std::string_view("([{<=:,\"").find(prev) != std::string_view::npos;
    bool closer = at_end || !is_word_byte(s[after]);
    bool opener = prev_boundary && !at_end && !is_space(s[after]);
    if (opener && !closer) {
      ++depth;
    } else if (closer) {
      if (depth == 0) return j;
      --depth;
    }
    j = after;
  }
  return limit;
}

inline std::vector<Span> find_spans(std::string_view s) {
  std::vector<Span> spans;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t open_len = opener_at(s, pos);
    if (open_len == 0) {
      ++pos;
      continue;
    }
    if (s.substr(pos, 3) == "```") {
      std::size_t body = pos + 3;
      std::size_t close = s.find("```", body);
      std::string_view inner = s.substr(body, close == std::string_view::npos ? std::string_view::npos : close - body);
      // Skip an info string such as ```text on the fence line.
      std::vector<std::string_view> lines;
      std::size_t b = 0;
      while (b <= inner.size()) {
        std::size_t e = inner.find('\n', b);
        if (e == std::string_view::npos) e = inner.size();
        lines.push_back(inner.substr(b, e - b));
        b = e + 1;
      }
      std::size_t first = 0;
      if (lines.size() > 1 && !trim(lines[0]).empty() && trim(lines[0]).find(' ') == std::string_view::npos) {
        bool more = std::any_of(lines.begin() + 1, lines.end(), [](auto l) { return !trim(l).empty(); });
        if (more) first = 1;
      }
      for (std::size_t i = first; i < lines.size(); ++i) {
        if (!trim(lines[i]).empty()) {
          spans.push_back({pos, std::string(trim(lines[i]))});
          break;
        }
      }
      pos = close == std::string_view::npos ? s.size() : close + 3;
      continue;
    }
    std::size_t begin = pos + open_len;
    std::size_t end = find_span_end(s, begin);
    std::string_view interior = trim(s.substr(begin, end - begin));
    if (!interior.empty()) spans.push_back({pos, std::string(interior)});
    if (end >= s.size()) break;
    // A closing backtick is consumed; a closing apostrophe is skipped.
    pos = end + (s[end] == '`' ? 1 : std::max<std::size_t>(apostrophe_at(s, end), 1));
  }
  return spans;
}

// "The template of `x' is `y'" style lead-in directly before a span.
inline bool has_template_lead_in(std::string_view s, std::size_t opener) {
  std::size_t line_start = s.rfind('\n', opener == 0 ? 0 : opener - 1);
  line_start = (line_start == std::string_view::npos || opener == 0) ? 0 : line_start + 1;
  std::string prefix(s.substr(line_start, opener - line_start));
  std::transform(prefix.begin(), prefix.end(), prefix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  while (!prefix.empty() && (is_space(prefix.back()) || prefix.back() == ':')) prefix.pop_back();
  if (prefix.size() < 2 || prefix.compare(prefix.size() - 2, 2, "is") != 0) return false;
  if (prefix.size() > 2 && is_word_byte(prefix[prefix.size() - 3])) return false;
  std::size_t t = prefix.find("template");
  return t != std::string::npos && t + 8 <= prefix.size() - 2;
}

inline constexpr std::array<std::string_view, 16> kRefusalPhrases = {
    "i need more information", "need more information", "cannot determine", "can't determine",
    "could you provide",       "please provide",        "more context",     "not enough information",
    "i'm sorry",               "i am sorry",            "as an ai",         "unable to determine",
    "unable to extract",       "i cannot",              "i can't",          "insufficient information",
};

inline bool looks_like_refusal(std::string_view response) {
  std::string lower(response);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::any_of(kRefusalPhrases.begin(), kRefusalPhrases.end(),
                     [&](std::string_view p) { return lower.find(p) != std::string::npos; });
}

}  // namespace detail

// Maps {placeholder} spans to "<*>" (to a fixpoint, so nested braces collapse),
// trims, and collapses whitespace. Consecutive wildcards stay separate.
inline Template canonicalize(std::string_view raw) {
  std::string text(raw);
  while (detail::replace_brace_spans_once(text)) {
  }
  Template t = Template::from_text(text);
  if (t.empty()) throw Error(ErrorKind::EmptyTemplate, "template is empty after canonicalization");
  return t;
}

inline Template refused_template() { return Template::from_text(kRefusedSentinel); }

inline bool is_refused(const Template& t) { return t.raw() == kRefusedSentinel; }

inline ExtractionOutcome extract_delimited(std::string_view response) {
  using detail::find_spans;
  std::string_view body = trim(response);

  // A response that is exactly one delimited span, e.g. "`...'".
  if (!body.empty()) {
    std::size_t open_len = detail::opener_at(body, 0);
    std::size_t close_len = 0;
    if (body.back() == '`' || body.back() == '\'') close_len = 1;
    else if (body.size() >= 3 && body.substr(body.size() - 3) == detail::kRightQuote) close_len = 3;
    if (open_len > 0 && close_len > 0 && body.size() > open_len + close_len && body.substr(0, 3) != "```") {
      std::string_view inner = body.substr(open_len, body.size() - open_len - close_len);
      if (inner.find('`') == std::string_view::npos && inner.find('\n') == std::string_view::npos &&
          !trim(inner).empty()) {
        return {ExtractionStatus::Extracted, canonicalize(inner), "whole response delimited"};
      }
    }
  }

  auto spans = find_spans(body);
  if (!spans.empty()) {
    const detail::Span* chosen = &spans.front();
    std::string note = "first delimited span";
    for (const auto& sp : spans) {
      if (detail::has_template_lead_in(body, sp.opener)) {
        chosen = &sp;
        note = "span after template lead-in";
        break;
      }
    }
    return {ExtractionStatus::Extracted, canonicalize(chosen->text), note};
  }

  if (body.empty()) return {ExtractionStatus::Refusal, std::nullopt, "empty response"};
  if (detail::looks_like_refusal(body)) return {ExtractionStatus::Refusal, std::nullopt, "refusal heuristic matched"};

  std::string_view last_line;
  std::size_t b = 0;
  while (b <= body.size()) {
    std::size_t e = body.find('\n', b);
    if (e == std::string_view::npos) e = body.size();
    auto line = trim(body.substr(b, e - b));
    if (!line.empty()) last_line = line;
    b = e + 1;
  }
  return {ExtractionStatus::NoDelimiter, canonicalize(last_line), "no delimiter; used last non-empty line"};
}

// Template used as the prediction for an outcome; refusals map to the sentinel.
inline Template prediction_template(const ExtractionOutcome& outcome) {
  if (outcome.status == ExtractionStatus::Refusal || !outcome.template_) return refused_template();
  return *outcome.template_;
}

}  // namespace logbench
