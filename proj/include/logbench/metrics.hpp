#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logbench/core_model.hpp"
#include "logbench/dataset_io.hpp"
#include "logbench/error.hpp"
#include "logbench/template_extractor.hpp"

namespace logbench {

struct Prediction {
  LineId line_id = 0;
  Template template_;  // canonical; may be the refusal sentinel
};

struct MessageScore {
  LineId line_id = 0;
  bool group_correct = false;
  bool message_correct = false;
  std::size_t edit_distance = 0;
};

struct MetricsReport {
  std::string dataset;
  double ga = 0.0;
  double mla = 0.0;
  double ed = 0.0;
  std::size_t n = 0;
  std::vector<MessageScore> per_message;
  std::optional<std::string> failure;  // set when the dataset could not be evaluated
};

namespace detail {

// Predictions reordered to match truth.records; throws unless every record has exactly one.
inline std::vector<const Prediction*> align(const std::vector<Prediction>& preds, const Dataset& truth) {
  std::unordered_map<LineId, const Prediction*> by_id;
  by_id.reserve(preds.size());
  for (const auto& p : preds) {
    if (!by_id.emplace(p.line_id, &p).second) {
      throw Error(ErrorKind::CoverageMismatch, "duplicate prediction for line " + std::to_string(p.line_id));
    }
  }
  std::vector<const Prediction*> aligned;
  aligned.reserve(truth.records.size());
  for (const auto& r : truth.records) {
    auto it = by_id.find(r.line_id);
    if (it == by_id.end()) throw Error(ErrorKind::CoverageMismatch, "no prediction for line " + std::to_string(r.line_id));
    aligned.push_back(it->second);
  }
  if (preds.size() != truth.records.size()) {
    throw Error(ErrorKind::CoverageMismatch, "predictions reference line ids absent from dataset '" + truth.name + "'");
  }
  return aligned;
}

inline std::vector<bool> group_correctness(const std::vector<const Prediction*>& aligned, const Dataset& truth) {
  const auto& recs = truth.records;
  std::unordered_map<std::string_view, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (!is_refused(aligned[i]->template_)) groups[aligned[i]->template_.raw()].push_back(i);
  }
  std::vector<bool> correct(aligned.size(), false);
  for (const auto& [tmpl, members] : groups) {
    const std::string& t0 = recs[members.front()].truth_template.raw();
    bool same_truth = std::all_of(members.begin(), members.end(),
                                  [&](std::size_t i) { return recs[i].truth_template.raw() == t0; });
    if (same_truth && truth.template_index.at(t0).size() == members.size()) {
      for (std::size_t i : members) correct[i] = true;
    }
  }
  return correct;
}

// UTF-8 to code points; stray bytes stand for themselves.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) ok = (static_cast<unsigned char>(s[i + k]) >> 6) == 0x2;
    if (!ok) {
      out.push_back(0xDC00 + c);  // lone byte, kept distinct from valid scalars
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : c & (0xFF >> (len + 1));
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace detail

// Character-level edit distance with unit insert/delete/substitute costs.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  auto x = detail::decode_utf8(a);
  auto y = detail::decode_utf8(b);
  if (x.size() < y.size()) std::swap(x, y);
  std::vector<std::size_t> row(y.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[y.size()];
}

// A message is correct iff the set of messages sharing its predicted template
// equals the set sharing its truth template. Refused predictions never are.
inline double group_accuracy(const std::vector<Prediction>& preds, const Dataset& truth) {
  auto aligned = detail::align(preds, truth);
  auto correct = detail::group_correctness(aligned, truth);
  return static_cast<double>(std::count(correct.begin(), correct.end(), true)) / static_cast<double>(aligned.size());
}

inline double message_level_accuracy(const std::vector<Prediction>& preds, const Dataset& truth) {
  auto aligned = detail::align(preds, truth);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    correct += !is_refused(aligned[i]->template_) && aligned[i]->template_ == truth.records[i].truth_template;
  }
  return static_cast<double>(correct) / static_cast<double>(aligned.size());
}

inline double avg_edit_distance(const std::vector<Prediction>& preds, const Dataset& truth) {
  auto aligned = detail::align(preds, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    total += static_cast<double>(levenshtein(aligned[i]->template_.raw(), truth.records[i].truth_template.raw()));
  }
  return total / static_cast<double>(aligned.size());
}

// All three metrics in one pass, with per-message detail.
inline MetricsReport evaluate(const std::vector<Prediction>& preds, const Dataset& truth) {
  auto aligned = detail::align(preds, truth);
  auto grouped = detail::group_correctness(aligned, truth);
  MetricsReport rep;
  rep.dataset = truth.name;
  rep.n = aligned.size();
  rep.per_message.reserve(rep.n);
  std::size_t ga = 0, mla = 0;
  double ed = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const auto& rec = truth.records[i];
    MessageScore s;
    s.line_id = rec.line_id;
    s.group_correct = grouped[i];
    s.message_correct = !is_refused(aligned[i]->template_) && aligned[i]->template_ == rec.truth_template;
    s.edit_distance = levenshtein(aligned[i]->template_.raw(), rec.truth_template.raw());
    ga += s.group_correct;
    mla += s.message_correct;
    ed += static_cast<double>(s.edit_distance);
    rep.per_message.push_back(s);
  }
  const double n = static_cast<double>(rep.n);
  rep.ga = static_cast<double>(ga) / n;
  rep.mla = static_cast<double>(mla) / n;
  rep.ed = ed / n;
  return rep;
}

}  // namespace logbench
