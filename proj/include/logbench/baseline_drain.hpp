#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include "logbench/core_model.hpp"
#include "logbench/error.hpp"

namespace logbench {

struct DrainParams {
  int depth = 4;  // root, length layer, depth-3 prefix-token layers, leaf layer
  double similarity_threshold = 0.5;
  int max_children = 100;
  std::vector<std::string> preprocess_patterns;  // each match is replaced by "<*>"

  void validate() const {
    if (depth < 3) throw Error(ErrorKind::InvalidConfig, "drain depth must be >= 3");
    if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "drain similarity threshold must lie in (0, 1]");
    }
    if (max_children <= 0) throw Error(ErrorKind::InvalidConfig, "drain max_children must be positive");
  }
};

struct ClusterAssignment {
  std::map<LineId, std::size_t> cluster_of;
  std::vector<Template> templates;  // indexed by cluster id

  const Template& template_for(LineId id) const { return templates.at(cluster_of.at(id)); }
};

// Fixed-depth prefix-tree parser. Messages are routed by token count, then by
// their leading tokens; each leaf holds clusters compared by positional
// similarity. One instance parses one ordered stream.
class DrainParser {
 public:
  explicit DrainParser(DrainParams params) : params_(std::move(params)) {
    params_.validate();
    for (const auto& p : params_.preprocess_patterns) {
      try {
        rules_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw Error(ErrorKind::InvalidConfig, "bad preprocess pattern '" + p + "': " + e.what());
      }
    }
  }

  std::string preprocess(const std::string& content) const {
    std::string line = content;
    for (const auto& rule : rules_) line = std::regex_replace(line, rule, std::string(kWildcard));
    return line;
  }

  // Returns the cluster id the message joined or created.
  std::size_t add(const std::string& content) {
    std::vector<std::string> tokens = split(preprocess(content));
    Node& leaf = route(tokens);
    if (auto match = best_match(leaf, tokens)) {
      auto& tmpl = clusters_[*match];
      for (std::size_t i = 0; i < tmpl.size(); ++i)
        if (tmpl[i] != tokens[i]) tmpl[i] = std::string(kWildcard);
      return *match;
    }
    clusters_.push_back(std::move(tokens));
    leaf.clusters.push_back(clusters_.size() - 1);
    return clusters_.size() - 1;
  }

  std::size_t cluster_count() const noexcept { return clusters_.size(); }

  Template cluster_template(std::size_t id) const {
    std::vector<Token> toks;
    for (const auto& t : clusters_.at(id)) toks.push_back(t == kWildcard ? Token::wildcard() : Token::literal(t));
    return Template::from_tokens(std::move(toks));
  }

 private:
  struct Node {
    std::unordered_map<std::string, std::unique_ptr<Node>> children;
    std::vector<std::size_t> clusters;
  };

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    for (auto& tok : tokenize(line)) out.push_back(std::move(tok.text));
    return out;
  }

  static bool has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
  }

  // Walks (creating as needed) to the leaf for this token sequence.
  Node& route(const std::vector<std::string>& tokens) {
    Node* node = &by_length_[tokens.size()];
    const std::size_t prefix = std::min<std::size_t>(static_cast<std::size_t>(params_.depth - 3), tokens.size());
    const std::string wildcard(kWildcard);
    const auto max_children = static_cast<std::size_t>(params_.max_children);
    for (std::size_t i = 0; i < prefix; ++i) {
      const std::string& tok = tokens[i];
      auto& kids = node->children;
      if (auto it = kids.find(tok); it != kids.end()) {
        node = it->second.get();
        continue;
      }
      auto wild = kids.find(wildcard);
      auto descend_new = [&](const std::string& key) {
        auto& slot = kids[key];
        slot = std::make_unique<Node>();
        return slot.get();
      };
      if (has_digit(tok)) {
        node = wild != kids.end() ? wild->second.get() : descend_new(wildcard);
      } else if (wild != kids.end()) {
        node = kids.size() < max_children ? descend_new(tok) : wild->second.get();
      } else if (kids.size() + 1 < max_children) {
        node = descend_new(tok);
      } else {
        // The last free slot is reserved for the wildcard branch.
        node = descend_new(wildcard);
      }
    }
    return *node;
  }

  std::optional<std::size_t> best_match(const Node& leaf, const std::vector<std::string>& tokens) const {
    std::optional<std::size_t> best;
    double best_sim = -1.0;
    long best_params = -1;
    for (std::size_t id : leaf.clusters) {
      const auto& tmpl = clusters_[id];
      std::size_t same = 0;
      long params = 0;
      for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == kWildcard) ++params;
        else if (tmpl[i] == tokens[i]) ++same;
      }
      double sim = tmpl.empty() ? 1.0 : static_cast<double>(same) / static_cast<double>(tmpl.size());
      if (sim > best_sim || (sim == best_sim && params > best_params)) {
        best = id;
        best_sim = sim;
        best_params = params;
      }
    }
    if (best && best_sim >= params_.similarity_threshold) return best;
    return std::nullopt;
  }

  DrainParams params_;
  std::vector<std::regex> rules_;
  std::map<std::size_t, Node> by_length_;
  std::vector<std::vector<std::string>> clusters_;
};

inline ClusterAssignment drain_parse(const std::vector<LogRecord>& records, const DrainParams& params) {
  DrainParser parser(params);
  ClusterAssignment out;
  for (const auto& r : records) out.cluster_of[r.line_id] = parser.add(r.content);
  out.templates.reserve(parser.cluster_count());
  for (std::size_t i = 0; i < parser.cluster_count(); ++i) out.templates.push_back(parser.cluster_template(i));
  return out;
}

}  // namespace logbench
