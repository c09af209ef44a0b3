#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace logbench {

inline constexpr std::string_view kWildcard = "<*>";

enum class TokenKind { Literal, Wildcard };

struct Token {
  TokenKind kind = TokenKind::Literal;
  std::string text;

  static Token literal(std::string text) { return {TokenKind::Literal, std::move(text)}; }
  static Token wildcard() { return {TokenKind::Wildcard, std::string(kWildcard)}; }

  friend bool operator==(const Token&, const Token&) = default;
};

inline bool is_wildcard(const Token& tok) noexcept { return tok.kind == TokenKind::Wildcard; }

inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Splits on runs of ASCII whitespace. A piece equal to "<*>" becomes a wildcard.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) {
      std::string_view piece = text.substr(start, i - start);
      tokens.push_back(piece == kWildcard ? Token::wildcard() : Token::literal(std::string(piece)));
    }
  }
  return tokens;
}

inline std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (!out.empty()) out += ' ';
    out += tok.text;
  }
  return out;
}

// Trim and collapse internal whitespace runs to single spaces.
inline std::string normalize_spaces(std::string_view text) { return join_tokens(tokenize(text)); }

inline std::string_view trim(std::string_view text) noexcept {
  std::size_t b = 0, e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return text.substr(b, e - b);
}

// Canonical token sequence; raw is always the single-space join of tokens.
class Template {
 public:
  Template() = default;

  // Builds from already-canonical text; whitespace is normalized, no placeholder rewriting.
  static Template from_text(std::string_view text) { return from_tokens(tokenize(text)); }

  static Template from_tokens(std::vector<Token> tokens) {
    Template t;
    t.raw_ = join_tokens(tokens);
    t.tokens_ = std::move(tokens);
    return t;
  }

  const std::string& raw() const noexcept { return raw_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  bool empty() const noexcept { return tokens_.empty(); }
  std::size_t wildcard_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tokens_) n += is_wildcard(t) ? 1 : 0;
    return n;
  }

  friend bool operator==(const Template& a, const Template& b) { return a.tokens_ == b.tokens_; }

 private:
  std::string raw_;
  std::vector<Token> tokens_;
};

using LineId = std::uint64_t;

struct LogRecord {
  LineId line_id = 0;
  std::string content;
  Template truth_template;
};

}  // namespace logbench
