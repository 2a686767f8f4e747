#include "sql_lexer.hpp"

#include <cctype>

#include "bagcheck/catalog.hpp"
#include "bagcheck/error.hpp"

namespace bagcheck::sql {

bool Token::is_keyword(std::string_view word) const {
  if (kind != TokenKind::Identifier || text.size() != word.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (text[i] != std::toupper(static_cast<unsigned char>(word[i]))) return false;
  }
  return true;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_part(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto syntax = [&](const std::string& msg, std::size_t at) { throw SqlError(SqlError::Kind::Syntax, msg, at); };

  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      auto end = text.find("*/", i + 2);
      if (end == std::string_view::npos) syntax("unterminated comment", i);
      i = end + 2;
      continue;
    }
    std::size_t start = i;
    if (ident_start(c)) {
      while (i < text.size() && ident_part(text[i])) ++i;
      out.push_back({TokenKind::Identifier, canonical_identifier(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '"' || c == '`') {
      auto end = text.find(c, i + 1);
      if (end == std::string_view::npos) syntax("unterminated quoted identifier", i);
      out.push_back({TokenKind::QuotedIdentifier, canonical_identifier(text.substr(i + 1, end - i - 1)), start});
      i = end + 1;
      continue;
    }
    if (digit(c) || (c == '.' && i + 1 < text.size() && digit(text[i + 1]))) {
      bool dot = false;
      while (i < text.size() && (digit(text[i]) || (text[i] == '.' && !dot))) {
        dot |= text[i] == '.';
        ++i;
      }
      if (i < text.size() && (ident_start(text[i]))) syntax("malformed number", start);
      out.push_back({dot ? TokenKind::Decimal : TokenKind::Integer, std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      for (;;) {
        if (i >= text.size()) syntax("unterminated string literal", start);
        if (text[i] == '\'') {
          if (i + 1 < text.size() && text[i + 1] == '\'') {
            value.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value.push_back(text[i++]);
      }
      out.push_back({TokenKind::String, std::move(value), start});
      continue;
    }
    static constexpr std::string_view two[] = {"<>", "!=", "<=", ">=", "||"};
    bool matched = false;
    for (auto s : two) {
      if (text.substr(i, 2) == s) {
        out.push_back({TokenKind::Symbol, std::string(s), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.;*+-/%=<>").find(c) != std::string_view::npos) {
      out.push_back({TokenKind::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    syntax(std::string("unexpected character '") + c + "'", i);
  }
  out.push_back({TokenKind::End, {}, text.size()});
  return out;
}

}  // namespace bagcheck::sql
