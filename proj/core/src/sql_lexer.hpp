#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bagcheck::sql {

enum class TokenKind { Identifier, QuotedIdentifier, Integer, Decimal, String, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // identifiers uppercased; strings unescaped
  std::size_t position = 0;

  /// Case-insensitive keyword test; quoted identifiers never match.
  bool is_keyword(std::string_view word) const;
  bool is_symbol(std::string_view s) const { return kind == TokenKind::Symbol && text == s; }
};

/// Throws SqlError(Syntax) on unterminated strings or stray characters.
std::vector<Token> tokenize(std::string_view text);

}  // namespace bagcheck::sql
