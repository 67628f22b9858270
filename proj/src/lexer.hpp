#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pictoforge/stdl.hpp"

namespace pictoforge::detail {

enum class Tok {
  Ident,
  String,
  Number,
  Input, // $input
  LBrace,
  RBrace,
  LParen,
  RParen,
  Semi,
  Colon,
  Comma,
  Arrow,
  Assign,
  Plus,
  EqEq,
  NotEq,
  End,
};

const char* describe(Tok t);

struct Token {
  Tok kind;
  std::string text; // identifier name, decoded string contents, digits
  SourceSpan span;
};

/// Tokenizes the whole source. Lexical errors are appended to `errors` and
/// scanning continues; the token stream always ends with Tok::End.
std::vector<Token> lex(std::string_view source, const std::string& file, std::vector<ParseError>& errors);

} // namespace pictoforge::detail
