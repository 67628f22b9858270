#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pictoforge/model.hpp"

namespace pictoforge {

enum class ParseCode {
  Lex001, // bad character
  Lex002, // unterminated string
  Lex003, // bad escape or malformed ${...}
  Syn001, // unexpected token
  Syn002, // unexpected end of input
  DupName,
  DupEntry,
  DupRoot,
};

const char* to_string(ParseCode code);

struct ParseError {
  ParseCode code;
  SourceSpan span;
  std::string message;
};

/// `file:line:col: CODE message`
std::string format_error(const ParseError& e);

struct ParseResult {
  std::optional<DesignModel> model; // set iff errors is empty
  std::vector<ParseError> errors;

  bool ok() const { return model.has_value(); }
};

ParseResult parse(std::string_view source, const std::string& source_name);

/// Parses `source` and throws Error("PARSE_ERROR") listing every error.
DesignModel parse_or_throw(std::string_view source, const std::string& source_name);

/// Canonical text: one statement per line, two-space indent, items separated by a blank line.
std::string pretty_print(const DesignModel& model);

/// Quoted, escaped string literal as it appears in canonical text.
std::string quote(const std::string& text);

/// Parses a single assignment expression (`"a" + x + $input`).
std::optional<std::vector<Term>> parse_expr(std::string_view text);
std::string print_expr(const std::vector<Term>& expr);

} // namespace pictoforge
