#include "lexer.hpp"

#include "pictoforge/model.hpp"

namespace pictoforge::detail {

const char* describe(Tok t) {
  switch (t) {
  case Tok::Ident: return "identifier";
  case Tok::String: return "string";
  case Tok::Number: return "number";
  case Tok::Input: return "'$input'";
  case Tok::LBrace: return "'{'";
  case Tok::RBrace: return "'}'";
  case Tok::LParen: return "'('";
  case Tok::RParen: return "')'";
  case Tok::Semi: return "';'";
  case Tok::Colon: return "':'";
  case Tok::Comma: return "','";
  case Tok::Arrow: return "'->'";
  case Tok::Assign: return "'='";
  case Tok::Plus: return "'+'";
  case Tok::EqEq: return "'=='";
  case Tok::NotEq: return "'!='";
  case Tok::End: return "end of input";
  }
  return "?";
}

namespace {

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

class Lexer {
public:
  Lexer(std::string_view src, const std::string& file, std::vector<ParseError>& errors)
      : src_(src), file_(file), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      if (at_end()) break;
      SourceSpan span = here();
      char c = peek();
      if (ident_start(c)) {
        std::string id;
        while (!at_end() && ident_char(peek())) id += advance();
        out.push_back({Tok::Ident, std::move(id), span});
      } else if (c >= '0' && c <= '9') {
        std::string digits;
        while (!at_end() && peek() >= '0' && peek() <= '9') digits += advance();
        out.push_back({Tok::Number, std::move(digits), span});
      } else if (c == '"') {
        if (auto tok = string_literal()) out.push_back(std::move(*tok));
      } else if (c == '$' && src_.substr(pos_, 6) == "$input" && !(pos_ + 6 < src_.size() && ident_char(src_[pos_ + 6]))) {
        for (int i = 0; i < 6; ++i) advance();
        out.push_back({Tok::Input, "$input", span});
      } else if (c == '-' && peek(1) == '>') {
        advance(), advance();
        out.push_back({Tok::Arrow, "->", span});
      } else if (c == '=' && peek(1) == '=') {
        advance(), advance();
        out.push_back({Tok::EqEq, "==", span});
      } else if (c == '!' && peek(1) == '=') {
        advance(), advance();
        out.push_back({Tok::NotEq, "!=", span});
      } else if (auto single = punct(c)) {
        advance();
        out.push_back({*single, std::string(1, c), span});
      } else {
        bad_character(span);
      }
    }
    out.push_back({Tok::End, "", end_span()});
    return out;
  }

private:
  std::string_view src_;
  const std::string& file_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }
  SourceSpan here() const { return {file_, line_, col_}; }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++col_; // count UTF-8 code points, not continuation bytes
    }
    return c;
  }

  // Position of the last character, so end-of-input errors stay inside the text.
  SourceSpan end_span() const {
    if (src_.empty()) return {file_, 1, 1};
    int line = 1, col = 1, last_line = 1, last_col = 1;
    for (char c : src_) {
      if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) last_line = line, last_col = col;
      if (c == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
        ++col;
      }
    }
    return {file_, last_line, last_col};
  }

  static std::optional<Tok> punct(char c) {
    switch (c) {
    case '{': return Tok::LBrace;
    case '}': return Tok::RBrace;
    case '(': return Tok::LParen;
    case ')': return Tok::RParen;
    case ';': return Tok::Semi;
    case ':': return Tok::Colon;
    case ',': return Tok::Comma;
    case '=': return Tok::Assign;
    case '+': return Tok::Plus;
    default: return std::nullopt;
    }
  }

  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  void bad_character(const SourceSpan& span) {
    unsigned char c = static_cast<unsigned char>(peek());
    std::string shown;
    advance();
    if (c >= 0x80) {
      shown = "non-ASCII byte";
      while (!at_end() && (static_cast<unsigned char>(peek()) & 0xC0) == 0x80) advance();
    } else {
      shown = std::string("'") + static_cast<char>(c) + "'";
    }
    errors_.push_back({ParseCode::Lex001, span, "unexpected character " + shown});
  }

  std::optional<Token> string_literal() {
    SourceSpan start = here();
    advance(); // opening quote
    std::string value;
    for (;;) {
      if (at_end() || peek() == '\n') {
        errors_.push_back({ParseCode::Lex002, start, "unterminated string literal"});
        return std::nullopt;
      }
      char c = peek();
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        SourceSpan esc = here();
        advance();
        char e = at_end() ? '\0' : peek();
        if (e == '"' || e == '\\') {
          value += advance();
        } else if (e == 'n') {
          advance();
          value += '\n';
        } else {
          std::string shown = (e == '\0' || e == '\n') ? std::string("end of line") : std::string(1, e);
          errors_.push_back({ParseCode::Lex003, esc, "invalid escape sequence '\\" + shown + "'"});
          if (e != '\0' && e != '\n') advance();
        }
        continue;
      }
      if (c == '$' && peek(1) == '{') {
        SourceSpan ph = here();
        std::string raw;
        raw += advance();
        raw += advance();
        while (!at_end() && ident_char(peek())) raw += advance();
        std::string name = raw.substr(2);
        if (peek() == '}' && is_identifier(name)) {
          raw += advance();
          value += raw;
        } else {
          errors_.push_back({ParseCode::Lex003, ph, "malformed placeholder '" + raw + "'; expected ${identifier}"});
          value += raw;
        }
        continue;
      }
      value += advance();
    }
    return Token{Tok::String, std::move(value), start};
  }
};

} // namespace

std::vector<Token> lex(std::string_view source, const std::string& file, std::vector<ParseError>& errors) {
  return Lexer(source, file, errors).run();
}

} // namespace pictoforge::detail
