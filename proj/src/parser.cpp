#include <set>

#include "lexer.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

using detail::Tok;
using detail::Token;

const char* to_string(ParseCode code) {
  switch (code) {
  case ParseCode::Lex001: return "LEX001";
  case ParseCode::Lex002: return "LEX002";
  case ParseCode::Lex003: return "LEX003";
  case ParseCode::Syn001: return "SYN001";
  case ParseCode::Syn002: return "SYN002";
  case ParseCode::DupName: return "DUP_NAME";
  case ParseCode::DupEntry: return "DUP_ENTRY";
  case ParseCode::DupRoot: return "DUP_ROOT";
  }
  return "?";
}

std::string format_error(const ParseError& e) {
  return e.span.file + ":" + std::to_string(e.span.line) + ":" + std::to_string(e.span.col) + ": " +
         to_string(e.code) + " " + e.message;
}

namespace {

struct SyntaxFailure {};

bool is_item_keyword(const Token& t) {
  return t.kind == Tok::Ident && (t.text == "diagram" || t.text == "data" || t.text == "chart" || t.text == "action");
}

class Parser {
public:
  Parser(std::vector<Token> tokens, std::vector<ParseError>& errors, std::string source_name)
      : toks_(std::move(tokens)), errors_(errors) {
    model_.source_name = std::move(source_name);
  }

  DesignModel run() {
    while (!at(Tok::End)) {
      std::size_t start = pos_;
      try {
        item();
      } catch (const SyntaxFailure&) {
        resync(start);
      }
    }
    return std::move(model_);
  }

  std::vector<Term> expr_only() {
    auto e = expr();
    expect(Tok::End, "end of expression");
    return e;
  }

private:
  std::vector<Token> toks_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  DesignModel model_;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_word(const char* w) const { return at(Tok::Ident) && cur().text == w; }

  const Token& take() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const std::string& expected) {
    const Token& t = cur();
    if (t.kind == Tok::End) {
      errors_.push_back({ParseCode::Syn002, t.span, "unexpected end of input; expected " + expected});
    } else {
      std::string got = t.kind == Tok::Ident ? "'" + t.text + "'" : detail::describe(t.kind);
      errors_.push_back({ParseCode::Syn001, t.span, "unexpected " + got + "; expected " + expected});
    }
    throw SyntaxFailure{};
  }

  const Token& expect(Tok k, const std::string& what) {
    if (!at(k)) fail(what);
    return take();
  }

  std::string ident(const std::string& what) { return expect(Tok::Ident, what).text; }

  void word(const char* w) {
    if (!at_word(w)) fail(std::string("'") + w + "'");
    take();
  }

  // Skip to the next plausible item start: KEYWORD IDENT '{'.
  void resync(std::size_t start) {
    if (pos_ == start) take();
    while (!at(Tok::End)) {
      if (is_item_keyword(cur()) && pos_ + 2 < toks_.size() && toks_[pos_ + 1].kind == Tok::Ident &&
          toks_[pos_ + 2].kind == Tok::LBrace)
        return;
      take();
    }
  }

  void item() {
    if (at_word("diagram")) return diagram();
    if (at_word("data")) return schema();
    if (at_word("chart")) return chart();
    if (at_word("action")) return action();
    fail("'diagram', 'data', 'chart' or 'action'");
  }

  void diagram() {
    StdDiagram d;
    d.span = take().span;
    d.name = ident("diagram name");
    expect(Tok::LBrace, "'{'");
    SourceSpan entry_span;
    while (!at(Tok::RBrace)) {
      if (at_word("entry")) {
        SourceSpan s = take().span;
        std::string n = ident("entry node name");
        expect(Tok::Semi, "';'");
        if (!d.entry.empty()) {
          errors_.push_back({ParseCode::DupEntry, s,
                             "diagram '" + d.name + "' already has entry '" + d.entry + "' (declared at line " +
                                 std::to_string(entry_span.line) + ")"});
        } else {
          d.entry = n;
          entry_span = s;
        }
      } else if (at_word("exit")) {
        take();
        std::string n = ident("exit node name");
        expect(Tok::Semi, "';'");
        if (!d.is_exit(n)) d.exits.push_back(n);
      } else if (at_word("node")) {
        StdNode n;
        n.span = take().span;
        n.name = ident("node name");
        word("output");
        n.output = expect(Tok::String, "output string").text;
        expect(Tok::Semi, "';'");
        d.nodes.push_back(std::move(n));
      } else if (at_word("arc")) {
        d.arcs.push_back(arc(static_cast<int>(d.arcs.size())));
      } else {
        fail("'entry', 'exit', 'node', 'arc' or '}'");
      }
    }
    take();
    model_.diagrams.push_back(std::move(d));
  }

  StdArc arc(int index) {
    StdArc a;
    a.span = take().span;
    a.decl_index = index;
    a.from = ident("source node name");
    expect(Tok::Arrow, "'->'");
    // `call` is a contextual keyword: a node may itself be named "call".
    if (at_word("call") && pos_ + 2 < toks_.size() && toks_[pos_ + 1].kind == Tok::Ident &&
        toks_[pos_ + 2].kind == Tok::Ident && toks_[pos_ + 2].text == "return") {
      take();
      CallTarget c;
      c.diagram = ident("called diagram name");
      word("return");
      c.return_to = ident("return node name");
      a.target = std::move(c);
    } else {
      a.target = NodeTarget{ident("target node name")};
    }
    word("on");
    if (at(Tok::String)) {
      a.pattern = ArcPattern::text(take().text);
    } else if (at_word("otherwise")) {
      take();
      a.pattern = ArcPattern::otherwise();
    } else {
      fail("pattern string or 'otherwise'");
    }
    if (at_word("when")) {
      take();
      Guard g;
      g.var = ident("guard variable");
      if (at(Tok::EqEq)) {
        g.op = GuardOp::Eq;
      } else if (at(Tok::NotEq)) {
        g.op = GuardOp::Neq;
      } else {
        fail("'==' or '!='");
      }
      take();
      g.value = expect(Tok::String, "guard value string").text;
      a.guard = std::move(g);
    }
    if (at_word("do")) {
      take();
      a.action = ident("action name");
    }
    expect(Tok::Semi, "';'");
    return a;
  }

  void schema() {
    ErSchema s;
    s.span = take().span;
    s.name = ident("schema name");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (at_word("entity")) {
        Entity e;
        e.span = take().span;
        e.name = ident("entity name");
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace)) {
          Attribute attr;
          attr.span = cur().span;
          attr.name = ident("attribute name or '}'");
          expect(Tok::Colon, "':'");
          attr.type = attr_type();
          if (at_word("key")) {
            take();
            attr.is_key = true;
          }
          expect(Tok::Semi, "';'");
          e.attributes.push_back(std::move(attr));
        }
        take();
        s.entities.push_back(std::move(e));
      } else if (at_word("relation")) {
        Relation r;
        r.span = take().span;
        r.name = ident("relation name");
        expect(Tok::LParen, "'('");
        r.left = relation_end();
        expect(Tok::Comma, "','");
        r.right = relation_end();
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        s.relations.push_back(std::move(r));
      } else {
        fail("'entity', 'relation' or '}'");
      }
    }
    take();
    model_.schemas.push_back(std::move(s));
  }

  AttrType attr_type() {
    if (at_word("int")) return take(), AttrType::Int;
    if (at_word("string")) return take(), AttrType::String;
    if (at_word("bool")) return take(), AttrType::Bool;
    if (at_word("date")) return take(), AttrType::Date;
    fail("'int', 'string', 'bool' or 'date'");
  }

  RelationEnd relation_end() {
    RelationEnd end;
    end.entity = ident("entity name");
    if (at(Tok::Number) && cur().text == "1") {
      end.card = Cardinality::One;
    } else if (at_word("N")) {
      end.card = Cardinality::Many;
    } else {
      fail("cardinality '1' or 'N'");
    }
    take();
    return end;
  }

  void chart() {
    ScChart c;
    c.span = take().span;
    c.name = ident("chart name");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      if (!at_word("module")) fail("'module' or '}'");
      ScModule m;
      m.span = take().span;
      m.name = ident("module name");
      if (at_word("root")) {
        take();
        m.is_root = true;
      }
      expect(Tok::LBrace, "'{'");
      while (!at(Tok::RBrace)) {
        if (!at_word("invokes")) fail("'invokes' or '}'");
        Invocation inv;
        inv.span = take().span;
        inv.callee = ident("invoked module name");
        if (at_word("with")) {
          take();
          inv.couples.push_back(ident("couple name"));
          while (at(Tok::Comma)) {
            take();
            inv.couples.push_back(ident("couple name"));
          }
        }
        expect(Tok::Semi, "';'");
        m.invocations.push_back(std::move(inv));
      }
      take();
      c.modules.push_back(std::move(m));
    }
    take();
    model_.charts.push_back(std::move(c));
  }

  void action() {
    ActionDef a;
    a.span = take().span;
    a.name = ident("action name");
    expect(Tok::LBrace, "'{'");
    while (!at(Tok::RBrace)) {
      Assignment asg;
      asg.span = cur().span;
      asg.var = ident("assigned variable or '}'");
      expect(Tok::Assign, "'='");
      asg.expr = expr();
      expect(Tok::Semi, "';'");
      a.assignments.push_back(std::move(asg));
    }
    take();
    model_.actions.push_back(std::move(a));
  }

  std::vector<Term> expr() {
    std::vector<Term> terms;
    terms.push_back(term());
    while (at(Tok::Plus)) {
      take();
      terms.push_back(term());
    }
    return terms;
  }

  Term term() {
    if (at(Tok::String)) return TermLiteral{take().text};
    if (at(Tok::Input)) return take(), TermInput{};
    if (at(Tok::Ident)) return TermVar{take().text};
    fail("string, variable or '$input'");
  }
};

ParseCode code_for(const std::string& issue) {
  if (issue == "DUP_ROOT") return ParseCode::DupRoot;
  return ParseCode::DupName;
}

} // namespace

ParseResult parse(std::string_view source, const std::string& source_name) {
  ParseResult result;
  auto tokens = detail::lex(source, source_name, result.errors);
  Parser p(std::move(tokens), result.errors, source_name);
  DesignModel model = p.run();

  // The lexer already reports malformed placeholders, at the exact column.
  for (const auto& issue : validate_structure(model))
    if (issue.code != "BAD_PLACEHOLDER") result.errors.push_back({code_for(issue.code), issue.span, issue.message});

  std::stable_sort(result.errors.begin(), result.errors.end(), [](const ParseError& a, const ParseError& b) {
    return std::pair(a.span.line, a.span.col) < std::pair(b.span.line, b.span.col);
  });
  if (result.errors.empty()) result.model = std::move(model);
  return result;
}

DesignModel parse_or_throw(std::string_view source, const std::string& source_name) {
  auto r = parse(source, source_name);
  if (r.ok()) return std::move(*r.model);
  std::string msg;
  for (const auto& e : r.errors) msg += format_error(e) + "\n";
  if (!msg.empty()) msg.pop_back();
  throw Error("PARSE_ERROR", msg);
}

std::optional<std::vector<Term>> parse_expr(std::string_view text) {
  std::vector<ParseError> errors;
  auto tokens = detail::lex(text, "<expr>", errors);
  if (!errors.empty()) return std::nullopt;
  Parser p(std::move(tokens), errors, "<expr>");
  try {
    return p.expr_only();
  } catch (const SyntaxFailure&) {
    return std::nullopt;
  }
}

} // namespace pictoforge
