#include "pictoforge/ddl.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "pictoforge/error.hpp"

namespace pictoforge::ddl {

const Column* Table::find(const std::string& column) const {
  auto it = std::find_if(columns.begin(), columns.end(), [&](const Column& c) { return c.name == column; });
  return it == columns.end() ? nullptr : &*it;
}

const Table* Script::find(const std::string& table) const {
  auto it = std::find_if(tables.begin(), tables.end(), [&](const Table& t) { return t.name == table; });
  return it == tables.end() ? nullptr : &*it;
}

namespace {

struct Tok {
  std::string text;
  bool word = false;
  int line = 1;
};

std::vector<Tok> tokenize(std::string_view s) {
  std::vector<Tok> out;
  int line = 1;
  for (std::size_t i = 0; i < s.size();) {
    char c = s[i];
    if (c == '\n') {
      ++line, ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({std::string(s.substr(i, j - i)), true, line});
      i = j;
    } else if (c == '(' || c == ')' || c == ',' || c == ';') {
      out.push_back({std::string(1, c), false, line});
      ++i;
    } else {
      throw Error("DDL_SYNTAX", "line " + std::to_string(line) + ": unexpected character '" + std::string(1, c) + "'");
    }
  }
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

const std::set<std::string> kReserved = {"CREATE", "TABLE", "PRIMARY", "KEY",   "FOREIGN", "REFERENCES",
                                         "NOT",    "NULL",  "INTEGER", "TEXT",  "BOOLEAN", "DATE"};

class DdlParser {
public:
  explicit DdlParser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  Script run() {
    Script script;
    while (pos_ < toks_.size()) script.tables.push_back(create());
    return script;
  }

private:
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) {
    std::string where = pos_ < toks_.size() ? "line " + std::to_string(toks_[pos_].line) + ": got '" +
                                                  toks_[pos_].text + "'"
                                            : "end of input";
    throw Error("DDL_SYNTAX", where + ": expected " + what);
  }

  bool at_kw(const char* kw) const { return pos_ < toks_.size() && toks_[pos_].word && upper(toks_[pos_].text) == kw; }
  bool at_punct(char p) const { return pos_ < toks_.size() && !toks_[pos_].word && toks_[pos_].text[0] == p; }

  void kw(const char* k) {
    if (!at_kw(k)) fail(k);
    ++pos_;
  }
  void punct(char p) {
    if (!at_punct(p)) fail(std::string("'") + p + "'");
    ++pos_;
  }
  std::string ident() {
    if (pos_ >= toks_.size() || !toks_[pos_].word || kReserved.count(upper(toks_[pos_].text))) fail("identifier");
    return toks_[pos_++].text;
  }
  std::vector<std::string> ident_list() {
    punct('(');
    std::vector<std::string> out{ident()};
    while (at_punct(',')) ++pos_, out.push_back(ident());
    punct(')');
    return out;
  }

  Table create() {
    kw("CREATE");
    kw("TABLE");
    Table t;
    t.name = ident();
    punct('(');
    if (!at_punct(')')) {
      element(t);
      while (at_punct(',')) ++pos_, element(t);
    }
    punct(')');
    punct(';');
    return t;
  }

  void element(Table& t) {
    if (at_kw("PRIMARY")) {
      ++pos_;
      kw("KEY");
      if (!t.primary_key.empty()) fail("at most one PRIMARY KEY");
      t.primary_key = ident_list();
      return;
    }
    if (at_kw("FOREIGN")) {
      ++pos_;
      kw("KEY");
      ForeignKey fk;
      fk.columns = ident_list();
      kw("REFERENCES");
      fk.table = ident();
      fk.ref_columns = ident_list();
      t.foreign_keys.push_back(std::move(fk));
      return;
    }
    Column c;
    c.name = ident();
    for (const char* ty : {"INTEGER", "TEXT", "BOOLEAN", "DATE"})
      if (at_kw(ty)) c.type = ty;
    if (c.type.empty()) fail("column type");
    ++pos_;
    if (at_kw("NOT")) {
      ++pos_;
      kw("NULL");
      c.not_null = true;
    }
    if (at_kw("REFERENCES")) {
      ++pos_;
      ForeignKey fk;
      fk.columns = {c.name};
      fk.table = ident();
      punct('(');
      fk.ref_columns = {ident()};
      punct(')');
      c.references = fk;
      t.foreign_keys.push_back(std::move(fk));
    }
    t.columns.push_back(std::move(c));
  }
};

void validate(const Script& s) {
  auto invalid = [](const std::string& msg) { throw Error("DDL_INVALID", msg); };
  std::set<std::string> tables;
  for (const auto& t : s.tables) {
    if (!tables.insert(t.name).second) invalid("duplicate table '" + t.name + "'");
    std::set<std::string> cols;
    for (const auto& c : t.columns)
      if (!cols.insert(c.name).second) invalid("duplicate column '" + t.name + "." + c.name + "'");
    std::set<std::string> pk;
    for (const auto& k : t.primary_key) {
      if (!t.find(k)) invalid("primary key column '" + t.name + "." + k + "' does not exist");
      if (!pk.insert(k).second) invalid("primary key lists '" + k + "' twice");
    }
  }
  for (const auto& t : s.tables) {
    for (const auto& fk : t.foreign_keys) {
      if (fk.columns.size() != fk.ref_columns.size()) invalid("foreign key arity mismatch in '" + t.name + "'");
      for (const auto& c : fk.columns)
        if (!t.find(c)) invalid("foreign key column '" + t.name + "." + c + "' does not exist");
      const Table* ref = s.find(fk.table);
      if (!ref) invalid("'" + t.name + "' references unknown table '" + fk.table + "'");
      for (std::size_t i = 0; i < fk.ref_columns.size(); ++i) {
        const Column* rc = ref->find(fk.ref_columns[i]);
        if (!rc) invalid("'" + t.name + "' references unknown column '" + fk.table + "." + fk.ref_columns[i] + "'");
        const Column* lc = t.find(fk.columns[i]);
        if (lc->type != rc->type)
          invalid("type mismatch: '" + t.name + "." + lc->name + "' vs '" + ref->name + "." + rc->name + "'");
      }
    }
  }
}

} // namespace

bool is_reserved(std::string_view word) { return kReserved.count(upper(std::string(word))) != 0; }

Script parse(std::string_view text) {
  Script s = DdlParser(tokenize(text)).run();
  validate(s);
  return s;
}

} // namespace pictoforge::ddl
