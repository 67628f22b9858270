#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pictoforge::ddl {

// The DDL subset emitted by gen_sql:
//
//   script  := (comment | create)*            comment := "--" to end of line
//   create  := CREATE TABLE ident "(" [element ("," element)*] ")" ";"
//   element := ident type [NOT NULL] [REFERENCES ident "(" ident ")"]
//            | PRIMARY KEY "(" ident ("," ident)* ")"
//            | FOREIGN KEY "(" ident ("," ident)* ")" REFERENCES ident "(" ident ("," ident)* ")"
//   type    := INTEGER | TEXT | BOOLEAN | DATE
//
// Parsing also validates the script: no duplicate tables or columns, key and
// foreign-key columns exist, referenced tables and columns exist (in any table
// of the script, declared earlier or later), foreign-key arity matches.

struct ForeignKey {
  std::vector<std::string> columns;
  std::string table;
  std::vector<std::string> ref_columns;
};

struct Column {
  std::string name;
  std::string type;
  bool not_null = false;
  std::optional<ForeignKey> references; // inline REFERENCES, single column
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys; // table-level and inline, in order

  const Column* find(const std::string& column) const;
};

struct Script {
  std::vector<Table> tables;
  const Table* find(const std::string& table) const;
};

/// True for the keywords of the subset (case-insensitive); these cannot be identifiers.
bool is_reserved(std::string_view word);

/// Throws Error("DDL_SYNTAX") or Error("DDL_INVALID") with a message.
Script parse(std::string_view text);

} // namespace pictoforge::ddl
