#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "pictoforge/checker.hpp"
#include "pictoforge/ddl.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/generators.hpp"

namespace pictoforge {

std::string sql_identifier(const std::string& name) {
  std::string out = name;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ddl::is_reserved(out)) out += '_';
  return out;
}

namespace {

const char* sql_type(AttrType t) {
  switch (t) {
  case AttrType::Int: return "INTEGER";
  case AttrType::String: return "TEXT";
  case AttrType::Bool: return "BOOLEAN";
  case AttrType::Date: return "DATE";
  }
  return "TEXT";
}

struct SqlColumn {
  std::string name;
  std::string type;
  bool not_null = false;
  std::string ref_table; // inline REFERENCES when set
  std::string ref_column;
};

struct SqlForeignKey {
  std::vector<std::string> columns;
  std::string table;
  std::vector<std::string> ref_columns;
};

struct SqlTable {
  std::string name;
  std::vector<SqlColumn> columns;
  std::vector<std::string> primary_key;
  std::vector<SqlForeignKey> foreign_keys;

  bool has(const std::string& col) const {
    return std::any_of(columns.begin(), columns.end(), [&](const SqlColumn& c) { return c.name == col; });
  }
  // Later duplicates get a numeric suffix: person_id, person_id_2, ...
  std::string fresh(const std::string& base) const {
    if (!has(base)) return base;
    for (int i = 2;; ++i)
      if (auto n = base + "_" + std::to_string(i); !has(n)) return n;
  }
};

struct KeyColumn {
  std::string name;
  std::string type;
};

std::vector<KeyColumn> key_columns(const SqlTable& t) {
  std::vector<KeyColumn> out;
  for (const auto& k : t.primary_key)
    for (const auto& c : t.columns)
      if (c.name == k) out.push_back({c.name, c.type});
  return out;
}

// Adds NOT NULL columns to `into` that reference the key of `referenced`.
void add_reference(SqlTable& into, const SqlTable& referenced) {
  auto keys = key_columns(referenced);
  SqlForeignKey fk{{}, referenced.name, {}};
  for (const auto& k : keys) {
    std::string col = into.fresh(referenced.name + "_" + k.name);
    SqlColumn c{col, k.type, true, {}, {}};
    if (keys.size() == 1) c.ref_table = referenced.name, c.ref_column = k.name;
    into.columns.push_back(c);
    fk.columns.push_back(col);
    fk.ref_columns.push_back(k.name);
  }
  if (keys.size() > 1) into.foreign_keys.push_back(std::move(fk));
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

std::string render(const SqlTable& t) {
  std::vector<std::string> parts;
  for (const auto& c : t.columns) {
    std::string p = c.name + " " + c.type;
    if (c.not_null) p += " NOT NULL";
    if (!c.ref_table.empty()) p += " REFERENCES " + c.ref_table + "(" + c.ref_column + ")";
    parts.push_back(std::move(p));
  }
  if (!t.primary_key.empty()) parts.push_back("PRIMARY KEY (" + join(t.primary_key) + ")");
  for (const auto& fk : t.foreign_keys)
    parts.push_back("FOREIGN KEY (" + join(fk.columns) + ") REFERENCES " + fk.table + "(" + join(fk.ref_columns) + ")");
  return "CREATE TABLE " + t.name + " (" + join(parts) + ");";
}

} // namespace

std::string gen_sql(const DesignModel& model, const std::string& schema_name) {
  const ErSchema* schema = model.find_schema(schema_name);
  if (!schema) throw Error("SCHEMA_NOT_FOUND", "no data schema named '" + schema_name + "'");
  for (const auto& f : check_er(model))
    if (f.severity == Severity::Error && f.scope == Subject{"schema", schema_name})
      throw Error("SCHEMA_HAS_ERRORS", "schema '" + schema_name + "' has errors: " + format_finding(f));

  std::vector<SqlTable> tables;
  std::map<std::string, std::size_t> by_entity;
  for (const auto& e : schema->entities) {
    SqlTable t;
    t.name = sql_identifier(e.name);
    for (const auto& a : e.attributes) {
      std::string col = t.fresh(sql_identifier(a.name));
      t.columns.push_back({col, sql_type(a.type), a.is_key, {}, {}});
      if (a.is_key) t.primary_key.push_back(col);
    }
    by_entity[e.name] = tables.size();
    tables.push_back(std::move(t));
  }

  auto require_key = [&](const std::string& entity, const Relation& r) -> const SqlTable& {
    const SqlTable& t = tables[by_entity.at(entity)];
    if (t.primary_key.empty())
      throw Error("NO_KEY", "entity '" + entity + "' in relation '" + r.name + "' has no key attribute");
    return t;
  };

  std::vector<SqlTable> junctions;
  std::set<std::string> table_names;
  for (const auto& t : tables) table_names.insert(t.name);

  for (const auto& r : schema->relations) {
    bool left_one = r.left.card == Cardinality::One;
    bool right_one = r.right.card == Cardinality::One;
    if (left_one || right_one) {
      // 1-N / N-1: key column on the N side. 1-1: on the right participant.
      const std::string& one = left_one ? r.left.entity : r.right.entity;
      const std::string& other = left_one ? r.right.entity : r.left.entity;
      SqlTable referenced = require_key(one, r);
      add_reference(tables[by_entity.at(other)], referenced);
      continue;
    }
    SqlTable left = require_key(r.left.entity, r);
    SqlTable right = require_key(r.right.entity, r);
    SqlTable j;
    j.name = sql_identifier(r.name);
    if (table_names.count(j.name))
      for (int i = 2;; ++i)
        if (auto n = j.name + "_" + std::to_string(i); !table_names.count(n)) {
          j.name = n;
          break;
        }
    table_names.insert(j.name);
    for (const SqlTable* side : {&left, &right}) {
      SqlForeignKey fk{{}, side->name, {}};
      for (const auto& k : key_columns(*side)) {
        std::string col = j.fresh(side->name + "_" + k.name);
        j.columns.push_back({col, k.type, true, {}, {}});
        j.primary_key.push_back(col);
        fk.columns.push_back(col);
        fk.ref_columns.push_back(k.name);
      }
      j.foreign_keys.push_back(std::move(fk));
    }
    junctions.push_back(std::move(j));
  }

  std::ostringstream os;
  os << "-- schema " << schema->name << "\n";
  for (const auto& t : tables) os << render(t) << "\n";
  for (const auto& t : junctions) os << render(t) << "\n";
  return os.str();
}

} // namespace pictoforge
