// Model <-> flat record decomposition for the repository tables.

#include <openssl/evp.h>

#include <algorithm>
#include <map>
#include <set>

#include "pictoforge/error.hpp"
#include "pictoforge/repository.hpp"
#include "pictoforge/stdl.hpp"
#include "record_text.hpp"

namespace pictoforge {

namespace {

enum Table : std::size_t { kDiagram, kNode, kArc, kEntity, kRelation, kModule, kAction, kSymbol, kTableCount };

std::vector<FieldDef> fields(std::initializer_list<FieldDef> rest) {
  std::vector<FieldDef> out{{"revision_added", FieldType::Int}};
  out.insert(out.end(), rest);
  return out;
}

constexpr auto I = FieldType::Int;
constexpr auto T = FieldType::Text;
constexpr auto B = FieldType::Bool;

[[noreturn]] void corrupt(const std::string& msg) { throw Error("STORE_CORRUPT", msg); }

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

const std::string& text(const Record& r, std::size_t i) {
  if (i >= r.size() || !std::holds_alternative<std::string>(r[i])) corrupt("expected text field");
  return std::get<std::string>(r[i]);
}
std::int64_t integer(const Record& r, std::size_t i) {
  if (i >= r.size() || !std::holds_alternative<std::int64_t>(r[i])) corrupt("expected int field");
  return std::get<std::int64_t>(r[i]);
}
bool boolean(const Record& r, std::size_t i) {
  if (i >= r.size() || !std::holds_alternative<bool>(r[i])) corrupt("expected bool field");
  return std::get<bool>(r[i]);
}

AttrType parse_type(const std::string& s) {
  for (auto t : {AttrType::Int, AttrType::String, AttrType::Bool, AttrType::Date})
    if (s == to_string(t)) return t;
  corrupt("unknown attribute type '" + s + "'");
}

Cardinality parse_card(const std::string& s) {
  if (s == "1") return Cardinality::One;
  if (s == "N") return Cardinality::Many;
  corrupt("unknown cardinality '" + s + "'");
}

// Groups records of a child table by owner name, ordered by their ord field.
std::map<std::string, std::vector<const Record*>> group_by_owner(const std::vector<Record>& rows, std::size_t owner,
                                                                 std::size_t ord) {
  std::map<std::string, std::vector<const Record*>> out;
  for (const auto& r : rows) out[text(r, owner)].push_back(&r);
  for (auto& [_, v] : out) {
    std::stable_sort(v.begin(), v.end(), [&](const Record* a, const Record* b) { return integer(*a, ord) < integer(*b, ord); });
    for (std::size_t i = 0; i < v.size(); ++i)
      if (integer(*v[i], ord) != static_cast<std::int64_t>(i)) corrupt("non-dense ordinal in child records");
  }
  return out;
}

} // namespace

const std::vector<TableDef>& table_schema() {
  static const std::vector<TableDef> schema = {
      {"DIAGRAM", fields({{"name", T}, {"entry", T}, {"exits", T}})},
      {"NODE", fields({{"diagram", T}, {"ord", I}, {"name", T}, {"output", T}})},
      {"ARC", fields({{"diagram", T},
                      {"decl_index", I},
                      {"from_node", T},
                      {"target_kind", T},
                      {"target", T},
                      {"return_to", T},
                      {"pattern_kind", T},
                      {"pattern", T},
                      {"guard_var", T},
                      {"guard_op", T},
                      {"guard_value", T},
                      {"action", T}})},
      {"ENTITY", fields({{"schema", T}, {"ord", I}, {"name", T}, {"attributes", T}})},
      {"RELATION", fields({{"schema", T},
                           {"ord", I},
                           {"name", T},
                           {"left_entity", T},
                           {"left_card", T},
                           {"right_entity", T},
                           {"right_card", T}})},
      {"MODULE", fields({{"chart", T}, {"ord", I}, {"name", T}, {"is_root", B}, {"invocations", T}})},
      {"ACTION", fields({{"action", T}, {"ord", I}, {"var", T}, {"expr", T}})},
      {"SYMBOL", fields({{"kind", T}, {"ord", I}, {"name", T}})},
  };
  return schema;
}

std::string schema_description() {
  auto type_name = [](FieldType t) { return t == FieldType::Int ? "int" : t == FieldType::Bool ? "bool" : "text"; };
  std::string out =
      "# Repository record schema.\n"
      "# One file per table under tables/<TABLE>.recs: a header line of field names,\n"
      "# then one record per line, fields separated by TAB. Text escapes: \\\\ \\t \\n \\r.\n"
      "# Bools are 'true'/'false'. Every record carries revision_added; a revision's\n"
      "# records are exactly those whose revision_added equals its number.\n"
      "#\n"
      "# DIAGRAM.exits      comma-separated node names\n"
      "# ARC.target_kind    node | call      ARC.pattern_kind  literal | otherwise\n"
      "# ARC.guard_op       == | != | empty (no guard)          ARC.action  empty = none\n"
      "# ENTITY.attributes  comma-separated name:type[:key], type in int|string|bool|date\n"
      "# RELATION.*_card    1 | N\n"
      "# MODULE.invocations semicolon-separated callee:couple,couple\n"
      "# ACTION.expr        assignment expression in source syntax\n"
      "# SYMBOL             catalogue of top-level elements: kind in diagram|schema|chart|action\n"
      "\n";
  for (const auto& t : table_schema()) {
    out += "table " + t.name + "\n";
    for (const auto& f : t.fields) out += "  " + f.name + " " + type_name(f.type) + "\n";
  }
  return out;
}

RecordSet decompose(const DesignModel& model) {
  RecordSet rs;
  rs.tables.resize(kTableCount);
  auto& sym = rs.tables[kSymbol];
  auto ord = [](std::size_t i) { return static_cast<std::int64_t>(i); };

  for (std::size_t di = 0; di < model.diagrams.size(); ++di) {
    const auto& d = model.diagrams[di];
    sym.push_back({std::string("diagram"), ord(di), d.name});
    rs.tables[kDiagram].push_back({d.name, d.entry, join(d.exits, ',')});
    for (std::size_t ni = 0; ni < d.nodes.size(); ++ni)
      rs.tables[kNode].push_back({d.name, ord(ni), d.nodes[ni].name, d.nodes[ni].output});
    for (const auto& a : d.arcs) {
      bool call = a.is_call();
      std::string target = call ? std::get<CallTarget>(a.target).diagram : std::get<NodeTarget>(a.target).node;
      std::string ret = call ? std::get<CallTarget>(a.target).return_to : "";
      rs.tables[kArc].push_back({d.name, static_cast<std::int64_t>(a.decl_index), a.from,
                                 std::string(call ? "call" : "node"), target, ret,
                                 std::string(a.pattern.is_otherwise() ? "otherwise" : "literal"),
                                 a.pattern.literal.value_or(""), a.guard ? a.guard->var : "",
                                 std::string(a.guard ? to_string(a.guard->op) : ""), a.guard ? a.guard->value : "",
                                 a.action.value_or("")});
    }
  }
  for (std::size_t si = 0; si < model.schemas.size(); ++si) {
    const auto& s = model.schemas[si];
    sym.push_back({std::string("schema"), ord(si), s.name});
    for (std::size_t ei = 0; ei < s.entities.size(); ++ei) {
      std::vector<std::string> attrs;
      for (const auto& a : s.entities[ei].attributes)
        attrs.push_back(a.name + ":" + to_string(a.type) + (a.is_key ? ":key" : ""));
      rs.tables[kEntity].push_back({s.name, ord(ei), s.entities[ei].name, join(attrs, ',')});
    }
    for (std::size_t ri = 0; ri < s.relations.size(); ++ri) {
      const auto& r = s.relations[ri];
      auto card = [](Cardinality c) { return std::string(c == Cardinality::One ? "1" : "N"); };
      rs.tables[kRelation].push_back(
          {s.name, ord(ri), r.name, r.left.entity, card(r.left.card), r.right.entity, card(r.right.card)});
    }
  }
  for (std::size_t ci = 0; ci < model.charts.size(); ++ci) {
    const auto& c = model.charts[ci];
    sym.push_back({std::string("chart"), ord(ci), c.name});
    for (std::size_t mi = 0; mi < c.modules.size(); ++mi) {
      const auto& m = c.modules[mi];
      std::vector<std::string> invs;
      for (const auto& inv : m.invocations) invs.push_back(inv.callee + ":" + join(inv.couples, ','));
      rs.tables[kModule].push_back({c.name, ord(mi), m.name, m.is_root, join(invs, ';')});
    }
  }
  for (std::size_t ai = 0; ai < model.actions.size(); ++ai) {
    const auto& a = model.actions[ai];
    sym.push_back({std::string("action"), ord(ai), a.name});
    for (std::size_t i = 0; i < a.assignments.size(); ++i)
      rs.tables[kAction].push_back({a.name, ord(i), a.assignments[i].var, print_expr(a.assignments[i].expr)});
  }
  return rs;
}

DesignModel reconstruct(const RecordSet& rs, const std::string& source_name) {
  if (rs.tables.size() != kTableCount) corrupt("record set has wrong table count");
  const auto& schema = table_schema();
  for (std::size_t t = 0; t < kTableCount; ++t)
    for (const auto& r : rs.tables[t])
      if (r.size() + 1 != schema[t].fields.size()) corrupt("record of " + schema[t].name + " has wrong arity");

  DesignModel m;
  m.source_name = source_name;

  std::map<std::string, std::vector<std::pair<std::int64_t, std::string>>> symbols;
  for (const auto& r : rs.tables[kSymbol]) symbols[text(r, 0)].push_back({integer(r, 1), text(r, 2)});
  for (auto& [kind, v] : symbols) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i].first != static_cast<std::int64_t>(i)) corrupt("non-dense SYMBOL ordinals for " + kind);
    if (kind != "diagram" && kind != "schema" && kind != "chart" && kind != "action")
      corrupt("unknown SYMBOL kind '" + kind + "'");
  }

  std::map<std::string, const Record*> diagram_rows;
  for (const auto& r : rs.tables[kDiagram]) diagram_rows[text(r, 0)] = &r;
  auto nodes = group_by_owner(rs.tables[kNode], 0, 1);
  auto arcs = group_by_owner(rs.tables[kArc], 0, 1);
  for (const auto& [_, name] : symbols["diagram"]) {
    auto it = diagram_rows.find(name);
    if (it == diagram_rows.end()) corrupt("DIAGRAM record missing for '" + name + "'");
    StdDiagram d;
    d.name = name;
    d.entry = text(*it->second, 1);
    d.exits = split(text(*it->second, 2), ',');
    for (const Record* r : nodes[name]) d.nodes.push_back({text(*r, 2), text(*r, 3), {}});
    for (const Record* r : arcs[name]) {
      StdArc a;
      a.decl_index = static_cast<int>(integer(*r, 1));
      a.from = text(*r, 2);
      if (text(*r, 3) == "call")
        a.target = CallTarget{text(*r, 4), text(*r, 5)};
      else if (text(*r, 3) == "node")
        a.target = NodeTarget{text(*r, 4)};
      else
        corrupt("bad ARC.target_kind");
      if (text(*r, 6) == "literal")
        a.pattern = ArcPattern::text(text(*r, 7));
      else if (text(*r, 6) != "otherwise")
        corrupt("bad ARC.pattern_kind");
      const std::string& op = text(*r, 9);
      if (op == "==" || op == "!=")
        a.guard = Guard{text(*r, 8), op == "==" ? GuardOp::Eq : GuardOp::Neq, text(*r, 10)};
      else if (!op.empty())
        corrupt("bad ARC.guard_op");
      if (!text(*r, 11).empty()) a.action = text(*r, 11);
      d.arcs.push_back(std::move(a));
    }
    m.diagrams.push_back(std::move(d));
  }

  auto entities = group_by_owner(rs.tables[kEntity], 0, 1);
  auto relations = group_by_owner(rs.tables[kRelation], 0, 1);
  for (const auto& [_, name] : symbols["schema"]) {
    ErSchema s;
    s.name = name;
    for (const Record* r : entities[name]) {
      Entity e;
      e.name = text(*r, 2);
      for (const auto& spec : split(text(*r, 3), ',')) {
        auto parts = split(spec, ':');
        if (parts.size() < 2 || parts.size() > 3 || (parts.size() == 3 && parts[2] != "key"))
          corrupt("bad ENTITY.attributes '" + spec + "'");
        e.attributes.push_back({parts[0], parse_type(parts[1]), parts.size() == 3, {}});
      }
      s.entities.push_back(std::move(e));
    }
    for (const Record* r : relations[name])
      s.relations.push_back(
          {text(*r, 2), {text(*r, 3), parse_card(text(*r, 4))}, {text(*r, 5), parse_card(text(*r, 6))}, {}});
    m.schemas.push_back(std::move(s));
  }

  auto modules = group_by_owner(rs.tables[kModule], 0, 1);
  for (const auto& [_, name] : symbols["chart"]) {
    ScChart c;
    c.name = name;
    for (const Record* r : modules[name]) {
      ScModule mod;
      mod.name = text(*r, 2);
      mod.is_root = boolean(*r, 3);
      for (const auto& inv : split(text(*r, 4), ';')) {
        auto colon = inv.find(':');
        if (colon == std::string::npos) corrupt("bad MODULE.invocations '" + inv + "'");
        mod.invocations.push_back({inv.substr(0, colon), split(inv.substr(colon + 1), ','), {}});
      }
      c.modules.push_back(std::move(mod));
    }
    m.charts.push_back(std::move(c));
  }

  auto assigns = group_by_owner(rs.tables[kAction], 0, 1);
  for (const auto& [_, name] : symbols["action"]) {
    ActionDef a;
    a.name = name;
    for (const Record* r : assigns[name]) {
      auto expr = parse_expr(text(*r, 3));
      if (!expr) corrupt("bad ACTION.expr '" + text(*r, 3) + "'");
      a.assignments.push_back({text(*r, 2), std::move(*expr), {}});
    }
    m.actions.push_back(std::move(a));
  }

  // Every child record must belong to a catalogued parent.
  auto owned = [&](const auto& groups, const char* kind, const char* table) {
    std::set<std::string> names;
    for (const auto& [_, n] : symbols[kind]) names.insert(n);
    for (const auto& [owner, _] : groups)
      if (!names.count(owner)) corrupt(std::string(table) + " records reference unknown " + kind + " '" + owner + "'");
  };
  owned(nodes, "diagram", "NODE");
  owned(arcs, "diagram", "ARC");
  owned(entities, "schema", "ENTITY");
  owned(relations, "schema", "RELATION");
  owned(modules, "chart", "MODULE");
  owned(assigns, "action", "ACTION");
  if (diagram_rows.size() != symbols["diagram"].size()) corrupt("DIAGRAM records do not match SYMBOL catalogue");

  if (auto issues = validate_structure(m); !issues.empty()) corrupt("reconstructed model invalid: " + issues[0].message);
  return m;
}

namespace detail {

std::string encode_field(const FieldValue& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  std::string out;
  for (char c : std::get<std::string>(v)) {
    switch (c) {
    case '\\': out += "\\\\"; break;
    case '\t': out += "\\t"; break;
    case '\n': out += "\\n"; break;
    case '\r': out += "\\r"; break;
    default: out += c;
    }
  }
  return out;
}

std::optional<FieldValue> decode_field(const std::string& s, FieldType type) {
  switch (type) {
  case FieldType::Int: {
    if (s.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
      long long v = std::stoll(s, &used);
      if (used != s.size()) return std::nullopt;
      return FieldValue(static_cast<std::int64_t>(v));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  case FieldType::Bool:
    if (s == "true") return FieldValue(true);
    if (s == "false") return FieldValue(false);
    return std::nullopt;
  case FieldType::Text: {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '\\') {
        out += s[i];
        continue;
      }
      if (++i >= s.size()) return std::nullopt;
      switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: return std::nullopt;
      }
    }
    return FieldValue(std::move(out));
  }
  }
  return std::nullopt;
}

} // namespace detail

std::string records_digest(const RecordSet& rs) {
  std::string canon;
  const auto& schema = table_schema();
  for (std::size_t t = 0; t < rs.tables.size() && t < schema.size(); ++t) {
    canon += schema[t].name + "\n";
    for (const auto& r : rs.tables[t]) {
      for (std::size_t i = 0; i < r.size(); ++i) canon += (i ? "\t" : "") + detail::encode_field(r[i]);
      canon += "\n";
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(canon.data(), canon.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

} // namespace pictoforge
