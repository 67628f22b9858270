#include "pictoforge/model.hpp"

#include <algorithm>
#include <set>

#include "pictoforge/error.hpp"

namespace pictoforge {

namespace {

template <typename T>
const T* find_named(const std::vector<T>& items, const std::string& name) {
  auto it = std::find_if(items.begin(), items.end(), [&](const T& t) { return t.name == name; });
  return it == items.end() ? nullptr : &*it;
}

std::string where(const SourceSpan& s) {
  return s.file + ":" + std::to_string(s.line) + ":" + std::to_string(s.col);
}

// Returns nullopt when a "${" is not followed by IDENT "}".
std::optional<std::vector<std::string>> scan_placeholders(const std::string& text) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != '$' || text[i + 1] != '{') continue;
    std::size_t close = text.find('}', i + 2);
    if (close == std::string::npos) return std::nullopt;
    std::string name = text.substr(i + 2, close - i - 2);
    if (!is_identifier(name)) return std::nullopt;
    names.push_back(std::move(name));
    i = close;
  }
  // A trailing lone '$' is literal.
  return names;
}

class StructureValidator {
public:
  std::vector<StructuralIssue> issues;

  void run(const DesignModel& m) {
    unique_names(m.diagrams, "diagram", "");
    unique_names(m.schemas, "data", "");
    unique_names(m.charts, "chart", "");
    unique_names(m.actions, "action", "");

    for (const auto& d : m.diagrams) {
      unique_names(d.nodes, "node", d.name + ".");
      for (const auto& n : d.nodes) text(n.output, n.span);
      for (std::size_t i = 0; i < d.arcs.size(); ++i) {
        const auto& a = d.arcs[i];
        if (a.decl_index != static_cast<int>(i))
          issues.push_back({"BAD_DECL_INDEX",
                            "arc " + std::to_string(i) + " of diagram '" + d.name +
                                "' has decl_index " + std::to_string(a.decl_index),
                            a.span, std::nullopt});
        if (a.pattern.literal) text(*a.pattern.literal, a.span);
        if (a.guard) text(a.guard->value, a.span);
      }
    }
    for (const auto& s : m.schemas) {
      unique_names(s.entities, "entity", s.name + ".");
      for (const auto& e : s.entities) unique_names(e.attributes, "attribute", s.name + "." + e.name + ".");
      unique_names(s.relations, "relation", s.name + ".");
    }
    for (const auto& c : m.charts) {
      unique_names(c.modules, "module", c.name + ".");
      const ScModule* first_root = nullptr;
      for (const auto& mod : c.modules) {
        if (!mod.is_root) continue;
        if (first_root)
          issues.push_back({"DUP_ROOT",
                            "chart '" + c.name + "' has a second root module '" + mod.name +
                                "' (first: '" + first_root->name + "' at " + where(first_root->span) + ")",
                            mod.span, first_root->span});
        else
          first_root = &mod;
      }
    }
    for (const auto& a : m.actions) {
      for (const auto& asg : a.assignments) {
        if (asg.expr.empty())
          issues.push_back({"EMPTY_EXPR", "assignment to '" + asg.var + "' has no terms", asg.span, std::nullopt});
        for (const auto& t : asg.expr)
          if (auto lit = std::get_if<TermLiteral>(&t)) text(lit->text, asg.span);
      }
    }
  }

private:
  template <typename T>
  void unique_names(const std::vector<T>& items, const char* what, const std::string& prefix) {
    std::map<std::string, const T*> seen;
    for (const auto& item : items) {
      auto [it, inserted] = seen.emplace(item.name, &item);
      if (inserted) continue;
      issues.push_back({"DUP_NAME",
                        std::string("duplicate ") + what + " '" + prefix + item.name + "' at " +
                            where(item.span) + " (first declared at " + where(it->second->span) + ")",
                        item.span, it->second->span});
    }
  }

  void text(const std::string& s, const SourceSpan& span) {
    if (!scan_placeholders(s))
      issues.push_back({"BAD_PLACEHOLDER", "malformed ${...} placeholder in \"" + s + "\"", span, std::nullopt});
  }
};

} // namespace

const StdNode* StdDiagram::find_node(const std::string& node_name) const { return find_named(nodes, node_name); }

bool StdDiagram::is_exit(const std::string& node_name) const {
  return std::find(exits.begin(), exits.end(), node_name) != exits.end();
}

std::vector<const Attribute*> Entity::keys() const {
  std::vector<const Attribute*> out;
  for (const auto& a : attributes)
    if (a.is_key) out.push_back(&a);
  return out;
}

const Entity* ErSchema::find_entity(const std::string& entity_name) const { return find_named(entities, entity_name); }

const ScModule* ScChart::find_module(const std::string& module_name) const { return find_named(modules, module_name); }

const ScModule* ScChart::root() const {
  auto it = std::find_if(modules.begin(), modules.end(), [](const ScModule& m) { return m.is_root; });
  return it == modules.end() ? nullptr : &*it;
}

const StdDiagram* DesignModel::find_diagram(const std::string& name) const { return find_named(diagrams, name); }
const ErSchema* DesignModel::find_schema(const std::string& name) const { return find_named(schemas, name); }
const ScChart* DesignModel::find_chart(const std::string& name) const { return find_named(charts, name); }
const ActionDef* DesignModel::find_action(const std::string& name) const { return find_named(actions, name); }

bool DesignModel::empty() const {
  return diagrams.empty() && schemas.empty() && charts.empty() && actions.empty();
}

const char* to_string(ElementKind kind) {
  switch (kind) {
  case ElementKind::Diagram: return "diagram";
  case ElementKind::Node: return "node";
  case ElementKind::Schema: return "schema";
  case ElementKind::Entity: return "entity";
  case ElementKind::Relation: return "relation";
  case ElementKind::Chart: return "chart";
  case ElementKind::Module: return "module";
  case ElementKind::Action: return "action";
  }
  return "?";
}

const char* to_string(AttrType type) {
  switch (type) {
  case AttrType::Int: return "int";
  case AttrType::String: return "string";
  case AttrType::Bool: return "bool";
  case AttrType::Date: return "date";
  }
  return "?";
}

const char* to_string(GuardOp op) { return op == GuardOp::Eq ? "==" : "!="; }

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || digit(c); });
}

std::vector<std::string> placeholders(const std::string& text) {
  return scan_placeholders(text).value_or(std::vector<std::string>{});
}

std::vector<StructuralIssue> validate_structure(const DesignModel& model) {
  StructureValidator v;
  v.run(model);
  return std::move(v.issues);
}

NameIndex build_index(const DesignModel& model) {
  auto issues = validate_structure(model);
  if (!issues.empty()) throw Error(issues.front().code, issues.front().message);

  NameIndex idx;
  auto dangling = [&](ElementKind kind, const std::string& name, const std::string& scope, const SourceSpan& span) {
    idx.unresolved.push_back({kind, name, scope, span});
  };

  for (std::size_t i = 0; i < model.actions.size(); ++i)
    idx.entries[{ElementKind::Action, model.actions[i].name}] = {i, std::nullopt};

  for (std::size_t di = 0; di < model.diagrams.size(); ++di) {
    const auto& d = model.diagrams[di];
    idx.entries[{ElementKind::Diagram, d.name}] = {di, std::nullopt};
    for (std::size_t ni = 0; ni < d.nodes.size(); ++ni)
      idx.entries[{ElementKind::Node, d.name + "." + d.nodes[ni].name}] = {ni, di};
  }
  for (std::size_t si = 0; si < model.schemas.size(); ++si) {
    const auto& s = model.schemas[si];
    idx.entries[{ElementKind::Schema, s.name}] = {si, std::nullopt};
    for (std::size_t ei = 0; ei < s.entities.size(); ++ei)
      idx.entries[{ElementKind::Entity, s.name + "." + s.entities[ei].name}] = {ei, si};
    for (std::size_t ri = 0; ri < s.relations.size(); ++ri)
      idx.entries[{ElementKind::Relation, s.name + "." + s.relations[ri].name}] = {ri, si};
  }
  for (std::size_t ci = 0; ci < model.charts.size(); ++ci) {
    const auto& c = model.charts[ci];
    idx.entries[{ElementKind::Chart, c.name}] = {ci, std::nullopt};
    for (std::size_t mi = 0; mi < c.modules.size(); ++mi)
      idx.entries[{ElementKind::Module, c.name + "." + c.modules[mi].name}] = {mi, ci};
  }

  // Second pass: references.
  for (const auto& d : model.diagrams) {
    auto node = [&](const std::string& n, const SourceSpan& span) {
      if (!idx.contains(ElementKind::Node, d.name + "." + n)) dangling(ElementKind::Node, n, d.name, span);
    };
    if (!d.entry.empty()) node(d.entry, d.span);
    for (const auto& e : d.exits) node(e, d.span);
    for (const auto& a : d.arcs) {
      node(a.from, a.span);
      if (auto t = std::get_if<NodeTarget>(&a.target)) {
        node(t->node, a.span);
      } else {
        const auto& c = std::get<CallTarget>(a.target);
        if (!idx.contains(ElementKind::Diagram, c.diagram)) dangling(ElementKind::Diagram, c.diagram, "", a.span);
        node(c.return_to, a.span);
      }
      if (a.action && !idx.contains(ElementKind::Action, *a.action))
        dangling(ElementKind::Action, *a.action, "", a.span);
    }
  }
  for (const auto& s : model.schemas)
    for (const auto& r : s.relations)
      for (const auto* end : {&r.left, &r.right})
        if (!idx.contains(ElementKind::Entity, s.name + "." + end->entity))
          dangling(ElementKind::Entity, end->entity, s.name, r.span);
  for (const auto& c : model.charts)
    for (const auto& m : c.modules)
      for (const auto& inv : m.invocations)
        if (!idx.contains(ElementKind::Module, c.name + "." + inv.callee))
          dangling(ElementKind::Module, inv.callee, c.name, inv.span);
  return idx;
}

// ---------------------------------------------------------------------------
// model_equal
// ---------------------------------------------------------------------------

namespace {

template <typename T, typename Eq>
bool list_equal(const std::vector<T>& a, const std::vector<T>& b, Eq eq) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!eq(a[i], b[i])) return false;
  return true;
}

bool target_equal(const ArcTarget& a, const ArcTarget& b) {
  if (a.index() != b.index()) return false;
  if (auto n = std::get_if<NodeTarget>(&a)) return n->node == std::get<NodeTarget>(b).node;
  const auto& ca = std::get<CallTarget>(a);
  const auto& cb = std::get<CallTarget>(b);
  return ca.diagram == cb.diagram && ca.return_to == cb.return_to;
}

bool diagram_equal(const StdDiagram& a, const StdDiagram& b) {
  if (a.name != b.name || a.entry != b.entry) return false;
  if (std::set<std::string>(a.exits.begin(), a.exits.end()) != std::set<std::string>(b.exits.begin(), b.exits.end()))
    return false;
  if (!list_equal(a.nodes, b.nodes, [](const StdNode& x, const StdNode& y) {
        return x.name == y.name && x.output == y.output;
      }))
    return false;
  return list_equal(a.arcs, b.arcs, [](const StdArc& x, const StdArc& y) {
    return x.from == y.from && target_equal(x.target, y.target) && x.pattern == y.pattern && x.guard == y.guard &&
           x.action == y.action && x.decl_index == y.decl_index;
  });
}

bool schema_equal(const ErSchema& a, const ErSchema& b) {
  if (a.name != b.name) return false;
  auto attr_eq = [](const Attribute& x, const Attribute& y) {
    return x.name == y.name && x.type == y.type && x.is_key == y.is_key;
  };
  if (!list_equal(a.entities, b.entities, [&](const Entity& x, const Entity& y) {
        return x.name == y.name && list_equal(x.attributes, y.attributes, attr_eq);
      }))
    return false;
  return list_equal(a.relations, b.relations, [](const Relation& x, const Relation& y) {
    return x.name == y.name && x.left.entity == y.left.entity && x.left.card == y.left.card &&
           x.right.entity == y.right.entity && x.right.card == y.right.card;
  });
}

bool chart_equal(const ScChart& a, const ScChart& b) {
  if (a.name != b.name) return false;
  return list_equal(a.modules, b.modules, [](const ScModule& x, const ScModule& y) {
    return x.name == y.name && x.is_root == y.is_root &&
           list_equal(x.invocations, y.invocations, [](const Invocation& p, const Invocation& q) {
             return p.callee == q.callee && p.couples == q.couples;
           });
  });
}

bool action_equal(const ActionDef& a, const ActionDef& b) {
  return a.name == b.name && list_equal(a.assignments, b.assignments, [](const Assignment& x, const Assignment& y) {
           return x.var == y.var && x.expr == y.expr;
         });
}

} // namespace

bool model_equal(const DesignModel& a, const DesignModel& b) {
  return list_equal(a.diagrams, b.diagrams, diagram_equal) && list_equal(a.schemas, b.schemas, schema_equal) &&
         list_equal(a.charts, b.charts, chart_equal) && list_equal(a.actions, b.actions, action_equal);
}

} // namespace pictoforge
