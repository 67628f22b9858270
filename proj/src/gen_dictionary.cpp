#include <map>
#include <set>
#include <tuple>

#include "pictoforge/generators.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

const char* to_string(SymbolKind k) {
  switch (k) {
  case SymbolKind::Node: return "NODE";
  case SymbolKind::ArcPattern: return "ARC_PATTERN";
  case SymbolKind::Variable: return "VARIABLE";
  case SymbolKind::Entity: return "ENTITY";
  case SymbolKind::Attribute: return "ATTRIBUTE";
  case SymbolKind::Relation: return "RELATION";
  case SymbolKind::Module: return "MODULE";
  case SymbolKind::Couple: return "COUPLE";
  case SymbolKind::Action: return "ACTION";
  case SymbolKind::Diagram: return "DIAGRAM";
  }
  return "?";
}

namespace {

// Keyed by (name, kind, defined_in) so that same-named symbols in different
// containers stay distinct.
using EntryKey = std::tuple<std::string, SymbolKind, SymbolRef>;

class Collector {
public:
  std::map<EntryKey, std::set<SymbolRef>> entries;

  void define(const std::string& name, SymbolKind kind, SymbolRef container) {
    entries.try_emplace({name, kind, std::move(container)});
  }
  void use(const std::string& name, SymbolKind kind, const SymbolRef& container, SymbolRef site) {
    auto it = entries.find({name, kind, container});
    if (it != entries.end()) it->second.insert(std::move(site));
  }
};

std::string arc_name(const StdDiagram& d, const StdArc& a) { return d.name + "[" + std::to_string(a.decl_index) + "]"; }

} // namespace

std::vector<DictionaryEntry> gen_dictionary(const DesignModel& model) {
  Collector c;
  const SymbolRef top{"model", model.source_name};

  // Definitions.
  for (const auto& a : model.actions) {
    c.define(a.name, SymbolKind::Action, top);
  }
  // A variable is defined by the first action assigning it, else by the model.
  std::map<std::string, SymbolRef> var_home;
  for (const auto& a : model.actions)
    for (const auto& asg : a.assignments) var_home.try_emplace(asg.var, SymbolRef{"action", a.name});
  for (const auto& d : model.diagrams) {
    for (const auto& n : d.nodes)
      for (const auto& p : placeholders(n.output)) var_home.try_emplace(p, top);
    for (const auto& a : d.arcs)
      if (a.guard) var_home.try_emplace(a.guard->var, top);
  }
  for (const auto& a : model.actions)
    for (const auto& asg : a.assignments)
      for (const auto& t : asg.expr)
        if (auto v = std::get_if<TermVar>(&t)) var_home.try_emplace(v->name, top);
  for (const auto& [var, home] : var_home) c.define(var, SymbolKind::Variable, home);

  for (const auto& d : model.diagrams) {
    c.define(d.name, SymbolKind::Diagram, top);
    SymbolRef in_d{"diagram", d.name};
    for (const auto& n : d.nodes) c.define(n.name, SymbolKind::Node, in_d);
    for (const auto& a : d.arcs)
      if (a.pattern.literal) c.define(*a.pattern.literal, SymbolKind::ArcPattern, in_d);
  }
  for (const auto& s : model.schemas) {
    SymbolRef in_s{"schema", s.name};
    for (const auto& e : s.entities) {
      c.define(e.name, SymbolKind::Entity, in_s);
      for (const auto& attr : e.attributes) c.define(attr.name, SymbolKind::Attribute, {"entity", s.name + "." + e.name});
    }
    for (const auto& r : s.relations) c.define(r.name, SymbolKind::Relation, in_s);
  }
  for (const auto& ch : model.charts) {
    SymbolRef in_c{"chart", ch.name};
    for (const auto& m : ch.modules) {
      c.define(m.name, SymbolKind::Module, in_c);
      for (const auto& inv : m.invocations)
        for (const auto& cp : inv.couples) c.define(cp, SymbolKind::Couple, in_c);
    }
  }

  // Uses.
  auto use_var = [&](const std::string& var, SymbolRef site) {
    c.use(var, SymbolKind::Variable, var_home.at(var), std::move(site));
  };
  for (const auto& d : model.diagrams) {
    SymbolRef in_d{"diagram", d.name};
    auto node = [&](const std::string& n, SymbolRef site) { c.use(n, SymbolKind::Node, in_d, std::move(site)); };
    if (!d.entry.empty()) node(d.entry, in_d);
    for (const auto& e : d.exits) node(e, in_d);
    for (const auto& n : d.nodes)
      for (const auto& p : placeholders(n.output)) use_var(p, {"node", d.name + "." + n.name});
    for (const auto& a : d.arcs) {
      SymbolRef site{"arc", arc_name(d, a)};
      node(a.from, site);
      if (auto t = std::get_if<NodeTarget>(&a.target)) {
        node(t->node, site);
      } else {
        const auto& call = std::get<CallTarget>(a.target);
        node(call.return_to, site);
        c.use(call.diagram, SymbolKind::Diagram, top, site);
      }
      if (a.pattern.literal) c.use(*a.pattern.literal, SymbolKind::ArcPattern, in_d, site);
      if (a.guard) use_var(a.guard->var, site);
      if (a.action) c.use(*a.action, SymbolKind::Action, top, site);
    }
  }
  for (const auto& a : model.actions) {
    SymbolRef site{"action", a.name};
    for (const auto& asg : a.assignments) {
      use_var(asg.var, site);
      for (const auto& t : asg.expr)
        if (auto v = std::get_if<TermVar>(&t)) use_var(v->name, site);
    }
  }
  std::map<std::string, std::vector<SymbolRef>> attribute_homes;
  for (const auto& s : model.schemas) {
    SymbolRef in_s{"schema", s.name};
    for (const auto& r : s.relations)
      for (const auto* end : {&r.left, &r.right})
        c.use(end->entity, SymbolKind::Entity, in_s, {"relation", s.name + "." + r.name});
    for (const auto& e : s.entities)
      for (const auto& attr : e.attributes) attribute_homes[attr.name].push_back({"entity", s.name + "." + e.name});
  }
  for (const auto& ch : model.charts) {
    SymbolRef in_c{"chart", ch.name};
    for (const auto& m : ch.modules) {
      SymbolRef site{"module", ch.name + "." + m.name};
      for (const auto& inv : m.invocations) {
        c.use(inv.callee, SymbolKind::Module, in_c, site);
        for (const auto& cp : inv.couples) {
          c.use(cp, SymbolKind::Couple, in_c, site);
          if (auto it = attribute_homes.find(cp); it != attribute_homes.end())
            for (const auto& home : it->second) c.use(cp, SymbolKind::Attribute, home, site);
        }
      }
    }
  }

  std::vector<DictionaryEntry> out;
  out.reserve(c.entries.size());
  for (auto& [key, refs] : c.entries)
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), {refs.begin(), refs.end()}});
  return out;
}

std::string format_dictionary(const std::vector<DictionaryEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += (e.kind == SymbolKind::ArcPattern ? quote(e.name) : e.name) + "\t" + to_string(e.kind) + "\t" + e.defined_in.kind + ":" + e.defined_in.name + "\t";
    for (std::size_t i = 0; i < e.referenced_by.size(); ++i)
      out += (i ? "," : "") + e.referenced_by[i].kind + ":" + e.referenced_by[i].name;
    out += "\n";
  }
  return out;
}

} // namespace pictoforge
