#include "pictoforge/checker.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <set>

namespace pictoforge {

const char* to_string(Severity s) { return s == Severity::Error ? "ERROR" : "WARNING"; }

Severity severity_of(const std::string& code) {
  static const std::set<std::string> warnings = {"C002", "C008", "C009", "C103", "C202",
                                                 "C203", "C204", "C301", "C302"};
  return warnings.count(code) ? Severity::Warning : Severity::Error;
}

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::Error; });
}

void sort_findings(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.code, a.subject.name, a.subject.kind, a.detail) <
           std::tie(b.code, b.subject.name, b.subject.kind, b.detail);
  });
}

std::string format_finding(const Finding& f) {
  return f.code + " " + to_string(f.severity) + " " + f.subject.kind + ":" + f.subject.name + " - " + f.detail;
}

namespace {

Finding make(const std::string& code, Subject subject, std::string detail, std::optional<SourceSpan> span,
             Subject scope) {
  return {code, severity_of(code), std::move(subject), std::move(detail), std::move(span), std::move(scope)};
}

std::string arc_name(const StdDiagram& d, const StdArc& a) { return d.name + "[" + std::to_string(a.decl_index) + "]"; }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> sorted(std::set<std::string> s) { return {s.begin(), s.end()}; }

} // namespace

std::vector<std::string> variables_read(const DesignModel& model) {
  std::set<std::string> out;
  for (const auto& d : model.diagrams) {
    for (const auto& n : d.nodes)
      for (auto& p : placeholders(n.output)) out.insert(p);
    for (const auto& a : d.arcs)
      if (a.guard) out.insert(a.guard->var);
  }
  return sorted(std::move(out));
}

std::vector<std::string> variables_written(const DesignModel& model) {
  std::set<std::string> out;
  for (const auto& a : model.actions)
    for (const auto& asg : a.assignments) out.insert(asg.var);
  return sorted(std::move(out));
}

// ---------------------------------------------------------------------------

std::vector<Finding> check_std(const DesignModel& model) {
  std::vector<Finding> out;
  auto written = variables_written(model);
  std::set<std::string> assigned(written.begin(), written.end());
  std::set<std::string> no_exit_reported;

  for (const auto& d : model.diagrams) {
    Subject scope{"diagram", d.name};
    auto node_subject = [&](const std::string& n) { return Subject{"node", d.name + "." + n}; };
    auto declared = [&](const std::string& n) { return d.find_node(n) != nullptr; };

    bool entry_ok = !d.entry.empty() && declared(d.entry);
    if (d.entry.empty())
      out.push_back(make("C003", scope, "diagram declares no entry node", d.span, scope));
    else if (!entry_ok)
      out.push_back(make("C003", scope, "entry names undefined node '" + d.entry + "'", d.span, scope));

    for (const auto& e : d.exits)
      if (!declared(e)) out.push_back(make("C001", scope, "exit names undefined node '" + e + "'", d.span, scope));

    std::map<std::string, std::vector<const StdArc*>> outgoing;
    for (const auto& a : d.arcs) {
      Subject arc{"arc", arc_name(d, a)};
      if (!declared(a.from))
        out.push_back(make("C001", arc, "arc source node '" + a.from + "' undefined", a.span, scope));
      else
        outgoing[a.from].push_back(&a);

      if (auto t = std::get_if<NodeTarget>(&a.target)) {
        if (!declared(t->node))
          out.push_back(make("C001", arc, "arc target node '" + t->node + "' undefined", a.span, scope));
      } else {
        const auto& c = std::get<CallTarget>(a.target);
        if (!declared(c.return_to))
          out.push_back(make("C001", arc, "return node '" + c.return_to + "' undefined", a.span, scope));
        const StdDiagram* callee = model.find_diagram(c.diagram);
        if (!callee) {
          out.push_back(make("C006", arc, "call names undefined diagram '" + c.diagram + "'", a.span, scope));
        } else {
          bool has_exit = std::any_of(callee->exits.begin(), callee->exits.end(),
                                      [&](const std::string& e) { return callee->find_node(e) != nullptr; });
          if (!has_exit && no_exit_reported.insert(callee->name).second)
            out.push_back(make("C005", Subject{"diagram", callee->name},
                               "called diagram has no exit node (called from " + arc.name + ")", a.span,
                               Subject{"diagram", callee->name}));
        }
      }
      if (a.action && !model.find_action(*a.action))
        out.push_back(make("C007", arc, "action '" + *a.action + "' undefined", a.span, scope));
    }

    // C004: per source node, pairwise.
    for (const auto& [from, arcs] : outgoing) {
      for (std::size_t j = 1; j < arcs.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
          if (arcs[i]->pattern == arcs[j]->pattern && arcs[i]->guard == arcs[j]->guard) {
            out.push_back(make("C004", Subject{"arc", arc_name(d, *arcs[j])},
                               "same pattern and guard as " + arc_name(d, *arcs[i]) + "; arc can never fire",
                               arcs[j]->span, scope));
            break;
          }
        }
      }
    }

    // C002: breadth-first reachability; a call arc leads to its return node.
    if (entry_ok) {
      std::set<std::string> seen{d.entry};
      std::deque<std::string> queue{d.entry};
      while (!queue.empty()) {
        std::string n = queue.front();
        queue.pop_front();
        for (const StdArc* a : outgoing[n]) {
          const std::string& next =
              a->is_call() ? std::get<CallTarget>(a->target).return_to : std::get<NodeTarget>(a->target).node;
          if (declared(next) && seen.insert(next).second) queue.push_back(next);
        }
      }
      for (const auto& n : d.nodes)
        if (!seen.count(n.name))
          out.push_back(make("C002", node_subject(n.name), "node unreachable from entry '" + d.entry + "'", n.span,
                             scope));
    }

    for (const auto& n : d.nodes)
      if (!d.is_exit(n.name) && outgoing[n.name].empty())
        out.push_back(make("C009", node_subject(n.name), "non-exit node has no outgoing arcs", n.span, scope));
  }

  // C008: one finding per variable, at its first read.
  std::map<std::string, std::pair<std::string, SourceSpan>> first_read;
  for (const auto& d : model.diagrams) {
    for (const auto& n : d.nodes)
      for (auto& p : placeholders(n.output)) first_read.try_emplace(p, "output of " + d.name + "." + n.name, n.span);
    for (const auto& a : d.arcs)
      if (a.guard) first_read.try_emplace(a.guard->var, "guard of " + arc_name(d, a), a.span);
  }
  for (const auto& [var, site] : first_read)
    if (!assigned.count(var))
      out.push_back(make("C008", Subject{"variable", var}, "read in " + site.first + " but never assigned",
                         site.second, Subject{"model", model.source_name}));

  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Finding> check_er(const DesignModel& model) {
  std::vector<Finding> out;
  std::map<std::string, std::string> tables; // lower-cased name -> first "schema.entity"
  for (const auto& s : model.schemas) {
    Subject scope{"schema", s.name};
    for (const auto& e : s.entities) {
      std::string qualified = s.name + "." + e.name;
      auto [it, inserted] = tables.emplace(lower(e.name), qualified);
      if (!inserted)
        out.push_back(make("C101", Subject{"entity", qualified}, "entity name collides with " + it->second, e.span,
                           scope));
      if (e.keys().empty())
        out.push_back(make("C103", Subject{"entity", qualified}, "entity has no key attribute", e.span, scope));
    }
    for (const auto& r : s.relations) {
      for (const auto* end : {&r.left, &r.right})
        if (!s.find_entity(end->entity))
          out.push_back(make("C102", Subject{"relation", s.name + "." + r.name},
                             "relation references undefined entity '" + end->entity + "'", r.span, scope));
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Finding> check_sc(const DesignModel& model) {
  std::vector<Finding> out;
  for (const auto& c : model.charts) {
    Subject scope{"chart", c.name};
    std::map<std::string, std::vector<std::string>> edges;
    for (const auto& m : c.modules) {
      auto& succ = edges[m.name];
      for (const auto& inv : m.invocations) {
        if (!c.find_module(inv.callee))
          out.push_back(make("C201", Subject{"module", c.name + "." + m.name},
                             "invokes undefined module '" + inv.callee + "'", inv.span, scope));
        else
          succ.push_back(inv.callee);
      }
    }
    auto reach_from = [&](const std::string& start) {
      std::set<std::string> seen;
      std::vector<std::string> stack(edges[start].begin(), edges[start].end());
      while (!stack.empty()) {
        std::string n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        for (const auto& s : edges[n]) stack.push_back(s);
      }
      return seen;
    };
    for (const auto& m : c.modules)
      if (reach_from(m.name).count(m.name))
        out.push_back(make("C202", Subject{"module", c.name + "." + m.name}, "module lies on an invocation cycle",
                           m.span, scope));

    const ScModule* root = c.root();
    if (!root) {
      out.push_back(make("C204", scope, "chart has no root module", c.span, scope));
    } else {
      auto reached = reach_from(root->name);
      reached.insert(root->name);
      for (const auto& m : c.modules)
        if (!reached.count(m.name))
          out.push_back(make("C203", Subject{"module", c.name + "." + m.name},
                             "module unreachable from root '" + root->name + "'", m.span, scope));
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Finding> check_cross(const DesignModel& model) {
  std::vector<Finding> out;
  std::set<std::string> attributes;
  for (const auto& s : model.schemas)
    for (const auto& e : s.entities)
      for (const auto& a : e.attributes) attributes.insert(a.name);
  auto read = variables_read(model);
  auto written = variables_written(model);
  std::set<std::string> variables(read.begin(), read.end());
  variables.insert(written.begin(), written.end());

  for (const auto& c : model.charts) {
    std::set<std::string> reported;
    for (const auto& m : c.modules)
      for (const auto& inv : m.invocations)
        for (const auto& couple : inv.couples)
          if (!attributes.count(couple) && !variables.count(couple) && reported.insert(couple).second)
            out.push_back(make("C301", Subject{"couple", c.name + "." + couple},
                               "data couple matches no entity attribute and no dialogue variable", inv.span,
                               Subject{"chart", c.name}));
  }

  std::set<std::string> read_set(read.begin(), read.end());
  std::map<std::string, std::vector<std::string>> writers;
  std::map<std::string, SourceSpan> first_write;
  for (const auto& a : model.actions)
    for (const auto& asg : a.assignments) {
      auto& w = writers[asg.var];
      if (std::find(w.begin(), w.end(), a.name) == w.end()) w.push_back(a.name);
      first_write.try_emplace(asg.var, asg.span);
    }
  for (const auto& [var, acts] : writers) {
    if (read_set.count(var)) continue;
    std::string who;
    for (const auto& a : acts) who += (who.empty() ? "" : ", ") + a;
    out.push_back(make("C302", Subject{"variable", var}, "assigned by " + who + " but never read by an output or guard",
                       first_write[var], Subject{"model", model.source_name}));
  }
  sort_findings(out);
  return out;
}

std::vector<Finding> check_all(const DesignModel& model) {
  std::vector<Finding> out;
  for (auto* check : {check_std, check_er, check_sc, check_cross}) {
    auto part = check(model);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  sort_findings(out);
  return out;
}

} // namespace pictoforge
