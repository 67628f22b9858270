#include <algorithm>
#include <sstream>

#include "pictoforge/checker.hpp"
#include "pictoforge/error.hpp"
#include "pictoforge/generators.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

// Comment text must not close the comment early.
std::string comment_safe(std::string s) {
  for (std::size_t p; (p = s.find("*/")) != std::string::npos;) s.replace(p, 2, "* /");
  return s;
}

std::string chart_skeleton(const ScChart& chart) {
  // Parameters of a module are the couples passed to it, in first-seen order.
  std::map<std::string, std::vector<std::string>> params;
  for (const auto& m : chart.modules)
    for (const auto& inv : m.invocations) {
      auto& p = params[inv.callee];
      for (const auto& c : inv.couples)
        if (std::find(p.begin(), p.end(), c) == p.end()) p.push_back(c);
    }

  std::vector<const ScModule*> order;
  if (const ScModule* root = chart.root()) order.push_back(root);
  for (const auto& m : chart.modules)
    if (!m.is_root) order.push_back(&m);

  std::ostringstream os;
  os << "/* structure chart " << chart.name << " */\n";
  for (const ScModule* m : order) {
    os << "\nprocedure " << m->name << "(" << join(params[m->name]) << ")\n{\n";
    for (const auto& inv : m->invocations) os << "  " << inv.callee << "(" << join(inv.couples) << ");\n";
    os << "  /* TODO */\n}\n";
  }
  return os.str();
}

std::string diagram_skeleton(const DesignModel& model, const StdDiagram& d) {
  std::ostringstream os;
  os << "/* dialogue " << d.name << " */\n\n";
  os << "enum " << d.name << "_state {";
  for (std::size_t i = 0; i < d.nodes.size(); ++i) os << (i ? ", " : " ") << d.nodes[i].name;
  os << " };\n\n";

  std::vector<std::string> actions;
  os << "void " << d.name << "_dialogue(void)\n{\n";
  os << "  enum " << d.name << "_state state = " << d.entry << ";\n";
  os << "  for (;;) {\n    switch (state) {\n";
  for (const auto& n : d.nodes) {
    os << "    case " << n.name << ":\n";
    os << "      /* output " << comment_safe(quote(n.output)) << " */\n";
    if (d.is_exit(n.name)) os << "      /* exit node */\n";
    for (const auto& a : d.arcs) {
      if (a.from != n.name) continue;
      std::string cond = a.pattern.is_otherwise() ? "otherwise" : "input == " + quote(*a.pattern.literal);
      if (a.guard) cond += " && " + a.guard->var + " " + to_string(a.guard->op) + " " + quote(a.guard->value);
      os << "      /* if (" << comment_safe(cond) << ") { ";
      if (a.action) {
        os << *a.action << "(); ";
        if (std::find(actions.begin(), actions.end(), *a.action) == actions.end()) actions.push_back(*a.action);
      }
      if (auto t = std::get_if<NodeTarget>(&a.target)) {
        os << "state = " << t->node << ";";
      } else {
        const auto& c = std::get<CallTarget>(a.target);
        os << c.diagram << "_dialogue(); state = " << c.return_to << ";";
      }
      os << " } */\n";
    }
    os << "      break;\n";
  }
  os << "    }\n  }\n}\n";

  for (const auto& name : actions) {
    os << "\nvoid " << name << "(void)\n{\n";
    if (const ActionDef* act = model.find_action(name))
      for (const auto& asg : act->assignments)
        os << "  /* " << asg.var << " = " << comment_safe(print_expr(asg.expr)) << " */\n";
    os << "  /* TODO */\n}\n";
  }
  return os.str();
}

} // namespace

std::string gen_skeleton(const DesignModel& model, SkeletonTarget kind, const std::string& name) {
  Subject scope{kind == SkeletonTarget::Chart ? "chart" : "diagram", name};
  bool found = kind == SkeletonTarget::Chart ? model.find_chart(name) != nullptr : model.find_diagram(name) != nullptr;
  if (!found) throw Error("TARGET_NOT_FOUND", "no " + scope.kind + " named '" + name + "'");

  auto findings = kind == SkeletonTarget::Chart ? check_sc(model) : check_std(model);
  for (const auto& f : findings)
    if (f.severity == Severity::Error && f.scope == scope)
      throw Error("TARGET_HAS_ERRORS", scope.kind + " '" + name + "' has errors: " + format_finding(f));

  if (kind == SkeletonTarget::Chart) return chart_skeleton(*model.find_chart(name));
  return diagram_skeleton(model, *model.find_diagram(name));
}

} // namespace pictoforge
