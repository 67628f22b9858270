#include <sstream>

#include "pictoforge/stdl.hpp"

namespace pictoforge {

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string print_expr(const std::vector<Term>& expr) {
  std::string out;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    if (i) out += " + ";
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, TermLiteral>)
            out += quote(t.text);
          else if constexpr (std::is_same_v<T, TermVar>)
            out += t.name;
          else
            out += "$input";
        },
        expr[i]);
  }
  return out;
}

namespace {

void print_diagram(std::ostream& os, const StdDiagram& d) {
  os << "diagram " << d.name << " {\n";
  if (!d.entry.empty()) os << "  entry " << d.entry << ";\n";
  for (const auto& e : d.exits) os << "  exit " << e << ";\n";
  for (const auto& n : d.nodes) os << "  node " << n.name << " output " << quote(n.output) << ";\n";
  for (const auto& a : d.arcs) {
    os << "  arc " << a.from << " -> ";
    if (auto t = std::get_if<NodeTarget>(&a.target)) {
      os << t->node;
    } else {
      const auto& c = std::get<CallTarget>(a.target);
      os << "call " << c.diagram << " return " << c.return_to;
    }
    os << " on " << (a.pattern.is_otherwise() ? std::string("otherwise") : quote(*a.pattern.literal));
    if (a.guard) os << " when " << a.guard->var << ' ' << to_string(a.guard->op) << ' ' << quote(a.guard->value);
    if (a.action) os << " do " << *a.action;
    os << ";\n";
  }
  os << "}\n";
}

const char* card(Cardinality c) { return c == Cardinality::One ? "1" : "N"; }

void print_schema(std::ostream& os, const ErSchema& s) {
  os << "data " << s.name << " {\n";
  for (const auto& e : s.entities) {
    os << "  entity " << e.name << " {\n";
    for (const auto& a : e.attributes)
      os << "    " << a.name << ": " << to_string(a.type) << (a.is_key ? " key" : "") << ";\n";
    os << "  }\n";
  }
  for (const auto& r : s.relations)
    os << "  relation " << r.name << "(" << r.left.entity << ' ' << card(r.left.card) << ", " << r.right.entity << ' '
       << card(r.right.card) << ");\n";
  os << "}\n";
}

void print_chart(std::ostream& os, const ScChart& c) {
  os << "chart " << c.name << " {\n";
  for (const auto& m : c.modules) {
    os << "  module " << m.name << (m.is_root ? " root" : "") << " {\n";
    for (const auto& inv : m.invocations) {
      os << "    invokes " << inv.callee;
      for (std::size_t i = 0; i < inv.couples.size(); ++i) os << (i ? ", " : " with ") << inv.couples[i];
      os << ";\n";
    }
    os << "  }\n";
  }
  os << "}\n";
}

void print_action(std::ostream& os, const ActionDef& a) {
  os << "action " << a.name << " {\n";
  for (const auto& asg : a.assignments) os << "  " << asg.var << " = " << print_expr(asg.expr) << ";\n";
  os << "}\n";
}

} // namespace

std::string pretty_print(const DesignModel& model) {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << '\n';
    first = false;
  };
  for (const auto& d : model.diagrams) sep(), print_diagram(os, d);
  for (const auto& s : model.schemas) sep(), print_schema(os, s);
  for (const auto& c : model.charts) sep(), print_chart(os, c);
  for (const auto& a : model.actions) sep(), print_action(os, a);
  return os.str();
}

} // namespace pictoforge
