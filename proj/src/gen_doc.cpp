#include <sstream>

#include "pictoforge/checker.hpp"
#include "pictoforge/generators.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

namespace {

std::string cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out += "<br>";
    else out += c;
  }
  return out;
}

void code_block(std::ostream& os, const std::string& text) { os << "\n```\n" << text << "```\n"; }

DesignModel only_diagram(const StdDiagram& d) {
  DesignModel m;
  m.diagrams.push_back(d);
  return m;
}

} // namespace

std::string gen_doc(const DesignModel& model) {
  std::ostringstream os;
  os << "# Design document: " << (model.source_name.empty() ? "(unnamed)" : model.source_name) << "\n";

  for (const auto& d : model.diagrams) {
    os << "\n## Diagram " << d.name << "\n";
    code_block(os, pretty_print(only_diagram(d)));
  }
  for (const auto& s : model.schemas) {
    DesignModel m;
    m.schemas.push_back(s);
    os << "\n## Data " << s.name << "\n";
    code_block(os, pretty_print(m));
  }
  for (const auto& c : model.charts) {
    DesignModel m;
    m.charts.push_back(c);
    os << "\n## Chart " << c.name << "\n";
    code_block(os, pretty_print(m));
  }
  if (!model.actions.empty()) {
    DesignModel m;
    m.actions = model.actions;
    os << "\n# Actions\n";
    code_block(os, pretty_print(m));
  }

  auto dict = gen_dictionary(model);
  if (!dict.empty()) {
    os << "\n# Data dictionary\n\n| Name | Kind | Defined in | Referenced by |\n|---|---|---|---|\n";
    for (const auto& e : dict) {
      std::string refs;
      for (const auto& r : e.referenced_by) refs += (refs.empty() ? "" : ", ") + r.kind + ":" + r.name;
      os << "| " << cell(e.name) << " | " << to_string(e.kind) << " | " << cell(e.defined_in.kind + ":" + e.defined_in.name)
         << " | " << cell(refs) << " |\n";
    }
  }

  auto findings = check_all(model);
  if (!findings.empty()) {
    os << "\n# Appendix: findings\n\n";
    for (const auto& f : findings) os << "- `" << f.code << "` " << to_string(f.severity) << " " << f.subject.kind
                                      << ":" << cell(f.subject.name) << " - " << cell(f.detail) << "\n";
  }
  return os.str();
}

} // namespace pictoforge
