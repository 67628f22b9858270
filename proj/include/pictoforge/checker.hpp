#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pictoforge/model.hpp"

namespace pictoforge {

enum class Severity { Error, Warning };

const char* to_string(Severity s);

struct Subject {
  std::string kind; // diagram, node, arc, variable, entity, relation, chart, module, couple
  std::string name; // qualified: "d.a" for node a of d, "d[3]" for arc 3 of d
  auto operator<=>(const Subject&) const = default;
};

/// Check findings. The code fixes the severity:
///
///   C001 E arc endpoint / exit names an undefined node   C101 E entity table name declared twice
///   C002 W node unreachable from entry                   C102 E relation references undefined entity
///   C003 E missing or undefined entry node               C103 W entity without key attribute
///   C004 E ambiguous arcs (same pattern, same guard)     C201 E invokes undefined module
///   C005 E called diagram has no exit node               C202 W module on an invocation cycle
///   C006 E call names undefined diagram                  C203 W module unreachable from root
///   C007 E `do` names undefined action                   C204 W chart has no root module
///   C008 W variable read but never assigned              C301 W couple matches no attribute or variable
///   C009 W non-exit node without outgoing arcs           C302 W variable assigned but never read
struct Finding {
  std::string code;
  Severity severity = Severity::Error;
  Subject subject;
  std::string detail;
  std::optional<SourceSpan> span;
  Subject scope; // top-level element the finding belongs to (for per-target filtering)
};

Severity severity_of(const std::string& code);

std::vector<Finding> check_std(const DesignModel& model);
std::vector<Finding> check_er(const DesignModel& model);
std::vector<Finding> check_sc(const DesignModel& model);
std::vector<Finding> check_cross(const DesignModel& model);

/// All four checks, merged and sorted.
std::vector<Finding> check_all(const DesignModel& model);

bool has_errors(const std::vector<Finding>& findings);

/// Total order: code, subject name, subject kind, detail.
void sort_findings(std::vector<Finding>& findings);

/// `CODE SEVERITY kind:name - detail`
std::string format_finding(const Finding& f);

/// Variables read by node outputs and guards, and variables assigned by actions.
std::vector<std::string> variables_read(const DesignModel& model);
std::vector<std::string> variables_written(const DesignModel& model);

} // namespace pictoforge
