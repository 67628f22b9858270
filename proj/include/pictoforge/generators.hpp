#pragma once

#include <string>
#include <vector>

#include "pictoforge/model.hpp"

namespace pictoforge {

enum class SymbolKind { Node, ArcPattern, Variable, Entity, Attribute, Relation, Module, Couple, Action, Diagram };

const char* to_string(SymbolKind k);

struct SymbolRef {
  std::string kind;
  std::string name;
  auto operator<=>(const SymbolRef&) const = default;
};

struct DictionaryEntry {
  std::string name;
  SymbolKind kind;
  SymbolRef defined_in;
  std::vector<SymbolRef> referenced_by; // sorted, unique
};

/// One entry per named symbol, sorted by (name, kind, defined_in).
std::vector<DictionaryEntry> gen_dictionary(const DesignModel& model);

/// Tab-separated text: name, kind, defined_in, comma-separated referenced_by.
std::string format_dictionary(const std::vector<DictionaryEntry>& entries);

/// Errors: SCHEMA_NOT_FOUND, SCHEMA_HAS_ERRORS, NO_KEY.
std::string gen_sql(const DesignModel& model, const std::string& schema_name);

enum class SkeletonTarget { Chart, Diagram };

/// Errors: TARGET_NOT_FOUND, TARGET_HAS_ERRORS.
std::string gen_skeleton(const DesignModel& model, SkeletonTarget kind, const std::string& name);

/// Single Markdown document for the whole model.
std::string gen_doc(const DesignModel& model);

/// Lower-cased SQL identifier for a model name.
std::string sql_identifier(const std::string& name);

} // namespace pictoforge
