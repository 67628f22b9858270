#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pictoforge {

struct SourceSpan {
  std::string file;
  int line = 1;
  int col = 1;
};

// ---------------------------------------------------------------------------
// State transition diagrams
// ---------------------------------------------------------------------------

struct StdNode {
  std::string name;
  std::string output; // literal text with ${var} placeholders
  SourceSpan span;
};

struct NodeTarget {
  std::string node;
};

struct CallTarget {
  std::string diagram;
  std::string return_to;
};

using ArcTarget = std::variant<NodeTarget, CallTarget>;

/// Literal input text, or `otherwise` when `text` is empty-optional.
struct ArcPattern {
  std::optional<std::string> literal;

  static ArcPattern otherwise() { return {}; }
  static ArcPattern text(std::string s) { return {std::move(s)}; }
  bool is_otherwise() const { return !literal.has_value(); }
  bool operator==(const ArcPattern&) const = default;
};

enum class GuardOp { Eq, Neq };

struct Guard {
  std::string var;
  GuardOp op = GuardOp::Eq;
  std::string value;
  bool operator==(const Guard&) const = default;
};

struct StdArc {
  std::string from;
  ArcTarget target;
  ArcPattern pattern;
  std::optional<Guard> guard;
  std::optional<std::string> action;
  int decl_index = 0;
  SourceSpan span;

  bool is_call() const { return std::holds_alternative<CallTarget>(target); }
};

struct StdDiagram {
  std::string name;
  std::string entry;              // empty when the source declares none
  std::vector<std::string> exits; // a set; kept in declaration order
  std::vector<StdNode> nodes;
  std::vector<StdArc> arcs;
  SourceSpan span;

  const StdNode* find_node(const std::string& node_name) const;
  bool is_exit(const std::string& node_name) const;
};

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

struct TermLiteral {
  std::string text;
  bool operator==(const TermLiteral&) const = default;
};
struct TermVar {
  std::string name;
  bool operator==(const TermVar&) const = default;
};
struct TermInput {
  bool operator==(const TermInput&) const = default;
};

using Term = std::variant<TermLiteral, TermVar, TermInput>;

struct Assignment {
  std::string var;
  std::vector<Term> expr; // concatenation, at least one term
  SourceSpan span;
};

struct ActionDef {
  std::string name;
  std::vector<Assignment> assignments;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Entity-relationship schemas
// ---------------------------------------------------------------------------

enum class AttrType { Int, String, Bool, Date };
enum class Cardinality { One, Many };

struct Attribute {
  std::string name;
  AttrType type = AttrType::String;
  bool is_key = false;
  SourceSpan span;
};

struct Entity {
  std::string name;
  std::vector<Attribute> attributes;
  SourceSpan span;

  std::vector<const Attribute*> keys() const;
};

struct RelationEnd {
  std::string entity;
  Cardinality card = Cardinality::One;
};

struct Relation {
  std::string name;
  RelationEnd left;
  RelationEnd right;
  SourceSpan span;
};

struct ErSchema {
  std::string name;
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  SourceSpan span;

  const Entity* find_entity(const std::string& entity_name) const;
};

// ---------------------------------------------------------------------------
// Structure charts
// ---------------------------------------------------------------------------

struct Invocation {
  std::string callee;
  std::vector<std::string> couples;
  SourceSpan span;
};

struct ScModule {
  std::string name;
  bool is_root = false;
  std::vector<Invocation> invocations;
  SourceSpan span;
};

struct ScChart {
  std::string name;
  std::vector<ScModule> modules;
  SourceSpan span;

  const ScModule* find_module(const std::string& module_name) const;
  const ScModule* root() const;
};

// ---------------------------------------------------------------------------

struct DesignModel {
  std::vector<StdDiagram> diagrams;
  std::vector<ErSchema> schemas;
  std::vector<ScChart> charts;
  std::vector<ActionDef> actions;
  std::string source_name;

  const StdDiagram* find_diagram(const std::string& name) const;
  const ErSchema* find_schema(const std::string& name) const;
  const ScChart* find_chart(const std::string& name) const;
  const ActionDef* find_action(const std::string& name) const;
  bool empty() const;
};

// ---------------------------------------------------------------------------
// Name index
// ---------------------------------------------------------------------------

enum class ElementKind { Diagram, Node, Schema, Entity, Relation, Chart, Module, Action };

const char* to_string(ElementKind kind);
const char* to_string(AttrType type);
const char* to_string(GuardOp op);

/// Nested elements are keyed by qualified name "<container>.<name>".
struct ElementKey {
  ElementKind kind;
  std::string name;
  auto operator<=>(const ElementKey&) const = default;
};

/// Position of an element inside the model's vectors.
struct ElementHandle {
  std::size_t index = 0;
  std::optional<std::size_t> parent;
  bool operator==(const ElementHandle&) const = default;
};

struct UnresolvedRef {
  ElementKind kind;        // kind of the missing element
  std::string name;        // the dangling name as written
  std::string scope;       // container in which it must resolve ("" = model)
  SourceSpan span;
  bool operator==(const UnresolvedRef& o) const {
    return kind == o.kind && name == o.name && scope == o.scope;
  }
};

struct NameIndex {
  std::map<ElementKey, ElementHandle> entries;
  std::vector<UnresolvedRef> unresolved;

  bool contains(ElementKind kind, const std::string& name) const {
    return entries.count({kind, name}) != 0;
  }
};

/// Structural problem that makes a model invalid (as opposed to a checker finding).
struct StructuralIssue {
  std::string code; // DUP_NAME, DUP_ROOT, BAD_PLACEHOLDER, EMPTY_EXPR, BAD_DECL_INDEX
  std::string message;
  SourceSpan span;
  std::optional<SourceSpan> other; // first declaration, for DUP_NAME
};

/// Checks every construction invariant of the model types.
std::vector<StructuralIssue> validate_structure(const DesignModel& model);

/// Throws Error("DUP_NAME", ...) naming both locations on the first duplicate;
/// other structural issues are raised with their own code.
NameIndex build_index(const DesignModel& model);

/// Structural equality ignoring spans and source_name; exits compare as sets.
bool model_equal(const DesignModel& a, const DesignModel& b);

/// Names of the ${var} placeholders in `text`, in order of appearance.
std::vector<std::string> placeholders(const std::string& text);

bool is_identifier(const std::string& s);

} // namespace pictoforge
