#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pictoforge/bus.hpp"
#include "pictoforge/model.hpp"

namespace pictoforge {

// ---------------------------------------------------------------------------
// Record schema
// ---------------------------------------------------------------------------

enum class FieldType { Int, Text, Bool };

struct FieldDef {
  std::string name;
  FieldType type;
};

struct TableDef {
  std::string name;
  std::vector<FieldDef> fields; // first field is always revision_added:int
};

/// The normative table list: DIAGRAM, NODE, ARC, ENTITY, RELATION, MODULE, ACTION, SYMBOL.
const std::vector<TableDef>& table_schema();

/// Contents of `<root>/schema.txt`.
std::string schema_description();

using FieldValue = std::variant<std::int64_t, std::string, bool>;
using Record = std::vector<FieldValue>; // without revision_added

struct RecordSet {
  // Indexed like table_schema().
  std::vector<std::vector<Record>> tables;
};

/// Flattens a model into records; each table's records are in model order.
RecordSet decompose(const DesignModel& model);

/// Inverse of decompose. Errors: STORE_CORRUPT on inconsistent records.
DesignModel reconstruct(const RecordSet& records, const std::string& source_name);

/// SHA-256 (hex) over the canonical text form of the records.
std::string records_digest(const RecordSet& records);

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

struct Revision {
  std::int64_t number = 0;
  std::string author;
  std::int64_t timestamp = 0;
  std::string message;
  std::string model_digest;
  std::string source_name;
};

struct Lock {
  std::string holder;
  std::int64_t acquired_at = 0;
  std::string scope = "WHOLE_STORE";
};

struct Busy {
  std::string holder;
  std::int64_t acquired_at = 0;
};

using LockResult = std::variant<Lock, Busy>;

/// Directory-backed record store:
///   <root>/schema.txt, <root>/tables/<TABLE>.recs, <root>/LOCK,
///   <root>/revisions.log, <root>/events.log, <root>/triggers.conf
class Repository {
public:
  /// Creates a store at revision 0. Errors: NOT_EMPTY, REPO_IO.
  static Repository init(const std::filesystem::path& root);

  /// Opens an existing store. Errors: NO_REPOSITORY.
  static Repository open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  std::int64_t current_revision() const;
  std::vector<Revision> log() const;
  Revision revision(std::int64_t number) const;

  /// Requires the lock held by `author`. Errors: NOT_LOCKED, STORE_CORRUPT.
  /// Emits DIAGRAM_COMMITTED on the store's event log.
  Revision commit(const DesignModel& model, const std::string& author, const std::string& message);

  /// Errors: NO_SUCH_REVISION, STORE_CORRUPT.
  DesignModel checkout(std::int64_t revision) const;
  RecordSet records_at(std::int64_t revision) const;

  LockResult lock(const std::string& holder);
  /// Errors: NOT_HOLDER.
  void unlock(const std::string& holder);
  std::optional<Lock> current_lock() const;

  /// Interchange document: {"revision": {...}, "digest": "...", "tables": {...}}.
  /// Errors: NO_SUCH_REVISION.
  nlohmann::json export_revision(std::int64_t revision) const;

  /// Requires the lock held by `author`. Errors: NOT_LOCKED, MALFORMED_DOC, STORE_CORRUPT.
  Revision import_document(const nlohmann::json& doc, const std::string& author);

  EventLog events() const { return EventLog(root_ / "events.log"); }
  std::filesystem::path triggers_path() const { return root_ / "triggers.conf"; }
  /// Event emitted by the most recent commit or import through this handle.
  const std::optional<Event>& last_event() const { return last_event_; }

private:
  explicit Repository(std::filesystem::path root) : root_(std::move(root)) {}
  void require_lock(const std::string& author) const;

  std::filesystem::path root_;
  std::optional<Event> last_event_;
};

/// Parses an interchange document back into records and metadata.
/// Errors: MALFORMED_DOC, STORE_CORRUPT (digest mismatch).
std::pair<RecordSet, Revision> read_interchange(const nlohmann::json& doc);

} // namespace pictoforge
