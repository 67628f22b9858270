#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

namespace pictoforge {

enum class BusEventKind { DiagramCommitted, CheckCompleted, ArtifactGenerated, SessionEnded };

const char* to_string(BusEventKind k);
std::optional<BusEventKind> bus_event_kind(const std::string& name);

struct Event {
  std::uint64_t seq = 0;
  BusEventKind kind = BusEventKind::DiagramCommitted;
  std::string subject;
  std::optional<std::int64_t> revision;
  std::int64_t timestamp = 0; // UTC seconds
  std::map<std::string, std::string> payload;

  bool operator==(const Event&) const = default;
};

/// `seq|kind|subject|revision|timestamp|k1=v1;k2=v2` with %XX escapes for
/// '%', '|', ';', '=', CR and LF inside fields.
std::string format_event_line(const Event& e);
std::optional<Event> parse_event_line(const std::string& line);

/// Append-only event log file shared between processes.
class EventLog {
public:
  explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const { return path_; }

  /// Assigns the next seq under an exclusive file lock and appends durably.
  /// A zero timestamp is replaced by the current time. Errors: LOG_IO.
  Event emit(Event event) const;

  /// Every complete event with seq >= from_seq, in order.
  std::vector<Event> read_from(std::uint64_t from_seq) const;

  /// Delivers events with seq >= from_seq in order, then keeps following
  /// appends until `stop` is requested or `on_event` returns false.
  void tail(std::uint64_t from_seq, const std::function<bool(const Event&)>& on_event, std::stop_token stop,
            std::chrono::milliseconds poll = std::chrono::milliseconds(25)) const;

private:
  std::filesystem::path path_;
};

struct TriggerRule {
  BusEventKind kind;
  std::string command; // may contain {subject} and {revision}
};

/// One rule per line: `KIND command template`. Blank lines and `#` comments
/// are skipped. Errors: BAD_TRIGGER.
std::vector<TriggerRule> parse_trigger_rules(const std::string& text);
std::vector<TriggerRule> load_trigger_rules(const std::filesystem::path& path);

/// Substitutes shell-quoted {subject} and {revision} into the template.
std::string expand_command(const std::string& tmpl, const Event& event);

struct SpawnReport {
  TriggerRule rule;
  std::string command;
  int exit_status = -1;
  bool ok = false;
  std::string error; // "SPAWN_FAIL: ..." when !ok
};

/// Runs every matching rule once via /bin/sh, passing the payload on stdin
/// as `key=value` lines. A failing rule does not stop the others.
std::vector<SpawnReport> bus_dispatch(const std::vector<TriggerRule>& rules, const Event& event);

/// Dispatches each event seq at most once per instance.
class TriggerDispatcher {
public:
  explicit TriggerDispatcher(std::vector<TriggerRule> rules) : rules_(std::move(rules)) {}
  std::vector<SpawnReport> dispatch(const Event& event);

private:
  std::vector<TriggerRule> rules_;
  std::set<std::uint64_t> done_;
};

} // namespace pictoforge
