#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pictoforge/model.hpp"

namespace pictoforge {

enum class SessionStatus { Running, Finished, DeadEnd, LimitExceeded };

const char* to_string(SessionStatus s);

enum class EventKind { Output, Input, Action, Call, Return, End };

const char* to_string(EventKind k);

struct TranscriptEvent {
  EventKind kind;
  std::string text;
  std::string node;   // qualified "diagram.node" where the event happened
  int step = 0;       // 1-based, strictly increasing within a session
  std::string detail; // "NOMATCH" on unmatched input
};

struct SessionLimits {
  int max_steps = 10000;
  int max_depth = 64;
};

struct Frame {
  std::string diagram;
  std::string return_to;
};

/// Live prototype state. Advance it only through session_input.
struct Session {
  std::shared_ptr<const DesignModel> model;
  std::string root;
  std::vector<Frame> frame_stack;
  std::string diagram; // diagram of the current node
  std::string current;
  std::map<std::string, std::string> bindings;
  std::vector<TranscriptEvent> transcript;
  SessionStatus status = SessionStatus::Running;
  int step_count = 0;
  SessionLimits limits;
};

/// Errors: MODEL_HAS_ERRORS, NO_SUCH_DIAGRAM.
Session session_start(std::shared_ptr<const DesignModel> model, const std::string& root_diagram,
                      SessionLimits limits = {});
Session session_start(const DesignModel& model, const std::string& root_diagram, SessionLimits limits = {});

/// Errors: SESSION_NOT_RUNNING; UNDEFINED_TARGET, UNDEFINED_DIAGRAM and
/// UNDEFINED_ACTION only for models that bypassed the checker.
void session_input(Session& session, const std::string& line);

struct ScriptResult {
  std::vector<TranscriptEvent> transcript;
  SessionStatus status = SessionStatus::Running;
  int step_count = 0;
  std::vector<std::string> unconsumed;
};

ScriptResult session_run_script(const DesignModel& model, const std::string& root,
                                const std::vector<std::string>& inputs, SessionLimits limits = {});

/// Replaces ${var} with its binding; unbound variables read as empty text.
std::string interpolate(const std::string& text, const std::map<std::string, std::string>& bindings);

/// Headless transcript text: `O: ` output lines, `I: ` input lines, `! ` markers.
std::string format_transcript(const std::vector<TranscriptEvent>& events);
std::string format_transcript(const ScriptResult& result);

} // namespace pictoforge
