#include "pictoforge/prototyper.hpp"

#include "pictoforge/checker.hpp"
#include "pictoforge/error.hpp"

namespace pictoforge {

const char* to_string(SessionStatus s) {
  switch (s) {
  case SessionStatus::Running: return "RUNNING";
  case SessionStatus::Finished: return "FINISHED";
  case SessionStatus::DeadEnd: return "DEAD_END";
  case SessionStatus::LimitExceeded: return "LIMIT_EXCEEDED";
  }
  return "?";
}

const char* to_string(EventKind k) {
  switch (k) {
  case EventKind::Output: return "OUTPUT";
  case EventKind::Input: return "INPUT";
  case EventKind::Action: return "ACTION";
  case EventKind::Call: return "CALL";
  case EventKind::Return: return "RETURN";
  case EventKind::End: return "END";
  }
  return "?";
}

std::string interpolate(const std::string& text, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      std::size_t close = text.find('}', i + 2);
      if (close != std::string::npos) {
        std::string name = text.substr(i + 2, close - i - 2);
        if (is_identifier(name)) {
          if (auto it = bindings.find(name); it != bindings.end()) out += it->second;
          i = close;
          continue;
        }
      }
    }
    out += text[i];
  }
  return out;
}

namespace {

const StdDiagram& diagram_of(const Session& s, const std::string& name) {
  const StdDiagram* d = s.model->find_diagram(name);
  if (!d) throw Error("UNDEFINED_DIAGRAM", "diagram '" + name + "' is not defined");
  return *d;
}

void emit(Session& s, EventKind kind, std::string text, std::string detail = {}) {
  int step = s.transcript.empty() ? 1 : s.transcript.back().step + 1;
  s.transcript.push_back({kind, std::move(text), s.diagram + "." + s.current, step, std::move(detail)});
}

void stop(Session& s, SessionStatus status) {
  s.status = status;
  emit(s, EventKind::End, to_string(status));
}

bool has_outgoing(const StdDiagram& d, const std::string& node) {
  for (const auto& a : d.arcs)
    if (a.from == node) return true;
  return false;
}

// Moves to `node` of `diagram`, emitting its output, then unwinds exits.
void enter(Session& s, const std::string& diagram, const std::string& node) {
  s.diagram = diagram;
  s.current = node;
  for (;;) {
    const StdDiagram& d = diagram_of(s, s.diagram);
    const StdNode* n = d.find_node(s.current);
    if (!n) throw Error("UNDEFINED_TARGET", "node '" + s.current + "' is not defined in diagram '" + d.name + "'");
    emit(s, EventKind::Output, interpolate(n->output, s.bindings));

    if (d.is_exit(n->name)) {
      if (s.frame_stack.empty()) return stop(s, SessionStatus::Finished);
      Frame f = std::move(s.frame_stack.back());
      s.frame_stack.pop_back();
      s.diagram = f.diagram;
      s.current = f.return_to;
      emit(s, EventKind::Return, f.diagram);
      continue;
    }
    if (!has_outgoing(d, n->name)) return stop(s, SessionStatus::DeadEnd);
    return;
  }
}

bool guard_holds(const Session& s, const std::optional<Guard>& g) {
  if (!g) return true;
  auto it = s.bindings.find(g->var);
  const std::string& value = it == s.bindings.end() ? std::string() : it->second;
  return (value == g->value) == (g->op == GuardOp::Eq);
}

void run_action(Session& s, const std::string& name, const std::string& input) {
  const ActionDef* act = s.model->find_action(name);
  if (!act) throw Error("UNDEFINED_ACTION", "action '" + name + "' is not defined");
  emit(s, EventKind::Action, name);
  for (const auto& asg : act->assignments) {
    std::string value;
    for (const auto& term : asg.expr) {
      if (auto lit = std::get_if<TermLiteral>(&term))
        value += lit->text;
      else if (auto var = std::get_if<TermVar>(&term))
        value += s.bindings.count(var->name) ? s.bindings.at(var->name) : std::string();
      else
        value += input;
    }
    s.bindings[asg.var] = std::move(value);
  }
}

std::string strip_terminator(const std::string& line) {
  std::string out = line;
  if (!out.empty() && out.back() == '\n') out.pop_back();
  if (!out.empty() && out.back() == '\r') out.pop_back();
  return out;
}

} // namespace

Session session_start(std::shared_ptr<const DesignModel> model, const std::string& root_diagram,
                      SessionLimits limits) {
  if (has_errors(check_std(*model)))
    throw Error("MODEL_HAS_ERRORS", "model has ERROR findings; run `check` for details");
  const StdDiagram* root = model->find_diagram(root_diagram);
  if (!root) throw Error("NO_SUCH_DIAGRAM", "no diagram named '" + root_diagram + "'");

  Session s;
  s.model = std::move(model);
  s.root = root_diagram;
  s.limits = limits;
  enter(s, root->name, root->entry);
  return s;
}

Session session_start(const DesignModel& model, const std::string& root_diagram, SessionLimits limits) {
  return session_start(std::make_shared<const DesignModel>(model), root_diagram, limits);
}

void session_input(Session& s, const std::string& raw_line) {
  if (s.status != SessionStatus::Running)
    throw Error("SESSION_NOT_RUNNING", std::string("session is ") + to_string(s.status));

  const std::string line = strip_terminator(raw_line);
  const StdDiagram& d = diagram_of(s, s.diagram);

  const StdArc* chosen = nullptr;
  for (const auto& a : d.arcs) { // decl_index order
    if (a.from != s.current) continue;
    bool matches = a.pattern.is_otherwise() || *a.pattern.literal == line;
    if (matches && guard_holds(s, a.guard)) {
      chosen = &a;
      break;
    }
  }
  if (!chosen) {
    emit(s, EventKind::Input, line, "NOMATCH");
    return;
  }

  emit(s, EventKind::Input, line);
  ++s.step_count;
  if (chosen->action) run_action(s, *chosen->action, line);

  if (auto t = std::get_if<NodeTarget>(&chosen->target)) {
    enter(s, s.diagram, t->node);
  } else {
    const auto& call = std::get<CallTarget>(chosen->target);
    const StdDiagram& callee = diagram_of(s, call.diagram);
    if (static_cast<int>(s.frame_stack.size()) >= s.limits.max_depth) return stop(s, SessionStatus::LimitExceeded);
    s.frame_stack.push_back({s.diagram, call.return_to});
    emit(s, EventKind::Call, callee.name);
    enter(s, callee.name, callee.entry);
  }

  if (s.status == SessionStatus::Running && s.step_count >= s.limits.max_steps)
    stop(s, SessionStatus::LimitExceeded);
}

ScriptResult session_run_script(const DesignModel& model, const std::string& root,
                                const std::vector<std::string>& inputs, SessionLimits limits) {
  Session s = session_start(model, root, limits);
  std::size_t i = 0;
  for (; i < inputs.size() && s.status == SessionStatus::Running; ++i) session_input(s, inputs[i]);
  ScriptResult r;
  r.transcript = std::move(s.transcript);
  r.status = s.status;
  r.step_count = s.step_count;
  r.unconsumed.assign(inputs.begin() + static_cast<std::ptrdiff_t>(i), inputs.end());
  return r;
}

std::string format_transcript(const std::vector<TranscriptEvent>& events) {
  std::string out;
  auto prefixed = [&](const char* prefix, const std::string& text) {
    std::size_t start = 0;
    for (;;) {
      std::size_t nl = text.find('\n', start);
      std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      out += prefix;
      if (!line.empty()) out += " " + line;
      out += '\n';
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  };
  for (const auto& e : events) {
    switch (e.kind) {
    case EventKind::Output: prefixed("O:", e.text); break;
    case EventKind::Input:
      prefixed("I:", e.text);
      if (!e.detail.empty()) out += "! " + e.detail + "\n";
      break;
    case EventKind::Action: out += "! ACTION " + e.text + "\n"; break;
    case EventKind::Call: out += "! CALL " + e.text + "\n"; break;
    case EventKind::Return: out += "! RETURN " + e.text + "\n"; break;
    case EventKind::End: out += "! " + e.text + "\n"; break;
    }
  }
  return out;
}

std::string format_transcript(const ScriptResult& result) {
  std::string out = format_transcript(result.transcript);
  if (!result.unconsumed.empty()) out += "! UNCONSUMED " + std::to_string(result.unconsumed.size()) + "\n";
  return out;
}

} // namespace pictoforge
