#include "pictoforge/json_io.hpp"

#include "pictoforge/error.hpp"

namespace pictoforge {

using nlohmann::json;

json to_json(const SourceSpan& s) { return {{"file", s.file}, {"line", s.line}, {"col", s.col}}; }

json to_json(const Finding& f) {
  json j = {
      {"code", f.code},
      {"severity", to_string(f.severity)},
      {"subject", {{"kind", f.subject.kind}, {"name", f.subject.name}}},
      {"detail", f.detail},
      {"scope", {{"kind", f.scope.kind}, {"name", f.scope.name}}},
      {"line", format_finding(f)},
  };
  j["span"] = f.span ? to_json(*f.span) : json(nullptr);
  return j;
}

json findings_json(const std::vector<Finding>& findings) {
  json list = json::array();
  int errors = 0;
  for (const auto& f : findings) {
    list.push_back(to_json(f));
    errors += f.severity == Severity::Error;
  }
  return {{"findings", std::move(list)},
          {"error_count", errors},
          {"warning_count", static_cast<int>(findings.size()) - errors}};
}

json to_json(const ParseError& e) {
  return {{"code", to_string(e.code)}, {"span", to_json(e.span)}, {"message", e.message}, {"line", format_error(e)}};
}

json to_json(const TranscriptEvent& e) {
  json j = {{"kind", to_string(e.kind)}, {"text", e.text}, {"node", e.node}, {"step", e.step}};
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

json events_json(const std::vector<TranscriptEvent>& events, std::size_t from) {
  json out = json::array();
  for (std::size_t i = from; i < events.size(); ++i) out.push_back(to_json(events[i]));
  return out;
}

json to_json(const Event& e) {
  return {{"seq", e.seq},
          {"kind", to_string(e.kind)},
          {"subject", e.subject},
          {"revision", e.revision ? json(*e.revision) : json(nullptr)},
          {"timestamp", e.timestamp},
          {"payload", e.payload}};
}

TranscriptEvent transcript_event_from_json(const json& j) {
  static const std::pair<const char*, EventKind> kinds[] = {
      {"OUTPUT", EventKind::Output}, {"INPUT", EventKind::Input},   {"ACTION", EventKind::Action},
      {"CALL", EventKind::Call},     {"RETURN", EventKind::Return}, {"END", EventKind::End},
  };
  TranscriptEvent e{};
  std::string kind = j.at("kind").get<std::string>();
  bool found = false;
  for (const auto& [name, k] : kinds)
    if (kind == name) e.kind = k, found = true;
  if (!found) throw Error("MALFORMED_DOC", "unknown transcript event kind " + kind);
  e.text = j.at("text").get<std::string>();
  e.node = j.value("node", std::string());
  e.step = j.value("step", 0);
  e.detail = j.value("detail", std::string());
  return e;
}

} // namespace pictoforge
