#pragma once

#include "json.hpp"
#include "pictoforge/bus.hpp"
#include "pictoforge/checker.hpp"
#include "pictoforge/prototyper.hpp"
#include "pictoforge/stdl.hpp"

namespace pictoforge {

nlohmann::json to_json(const SourceSpan& s);
nlohmann::json to_json(const Finding& f);
/// {"findings": [...], "error_count": n, "warning_count": n}
nlohmann::json findings_json(const std::vector<Finding>& findings);
nlohmann::json to_json(const ParseError& e);
nlohmann::json to_json(const TranscriptEvent& e);
nlohmann::json events_json(const std::vector<TranscriptEvent>& events, std::size_t from = 0);
nlohmann::json to_json(const Event& e);

/// Rebuilds a transcript event from its JSON form (used by clients and tests).
TranscriptEvent transcript_event_from_json(const nlohmann::json& j);

} // namespace pictoforge
