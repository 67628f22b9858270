#pragma once

#include <optional>
#include <string>

#include "pictoforge/repository.hpp"

namespace pictoforge::detail {

/// Field text as stored in .recs files and hashed for digests.
std::string encode_field(const FieldValue& v);
std::optional<FieldValue> decode_field(const std::string& s, FieldType type);

} // namespace pictoforge::detail
