#pragma once

#include "mmskit/mms.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace mmskit {

/// JSON document form of an MMS (keys `meta`, `submodels`, `mappers`,
/// `conduits`). Output is canonical: equal structures dump to equal text.
nlohmann::json serialize_mms(const Mms& mms);
std::string dump_mms(const Mms& mms);

/// Throws ParseError naming the first malformed field.
Mms parse_mms(const nlohmann::json& doc);
/// Also reports JSON syntax errors with their line and column.
Mms parse_mms_text(const std::string& text);

} // namespace mmskit
