#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgemap/core/model.hpp"

namespace edgemap {

/// "500us", "100ms", "1s", "5m", "1h". A unit is mandatory.
Micros parse_duration(std::string_view text);
/// Inverse of parse_duration using the largest unit that represents the value exactly.
std::string format_duration(Micros d);

bool parse_bool(std::string_view text);

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

/// Flat "key = value" text; '#' starts a comment, blank lines are skipped.
std::vector<KeyValue> parse_key_values(std::string_view text);

/// Applies one ScanConfig field by its field name. Returns false for keys
/// that are not ScanConfig fields; throws Error(InvalidArgument) on bad values.
bool apply_scan_setting(ScanConfig& config, std::string_view key, std::string_view value);

}  // namespace edgemap
