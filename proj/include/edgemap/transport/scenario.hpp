#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgemap/core/config_io.hpp"
#include "edgemap/transport/simnet.hpp"

namespace edgemap {

/// A simulated network description loaded from a scenario file
/// (format documented in docs/formats.md).
struct Scenario {
    std::string name;
    std::vector<SimHostSpec> hosts;
    SimScript script;
    /// ScanConfig overrides, applied on top of the operator's config file.
    std::vector<KeyValue> config;
    /// Number of monitor sweeps to run in simulation, counting the reference sweep.
    std::optional<std::uint64_t> epochs;
};

/// Throws Error(MalformedScript) with the offending line number.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace edgemap
