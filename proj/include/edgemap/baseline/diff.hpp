#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "edgemap/core/model.hpp"

namespace edgemap {

/// Deviations of `current` from the trusted `baseline`, ordered by
/// (address, kind, port). A host counts as present when it is not Down.
/// Ports are compared only where both scans probed them. Latency is flagged
/// when the current median exceeds baseline median * rtt_anomaly_factor and
/// the difference exceeds rtt_anomaly_floor, both strictly.
///
/// Throws UntrustedBaseline or IncomparableFingerprints (digest mismatch).
std::vector<IntrusionEvent> diff(const NetworkFingerprint& baseline, const NetworkFingerprint& current,
                                 const ScanConfig& config, std::uint64_t epoch = 0);

enum class ScenarioTag { NodeRemoved, ServiceChanged, NewDevice, MitmSuspected, None };

std::string_view to_string(ScenarioTag tag) noexcept;
std::optional<ScenarioTag> parse_scenario_tag(std::string_view text);

/// Advisory tags for one epoch's events; {None} when there are no events.
std::set<ScenarioTag> classify_scenario(const std::vector<IntrusionEvent>& events);

}  // namespace edgemap
