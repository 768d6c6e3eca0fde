#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "edgemap/baseline/diff.hpp"
#include "edgemap/baseline/store.hpp"
#include "edgemap/core/model.hpp"
#include "edgemap/sched/rng.hpp"
#include "edgemap/sink/event_sink.hpp"
#include "edgemap/transport/transport.hpp"

namespace edgemap {

struct EpochReport {
    std::uint64_t epoch = 0;
    bool reference = false;  // this sweep became the trusted baseline
    Timestamp started{0};
    Timestamp finished{0};
    std::uint64_t hosts = 0;
    std::uint64_t packets_sent = 0;
    std::vector<IntrusionEvent> events;
    std::set<ScenarioTag> tags;
    std::vector<std::string> errors;  // also emitted as operational events
};

struct MonitorReport {
    Micros startup_delay{0};
    std::vector<EpochReport> epochs;
    bool stopped = false;  // ended by the stop token rather than max_epochs
};

struct MonitorOptions {
    /// Number of sweeps before returning; unbounded when absent.
    std::optional<std::uint64_t> max_epochs;
    bool apply_startup_delay = true;
    std::function<void(const EpochReport&)> on_epoch;
};

/// The periodic loop: wait the startup delay, learn and persist a trusted
/// baseline if the store has none, then sweep every rescan_interval (measured
/// start to start), diff against the trusted baseline, emit events and save
/// the sweep as the latest fingerprint. Store and transport failures become
/// operational events and the loop carries on with the next epoch. Returns
/// when the stop token fires or after max_epochs sweeps.
MonitorReport run_monitor(const ScanConfig& config, ProbeTransport& transport, FingerprintStore& store,
                          EventSink& sink, RandomSource& rng, std::stop_token stop, MonitorOptions options = {});

}  // namespace edgemap
