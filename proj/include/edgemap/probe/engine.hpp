#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "edgemap/core/model.hpp"
#include "edgemap/sched/schedule.hpp"
#include "edgemap/transport/transport.hpp"

namespace edgemap {

/// Echo samples collected per responsive host.
inline constexpr int kRttSampleCount = 3;

struct RttStats {
    Micros median;  // lower middle for even counts
    std::chrono::duration<double, std::micro> mean;
    Micros max;
};

/// Throws Error(EmptySamples) on an empty input.
RttStats rtt_stats(std::span<const Micros> samples);

/// Keeps probe initiations at least a given delay apart on the scan clock and
/// checks the stop token before every probe. One pacer spans consecutive
/// sweeps so gaps hold across sweep boundaries too.
class ProbePacer {
public:
    ProbePacer(ScanClock& clock, std::stop_token stop) : clock_(clock), stop_(std::move(stop)) {}

    /// Sleeps until `delay` has passed since the previous initiation, then
    /// marks now as the new one. Throws Error(Cancelled) on stop.
    void before_probe(Micros delay);

    bool stop_requested() const { return stop_.stop_requested(); }
    std::stop_token stop_token() const { return stop_; }
    ScanClock& clock() { return clock_; }

private:
    ScanClock& clock_;
    std::stop_token stop_;
    std::optional<Timestamp> last_initiation_;
};

struct Discovery {
    AliveState alive = AliveState::Down;
    std::vector<Micros> rtt_samples;
    std::uint64_t packets_sent = 0;
};

/// ARP first when the backend can; an ARP reply is followed by echo requests.
/// Up = echo answered, SilentUp = ARP only, Down = neither. Without ARP the
/// echo alone decides Up or Down.
Discovery discover_host(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                        ProbePacer& pacer);

struct PortSweep {
    std::map<Port, PortState> ports;
    std::map<Port, Bytes> banners;
    std::uint64_t packets_sent = 0;
};

/// Probes every port of `order` once, in order. Throws
/// Error(CapabilityUnsupported) before sending anything when SYN scanning is
/// configured but the backend lacks raw sockets.
PortSweep scan_host_ports(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                          std::span<const Port> order, ProbePacer& pacer);

struct HostScanOutcome {
    HostRecord record;
    std::uint64_t packets_sent = 0;
    Micros elapsed{0};
};

/// Discovery plus, for eligible hosts, the port sweep and optional Modbus
/// identification.
HostScanOutcome scan_host(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                          std::span<const Port> port_order, ProbePacer& pacer);

struct HostFailure {
    Ipv4Address address;
    std::string reason;
};

struct SweepResult {
    NetworkFingerprint fingerprint;
    std::uint64_t packets_sent = 0;
    std::uint64_t addresses_probed = 0;
    std::vector<HostFailure> failures;
    std::optional<SimCounters> counters;
};

/// One pass over the address range in schedule order. The result is never
/// trusted; the caller decides that. A transport failure on a single host
/// marks it Down and the sweep continues; if every address fails with
/// TransportDown the error propagates.
SweepResult full_sweep(const ScanConfig& config, ProbeTransport& transport, const ScanSchedule& schedule,
                       ProbePacer& pacer);

/// Convenience overload that draws a fresh schedule from `rng`.
SweepResult full_sweep(const ScanConfig& config, ProbeTransport& transport, RandomSource& rng,
                       std::stop_token stop = {});

}  // namespace edgemap
