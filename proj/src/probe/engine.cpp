#include "edgemap/probe/engine.hpp"

#include <algorithm>
#include <numeric>

#include "edgemap/error.hpp"
#include "edgemap/probe/modbus.hpp"

namespace edgemap {

RttStats rtt_stats(std::span<const Micros> samples) {
    if (samples.empty()) fail(ErrorCode::EmptySamples, "rtt statistics need at least one sample");
    std::vector<Micros> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    auto sum = std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0},
                               [](std::int64_t acc, Micros m) { return acc + m.count(); });
    RttStats s;
    s.median = sorted[(sorted.size() - 1) / 2];
    s.mean = std::chrono::duration<double, std::micro>(static_cast<double>(sum) / static_cast<double>(sorted.size()));
    s.max = sorted.back();
    return s;
}

void ProbePacer::before_probe(Micros delay) {
    if (stop_.stop_requested()) fail(ErrorCode::Cancelled, "stop requested");
    if (last_initiation_) {
        auto due = *last_initiation_ + delay;
        if (clock_.now() < due && !clock_.sleep_until(due, stop_)) fail(ErrorCode::Cancelled, "stop requested");
    }
    last_initiation_ = clock_.now();
}

Discovery discover_host(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                        ProbePacer& pacer) {
    require(config.address_range.contains(target),
            target.to_string() + " is outside " + config.address_range.to_string());
    Discovery d;
    const bool use_arp = transport.capabilities().supports_arp;
    if (use_arp) {
        pacer.before_probe(config.ping_delay);
        ++d.packets_sent;
        if (!transport.arp_probe(target, config.ping_timeout).replied) return d;
    }
    for (int i = 0; i < kRttSampleCount; ++i) {
        pacer.before_probe(config.ping_delay);
        ++d.packets_sent;
        auto echo = transport.icmp_ping(target, config.ping_timeout);
        if (!echo.replied) break;
        d.rtt_samples.push_back(*echo.rtt);
    }
    if (!d.rtt_samples.empty()) d.alive = AliveState::Up;
    else if (use_arp) d.alive = AliveState::SilentUp;
    return d;
}

PortSweep scan_host_ports(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                          std::span<const Port> order, ProbePacer& pacer) {
    const bool syn = config.scan_method == ScanMethod::Syn;
    if (syn && !transport.capabilities().supports_raw_syn)
        fail(ErrorCode::CapabilityUnsupported, "SYN scanning needs raw socket access on this backend");

    PortSweep sweep;
    const ConnectOptions options{config.connect_timeout, config.banner_grab, config.banner_max_bytes};
    for (Port port : order) {
        pacer.before_probe(config.port_delay);
        PortState state;
        if (syn) {
            state = transport.tcp_syn(target, port, config.connect_timeout);
            sweep.packets_sent += state == PortState::Open ? 2 : 1;  // SYN [+ RST]
        } else {
            auto result = transport.tcp_connect(target, port, options);
            state = result.state;
            sweep.packets_sent += state == PortState::Open ? 3 : 1;  // SYN [+ ACK + RST]
            if (state == PortState::Open && result.banner) sweep.banners[port] = std::move(*result.banner);
        }
        sweep.ports[port] = state;
    }
    return sweep;
}

namespace {

// Port orders are only materialised for hosts that get port scanned.
template <class OrderFn>
HostScanOutcome scan_host_with(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                               OrderFn&& port_order, ProbePacer& pacer) {
    const auto started = transport.clock().now();
    auto discovery = discover_host(target, config, transport, pacer);
    std::uint64_t packets = discovery.packets_sent;

    const bool eligible = discovery.alive == AliveState::Up ||
                          (discovery.alive == AliveState::SilentUp && config.scan_silent_hosts);
    PortSweep sweep;
    modbus::Identification identity;
    if (eligible) {
        const std::vector<Port> order = port_order();
        sweep = scan_host_ports(target, config, transport, order, pacer);
        packets += sweep.packets_sent;
        auto modbus_port = sweep.ports.find(modbus::kDefaultPort);
        if (config.modbus_identify && modbus_port != sweep.ports.end() && modbus_port->second == PortState::Open) {
            pacer.before_probe(config.port_delay);
            packets += 4;  // SYN, ACK, request, RST
            try {
                if (auto id = modbus::identify(transport, target, modbus::kDefaultPort, config.connect_timeout))
                    identity = std::move(*id);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::MalformedResponse) throw;
            }
        }
    }
    HostRecord record(target, discovery.alive, std::move(discovery.rtt_samples), std::move(sweep.ports),
                      std::move(sweep.banners), std::move(identity));
    return {std::move(record), packets, transport.clock().now() - started};
}

}  // namespace

HostScanOutcome scan_host(Ipv4Address target, const ScanConfig& config, ProbeTransport& transport,
                          std::span<const Port> port_order, ProbePacer& pacer) {
    return scan_host_with(
        target, config, transport, [&] { return std::vector<Port>(port_order.begin(), port_order.end()); }, pacer);
}

SweepResult full_sweep(const ScanConfig& config, ProbeTransport& transport, const ScanSchedule& schedule,
                       ProbePacer& pacer) {
    config.validate();
    const auto started = transport.clock().now();
    std::map<Ipv4Address, HostRecord> hosts;
    std::uint64_t packets = 0;
    std::vector<HostFailure> failures;
    const auto& order = schedule.host_order();
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto address = order[i];
        try {
            auto outcome = scan_host_with(
                address, config, transport, [&] { return schedule.port_order(i); }, pacer);
            packets += outcome.packets_sent;
            if (outcome.record.alive() != AliveState::Down) hosts.emplace(address, std::move(outcome.record));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TransportDown) throw;
            failures.push_back({address, e.what()});
        }
    }
    if (!order.empty() && failures.size() == order.size())
        fail(ErrorCode::TransportDown, "every address failed: " + failures.front().reason);

    SweepResult result{NetworkFingerprint(config.address_range, config_digest(config), started,
                                          transport.clock().now(), std::move(hosts), false),
                       packets, order.size(), std::move(failures), transport.traffic_counters()};
    return result;
}

SweepResult full_sweep(const ScanConfig& config, ProbeTransport& transport, RandomSource& rng,
                       std::stop_token stop) {
    auto schedule = make_schedule(config, rng);
    ProbePacer pacer(transport.clock(), std::move(stop));
    return full_sweep(config, transport, schedule, pacer);
}

}  // namespace edgemap
