#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "edgemap/core/model.hpp"
#include "edgemap/transport/clock.hpp"
#include "edgemap/transport/traffic.hpp"

namespace edgemap {

struct Capabilities {
    bool supports_arp = false;
    bool supports_raw_syn = false;
};

struct EchoResult {
    bool replied = false;
    std::optional<Micros> rtt;  // present iff replied
};

struct ConnectOptions {
    Micros timeout = std::chrono::seconds(1);
    bool banner_grab = true;
    std::size_t banner_max_bytes = 128;
};

struct ConnectResult {
    PortState state = PortState::Filtered;
    std::optional<Bytes> banner;
    Micros rtt{0};
};

/// The network primitives the probe engine is built from.
///
/// Errors are reported as edgemap::Error with CapabilityUnsupported or
/// TransportDown. An instance is driven by one task at a time; it may be
/// handed between threads but is not meant to be shared concurrently.
class ProbeTransport {
public:
    virtual ~ProbeTransport() = default;

    virtual Capabilities capabilities() const = 0;
    virtual ScanClock& clock() = 0;

    virtual EchoResult arp_probe(Ipv4Address target, Micros timeout) = 0;
    virtual EchoResult icmp_ping(Ipv4Address target, Micros timeout) = 0;

    /// Full handshake; on Open optionally reads a server-initiated banner,
    /// then resets the connection.
    virtual ConnectResult tcp_connect(Ipv4Address target, Port port, const ConnectOptions& options) = 0;

    /// Half-open probe: SYN, then RST on SYN+ACK. Never completes the handshake.
    virtual PortState tcp_syn(Ipv4Address target, Port port, Micros timeout) = 0;

    /// One connection carrying one request. Returns nullopt when the port did
    /// not accept the connection, otherwise whatever the peer answered
    /// (possibly empty).
    virtual std::optional<Bytes> tcp_exchange(Ipv4Address target, Port port,
                                              std::span<const std::uint8_t> request, Micros timeout) = 0;

    /// Packet accounting, for backends that keep it (the simulated network).
    virtual std::optional<SimCounters> traffic_counters() const { return std::nullopt; }
};

}  // namespace edgemap
