#pragma once

#include "edgemap/transport/transport.hpp"

namespace edgemap {

/// Real sockets. ICMP uses a raw socket when permitted and falls back to an
/// unprivileged datagram ICMP socket. SYN probes need a raw TCP socket, so
/// capabilities().supports_raw_syn reflects the process privileges. ARP is
/// not implemented: probing goes straight to ICMP echo.
class OsTransport final : public ProbeTransport {
public:
    OsTransport();

    Capabilities capabilities() const override { return caps_; }
    ScanClock& clock() override { return clock_; }

    EchoResult arp_probe(Ipv4Address target, Micros timeout) override;
    EchoResult icmp_ping(Ipv4Address target, Micros timeout) override;
    ConnectResult tcp_connect(Ipv4Address target, Port port, const ConnectOptions& options) override;
    PortState tcp_syn(Ipv4Address target, Port port, Micros timeout) override;
    std::optional<Bytes> tcp_exchange(Ipv4Address target, Port port, std::span<const std::uint8_t> request,
                                      Micros timeout) override;

private:
    SteadyScanClock clock_;
    Capabilities caps_;
    std::uint16_t echo_id_;
    std::uint16_t echo_seq_ = 0;
};

}  // namespace edgemap
