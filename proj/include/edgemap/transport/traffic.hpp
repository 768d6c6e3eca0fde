#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string_view>

#include "edgemap/core/model.hpp"

namespace edgemap {

enum class PacketClass : std::size_t {
    ArpRequest,
    ArpReply,
    IcmpRequest,
    IcmpReply,
    TcpSyn,
    TcpSynAck,
    TcpAck,
    TcpRst,
    TcpFin,
    BannerData,
};
inline constexpr std::size_t kPacketClassCount = 10;

std::string_view to_string(PacketClass c) noexcept;

/// On-wire frame sizes in bytes. Payload segments are variable: payload
/// length plus kPayloadFramingBytes.
std::uint64_t packet_class_size(PacketClass c) noexcept;
inline constexpr std::uint64_t kPayloadFramingBytes = 66;

bool is_tcp_control(PacketClass c) noexcept;
bool is_discovery_request(PacketClass c) noexcept;

struct ClassTotals {
    std::array<std::uint64_t, kPacketClassCount> count{};
    std::array<std::uint64_t, kPacketClassCount> bytes{};

    std::uint64_t count_of(PacketClass c) const { return count[static_cast<std::size_t>(c)]; }
    std::uint64_t bytes_of(PacketClass c) const { return bytes[static_cast<std::size_t>(c)]; }
    std::uint64_t tcp_control_count() const;
    std::uint64_t tcp_control_bytes() const;
    /// ARP requests plus ICMP echo requests sent by the scanner.
    std::uint64_t discovery_request_count() const;
    std::uint64_t total_count() const;
    std::uint64_t total_bytes() const;

    bool operator==(const ClassTotals&) const = default;
};

/// Packet counts and byte totals per class, cumulative and bucketed by whole
/// virtual second (floor of timestamp / 1 s).
class SimCounters {
public:
    void record(Timestamp at, PacketClass c, std::uint64_t bytes);

    const ClassTotals& cumulative() const { return cumulative_; }
    const std::map<std::int64_t, ClassTotals>& per_second() const { return per_second_; }

    bool operator==(const SimCounters&) const = default;

private:
    ClassTotals cumulative_;
    std::map<std::int64_t, ClassTotals> per_second_;
};

}  // namespace edgemap
