#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgemap/core/address.hpp"

namespace edgemap {

using Micros = std::chrono::microseconds;
/// Microseconds on the monotonic scan clock. Origin is backend defined.
using Timestamp = std::chrono::microseconds;
using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view text);
std::string to_text(const Bytes& bytes);

enum class ScanMethod { Connect, Syn };
enum class RngKind { Xoshiro256StarStar, OsEntropy };

std::string_view to_string(ScanMethod m) noexcept;
std::string_view to_string(RngKind k) noexcept;

struct ScanConfig {
    AddressRange address_range{Ipv4Address(0x7f000001), Ipv4Address(0x7f000001)};
    PortRange port_range{1, 1024};
    Micros ping_delay = std::chrono::milliseconds(100);
    Micros port_delay = std::chrono::milliseconds(100);
    Micros startup_delay_min = std::chrono::seconds(60);
    Micros startup_delay_max = std::chrono::seconds(300);
    Micros rescan_interval = std::chrono::seconds(300);
    std::optional<std::uint64_t> seed;
    bool scan_silent_hosts = false;
    bool banner_grab = true;
    std::size_t banner_max_bytes = 128;
    double rtt_anomaly_factor = 2.0;
    Micros rtt_anomaly_floor = std::chrono::milliseconds(1);
    Micros connect_timeout = std::chrono::seconds(1);
    Micros ping_timeout = std::chrono::seconds(1);
    ScanMethod scan_method = ScanMethod::Connect;
    bool modbus_identify = false;
    RngKind rng = RngKind::Xoshiro256StarStar;

    /// Throws Error(InvalidArgument) naming the first violated invariant.
    void validate() const;
};

/// Stable 64-bit digest of the fields that make two scans comparable:
/// address range, port range and banner settings. FNV-1a over a canonical
/// text rendering, so it is identical across runs and platforms.
std::uint64_t config_digest(const ScanConfig& config);

enum class PortState { Open, Closed, Filtered };
enum class AliveState { Up, Down, SilentUp };

std::string_view to_string(PortState s) noexcept;
std::string_view to_string(AliveState s) noexcept;
std::optional<PortState> parse_port_state(std::string_view text);
std::optional<AliveState> parse_alive_state(std::string_view text);

class HostRecord {
public:
    HostRecord(Ipv4Address address, AliveState alive, std::vector<Micros> rtt_samples = {},
               std::map<Port, PortState> ports = {}, std::map<Port, Bytes> banners = {},
               std::map<std::uint8_t, std::string> device_identity = {});

    Ipv4Address address() const { return address_; }
    AliveState alive() const { return alive_; }
    const std::vector<Micros>& rtt_samples() const { return rtt_samples_; }
    const std::map<Port, PortState>& ports() const { return ports_; }
    const std::map<Port, Bytes>& banners() const { return banners_; }
    /// Modbus device identification objects (object id -> value), when collected.
    const std::map<std::uint8_t, std::string>& device_identity() const { return device_identity_; }

    bool operator==(const HostRecord&) const = default;

private:
    Ipv4Address address_;
    AliveState alive_;
    std::vector<Micros> rtt_samples_;
    std::map<Port, PortState> ports_;
    std::map<Port, Bytes> banners_;
    std::map<std::uint8_t, std::string> device_identity_;
};

class NetworkFingerprint {
public:
    NetworkFingerprint(AddressRange range, std::uint64_t config_digest, Timestamp started_at,
                       Timestamp finished_at, std::map<Ipv4Address, HostRecord> hosts,
                       bool trusted = false);

    const AddressRange& address_range() const { return range_; }
    std::uint64_t config_digest() const { return digest_; }
    Timestamp started_at() const { return started_at_; }
    Timestamp finished_at() const { return finished_at_; }
    const std::map<Ipv4Address, HostRecord>& hosts() const { return hosts_; }
    bool trusted() const { return trusted_; }

    NetworkFingerprint with_trusted(bool trusted) const;

    bool operator==(const NetworkFingerprint&) const = default;

private:
    AddressRange range_;
    std::uint64_t digest_;
    Timestamp started_at_;
    Timestamp finished_at_;
    std::map<Ipv4Address, HostRecord> hosts_;
    bool trusted_;
};

enum class EventKind { HostAdded, HostRemoved, PortOpened, PortClosed, BannerChanged, LatencyAnomaly };

std::string_view to_string(EventKind k) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text);
bool kind_has_port(EventKind k) noexcept;

class IntrusionEvent {
public:
    IntrusionEvent(EventKind kind, Ipv4Address address, std::optional<Port> port,
                   std::string baseline_value, std::string observed_value, std::uint64_t scan_epoch);

    EventKind kind() const { return kind_; }
    Ipv4Address address() const { return address_; }
    std::optional<Port> port() const { return port_; }
    const std::string& baseline_value() const { return baseline_value_; }
    const std::string& observed_value() const { return observed_value_; }
    std::uint64_t scan_epoch() const { return scan_epoch_; }

    bool operator==(const IntrusionEvent&) const = default;

private:
    EventKind kind_;
    Ipv4Address address_;
    std::optional<Port> port_;
    std::string baseline_value_;
    std::string observed_value_;
    std::uint64_t scan_epoch_;
};

}  // namespace edgemap
