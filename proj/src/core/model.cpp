#include "edgemap/core/model.hpp"

#include <array>

#include "edgemap/error.hpp"

namespace edgemap {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::CapabilityUnsupported: return "CapabilityUnsupported";
        case ErrorCode::TransportDown: return "TransportDown";
        case ErrorCode::MalformedScript: return "MalformedScript";
        case ErrorCode::MalformedResponse: return "MalformedResponse";
        case ErrorCode::EmptySamples: return "EmptySamples";
        case ErrorCode::IncomparableFingerprints: return "IncomparableFingerprints";
        case ErrorCode::UntrustedBaseline: return "UntrustedBaseline";
        case ErrorCode::TrustedAlreadyExists: return "TrustedAlreadyExists";
        case ErrorCode::CorruptRecord: return "CorruptRecord";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::Cancelled: return "Cancelled";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_text(const Bytes& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::string_view to_string(ScanMethod m) noexcept { return m == ScanMethod::Connect ? "connect" : "syn"; }

std::string_view to_string(RngKind k) noexcept {
    return k == RngKind::Xoshiro256StarStar ? "xoshiro256ss" : "os-entropy";
}

void ScanConfig::validate() const {
    // AddressRange and PortRange enforce their own bounds on construction.
    require(startup_delay_min <= startup_delay_max, "startup_delay_min exceeds startup_delay_max");
    require(ping_delay > Micros::zero(), "ping_delay must be positive");
    require(port_delay > Micros::zero(), "port_delay must be positive");
    require(startup_delay_min > Micros::zero(), "startup_delay_min must be positive");
    require(rescan_interval > Micros::zero(), "rescan_interval must be positive");
    require(connect_timeout > Micros::zero(), "connect_timeout must be positive");
    require(ping_timeout > Micros::zero(), "ping_timeout must be positive");
    require(rtt_anomaly_floor > Micros::zero(), "rtt_anomaly_floor must be positive");
    require(rtt_anomaly_factor >= 1.0, "rtt_anomaly_factor must be >= 1.0");
    require(banner_max_bytes > 0, "banner_max_bytes must be positive");
    require(!(seed && rng == RngKind::OsEntropy), "a fixed seed cannot be combined with the os-entropy generator");
}

std::uint64_t config_digest(const ScanConfig& config) {
    std::string canonical = "range=" + config.address_range.to_string() +
                            ";ports=" + config.port_range.to_string() +
                            ";banner_grab=" + (config.banner_grab ? "1" : "0") +
                            ";banner_max_bytes=" + std::to_string(config.banner_max_bytes);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string_view to_string(PortState s) noexcept {
    switch (s) {
        case PortState::Open: return "open";
        case PortState::Closed: return "closed";
        case PortState::Filtered: return "filtered";
    }
    return "?";
}

std::string_view to_string(AliveState s) noexcept {
    switch (s) {
        case AliveState::Up: return "up";
        case AliveState::Down: return "down";
        case AliveState::SilentUp: return "silent-up";
    }
    return "?";
}

std::optional<PortState> parse_port_state(std::string_view text) {
    for (auto s : {PortState::Open, PortState::Closed, PortState::Filtered})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

std::optional<AliveState> parse_alive_state(std::string_view text) {
    for (auto s : {AliveState::Up, AliveState::Down, AliveState::SilentUp})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

HostRecord::HostRecord(Ipv4Address address, AliveState alive, std::vector<Micros> rtt_samples,
                       std::map<Port, PortState> ports, std::map<Port, Bytes> banners,
                       std::map<std::uint8_t, std::string> device_identity)
    : address_(address),
      alive_(alive),
      rtt_samples_(std::move(rtt_samples)),
      ports_(std::move(ports)),
      banners_(std::move(banners)),
      device_identity_(std::move(device_identity)) {
    const auto where = " (host " + address.to_string() + ")";
    require(rtt_samples_.empty() == (alive_ != AliveState::Up),
            "rtt samples must be present exactly when the host is up" + where);
    for (auto rtt : rtt_samples_) require(rtt >= Micros::zero(), "negative rtt sample" + where);
    require(ports_.empty() || alive_ != AliveState::Down, "a down host cannot have port states" + where);
    require(ports_.find(0) == ports_.end(), "port 0 is not a valid TCP port" + where);
    for (const auto& [port, banner] : banners_) {
        auto it = ports_.find(port);
        require(it != ports_.end() && it->second == PortState::Open,
                "banner recorded for port " + std::to_string(port) + " which is not open" + where);
    }
    require(device_identity_.empty() || alive_ != AliveState::Down,
            "a down host cannot carry a device identity" + where);
}

NetworkFingerprint::NetworkFingerprint(AddressRange range, std::uint64_t config_digest,
                                       Timestamp started_at, Timestamp finished_at,
                                       std::map<Ipv4Address, HostRecord> hosts, bool trusted)
    : range_(range),
      digest_(config_digest),
      started_at_(started_at),
      finished_at_(finished_at),
      hosts_(std::move(hosts)),
      trusted_(trusted) {
    require(finished_at_ >= started_at_, "fingerprint finished before it started");
    for (const auto& [address, record] : hosts_) {
        require(address == record.address(), "host map key does not match record address");
        require(range_.contains(address),
                "host " + address.to_string() + " lies outside " + range_.to_string());
    }
}

NetworkFingerprint NetworkFingerprint::with_trusted(bool trusted) const {
    NetworkFingerprint copy = *this;
    copy.trusted_ = trusted;
    return copy;
}

namespace {
constexpr std::array kAllKinds = {EventKind::HostAdded,  EventKind::HostRemoved,   EventKind::PortOpened,
                                  EventKind::PortClosed, EventKind::BannerChanged, EventKind::LatencyAnomaly};
}

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::HostAdded: return "HostAdded";
        case EventKind::HostRemoved: return "HostRemoved";
        case EventKind::PortOpened: return "PortOpened";
        case EventKind::PortClosed: return "PortClosed";
        case EventKind::BannerChanged: return "BannerChanged";
        case EventKind::LatencyAnomaly: return "LatencyAnomaly";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    for (auto k : kAllKinds)
        if (to_string(k) == text) return k;
    return std::nullopt;
}

bool kind_has_port(EventKind k) noexcept {
    return k == EventKind::PortOpened || k == EventKind::PortClosed || k == EventKind::BannerChanged;
}

IntrusionEvent::IntrusionEvent(EventKind kind, Ipv4Address address, std::optional<Port> port,
                               std::string baseline_value, std::string observed_value,
                               std::uint64_t scan_epoch)
    : kind_(kind),
      address_(address),
      port_(port),
      baseline_value_(std::move(baseline_value)),
      observed_value_(std::move(observed_value)),
      scan_epoch_(scan_epoch) {
    if (kind_has_port(kind)) {
        require(port.has_value() && *port != 0, std::string(to_string(kind)) + " requires a port");
    } else {
        require(!port.has_value(), std::string(to_string(kind)) + " must not carry a port");
    }
}

}  // namespace edgemap
