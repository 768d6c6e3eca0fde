#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "edgemap/sched/rng.hpp"
#include "edgemap/transport/transport.hpp"

namespace edgemap {

using MacAddress = std::array<std::uint8_t, 6>;

struct SimHostSpec {
    Ipv4Address address;
    MacAddress mac{0x02, 0, 0, 0, 0, 0};
    bool arp_enabled = true;
    bool icmp_echo_enabled = true;
    std::map<Port, std::optional<Bytes>> open_ports;  // port -> server-initiated banner
    std::set<Port> filtered_ports;
    Micros base_rtt{500};
    Micros rtt_jitter{0};  // uniform in [0, rtt_jitter]
    /// Identification objects served on the Modbus port; empty means no Modbus service.
    std::map<std::uint8_t, std::string> modbus_objects;

    void validate() const;
};

namespace sim {
struct AddHost { Timestamp at; SimHostSpec spec; };
struct RemoveHost { Timestamp at; Ipv4Address address; };
struct OpenPort { Timestamp at; Ipv4Address address; Port port; std::optional<Bytes> banner; };
struct ClosePort { Timestamp at; Ipv4Address address; Port port; };
struct SetLatencyFactor { Timestamp at; Ipv4Address address; double factor; };
struct SetIcmpEcho { Timestamp at; Ipv4Address address; bool enabled; };
struct SetArp { Timestamp at; Ipv4Address address; bool enabled; };
/// Takes the whole simulated link down or up; probes fail with TransportDown while down.
struct SetLink { Timestamp at; bool up; };
}  // namespace sim

using SimAction = std::variant<sim::AddHost, sim::RemoveHost, sim::OpenPort, sim::ClosePort,
                               sim::SetLatencyFactor, sim::SetIcmpEcho, sim::SetArp, sim::SetLink>;

Timestamp action_time(const SimAction& action);

/// Ordered timed actions. Construction checks that times never decrease;
/// validate() replays the script against an initial host set and checks that
/// every action refers to a host that exists when it fires.
class SimScript {
public:
    SimScript() = default;
    explicit SimScript(std::vector<SimAction> actions);

    const std::vector<SimAction>& actions() const { return actions_; }
    bool empty() const { return actions_.empty(); }

    void validate(const std::vector<SimHostSpec>& initial_hosts) const;

private:
    std::vector<SimAction> actions_;
};

enum class Direction { ToTarget, FromTarget };

struct PacketRecord {
    Timestamp at;
    PacketClass cls;
    Direction direction;
    Ipv4Address peer;
    Port port = 0;  // 0 for ARP/ICMP
    std::uint64_t bytes = 0;
    std::uint64_t probe_id = 0;  // packets of one transport call share an id

    bool operator==(const PacketRecord&) const = default;
};

/// Deterministic in-process network. Time is virtual: waiting for a reply
/// or a timeout advances the clock instead of sleeping. RTT of a reply is
/// base_rtt * latency_factor + uniform jitter drawn from a seeded generator.
class SimNetwork final : public ProbeTransport {
public:
    SimNetwork(std::vector<SimHostSpec> hosts, SimScript script, std::uint64_t seed, bool record_trace = false);

    Capabilities capabilities() const override { return {true, true}; }
    ScanClock& clock() override { return clock_; }
    VirtualClock& virtual_clock() { return clock_; }

    EchoResult arp_probe(Ipv4Address target, Micros timeout) override;
    EchoResult icmp_ping(Ipv4Address target, Micros timeout) override;
    ConnectResult tcp_connect(Ipv4Address target, Port port, const ConnectOptions& options) override;
    PortState tcp_syn(Ipv4Address target, Port port, Micros timeout) override;
    std::optional<Bytes> tcp_exchange(Ipv4Address target, Port port, std::span<const std::uint8_t> request,
                                      Micros timeout) override;

    /// Applies every pending action with time <= until and sets the clock to
    /// until. Returns the number of actions applied.
    std::size_t advance(Timestamp until);

    SimCounters counters() const;
    std::optional<SimCounters> traffic_counters() const override { return counters(); }
    std::vector<PacketRecord> trace() const;
    std::optional<SimHostSpec> host(Ipv4Address address) const;
    double latency_factor(Ipv4Address address) const;

private:
    struct HostState {
        SimHostSpec spec;
        double latency_factor = 1.0;
    };

    void apply_pending(Timestamp now);
    void apply(const SimAction& action);
    HostState* find(Ipv4Address address);
    void ensure_link(Ipv4Address target);
    Micros draw_rtt(const HostState& host);
    void emit(Timestamp at, PacketClass cls, Direction dir, Ipv4Address peer, Port port, std::uint64_t bytes);
    std::uint64_t begin_probe();
    std::optional<Bytes> application_reply(const HostState& host, Port port, std::span<const std::uint8_t> request);

    VirtualClock clock_;
    std::map<Ipv4Address, HostState> hosts_;
    SimScript script_;
    std::size_t next_action_ = 0;
    bool link_up_ = true;
    Xoshiro256StarStar jitter_rng_;
    bool record_trace_;
    std::uint64_t probe_counter_ = 0;

    mutable std::mutex stats_mutex_;
    SimCounters counters_;
    std::vector<PacketRecord> trace_;
};

}  // namespace edgemap
