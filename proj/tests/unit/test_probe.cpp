#include <doctest.h>

#include <functional>

#include "edgemap/error.hpp"
#include "edgemap/probe/engine.hpp"
#include "edgemap/transport/simnet.hpp"

using namespace edgemap;
using namespace std::chrono_literals;

namespace {

Ipv4Address ip(const char* s) { return Ipv4Address::from_string(s); }

SimHostSpec host(const char* addr, std::initializer_list<Port> open = {}) {
    SimHostSpec h;
    h.address = ip(addr);
    for (Port p : open) h.open_ports[p];
    return h;
}

ScanConfig config_for(const char* first, const char* last, PortRange ports = {1, 16}) {
    ScanConfig c;
    c.address_range = AddressRange(ip(first), ip(last));
    c.port_range = ports;
    c.ping_delay = 10ms;
    c.port_delay = 5ms;
    c.seed = 1;
    return c;
}

std::vector<Port> all_ports(PortRange r) {
    std::vector<Port> v;
    for (std::uint32_t p = r.low(); p <= r.high(); ++p) v.push_back(static_cast<Port>(p));
    return v;
}

// Forwards to an inner transport, optionally hiding capabilities or failing
// for chosen addresses.
class Wrapper final : public ProbeTransport {
public:
    explicit Wrapper(ProbeTransport& inner) : inner_(inner) {}

    Capabilities caps_override{true, true};
    std::function<bool(Ipv4Address)> broken = [](Ipv4Address) { return false; };
    std::uint64_t calls = 0;

    Capabilities capabilities() const override { return caps_override; }
    ScanClock& clock() override { return inner_.clock(); }
    EchoResult arp_probe(Ipv4Address t, Micros to) override { return check(t), inner_.arp_probe(t, to); }
    EchoResult icmp_ping(Ipv4Address t, Micros to) override { return check(t), inner_.icmp_ping(t, to); }
    ConnectResult tcp_connect(Ipv4Address t, Port p, const ConnectOptions& o) override {
        return check(t), inner_.tcp_connect(t, p, o);
    }
    PortState tcp_syn(Ipv4Address t, Port p, Micros to) override { return check(t), inner_.tcp_syn(t, p, to); }
    std::optional<Bytes> tcp_exchange(Ipv4Address t, Port p, std::span<const std::uint8_t> r, Micros to) override {
        return check(t), inner_.tcp_exchange(t, p, r, to);
    }

private:
    void check(Ipv4Address t) {
        ++calls;
        if (broken(t)) fail(ErrorCode::TransportDown, "no route to " + t.to_string());
    }
    ProbeTransport& inner_;
};

}  // namespace

TEST_CASE("rtt statistics") {
    std::vector<Micros> s{900us, 400us, 500us};
    auto r = rtt_stats(s);
    CHECK(r.median == 500us);
    CHECK(r.mean.count() == doctest::Approx(600.0));
    CHECK(r.max == 900us);

    std::vector<Micros> even{400us, 800us, 100us, 600us};
    CHECK(rtt_stats(even).median == 400us);

    std::vector<Micros> none;
    try {
        rtt_stats(none);
        FAIL("empty samples accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySamples);
    }
}

TEST_CASE("every probe initiation respects its delay, across sweeps") {
    auto h = host("10.0.0.2", {3, 7});
    h.base_rtt = 3ms;
    SimNetwork net({h, host("10.0.0.3", {1})}, {}, 1, true);
    auto cfg = config_for("10.0.0.1", "10.0.0.4");
    Xoshiro256StarStar rng(3);
    ProbePacer pacer(net.clock(), {});
    for (int sweep = 0; sweep < 2; ++sweep) full_sweep(cfg, net, make_schedule(cfg, rng, sweep), pacer);

    std::optional<Timestamp> prev;
    std::uint64_t last_id = 0, initiations = 0;
    for (const auto& p : net.trace()) {
        if (p.probe_id == last_id) continue;
        last_id = p.probe_id;
        REQUIRE(p.direction == Direction::ToTarget);
        const bool discovery = p.cls == PacketClass::ArpRequest || p.cls == PacketClass::IcmpRequest;
        if (prev) CHECK(p.at - *prev >= (discovery ? cfg.ping_delay : cfg.port_delay));
        prev = p.at;
        ++initiations;
    }
    CHECK(initiations > 40);
}

TEST_CASE("pacer honours stop") {
    VirtualClock clock;
    std::stop_source stop;
    ProbePacer pacer(clock, stop.get_token());
    pacer.before_probe(1s);
    stop.request_stop();
    CHECK_THROWS_AS(pacer.before_probe(1s), Error);
}

TEST_CASE("discovery outcome per responder") {
    struct Row {
        bool arp, icmp, backend_arp;
        AliveState expected;
    };
    const Row rows[] = {
        {true, true, true, AliveState::Up},     {true, false, true, AliveState::SilentUp},
        {false, true, true, AliveState::Down},  {false, false, true, AliveState::Down},
        {true, true, false, AliveState::Up},    {true, false, false, AliveState::Down},
        {false, true, false, AliveState::Up},   {false, false, false, AliveState::Down},
    };
    for (const auto& row : rows) {
        auto h = host("10.0.0.1");
        h.arp_enabled = row.arp;
        h.icmp_echo_enabled = row.icmp;
        SimNetwork net({h}, {}, 1);
        Wrapper w(net);
        w.caps_override = {row.backend_arp, true};
        ProbePacer pacer(net.clock(), {});
        auto d = discover_host(h.address, config_for("10.0.0.1", "10.0.0.1"), w, pacer);
        CAPTURE(row.arp);
        CAPTURE(row.icmp);
        CAPTURE(row.backend_arp);
        CHECK(d.alive == row.expected);
        CHECK(d.rtt_samples.size() == (row.expected == AliveState::Up ? 3u : 0u));
    }
}

TEST_CASE("port sweep over 1-1024") {
    for (auto method : {ScanMethod::Connect, ScanMethod::Syn}) {
        SimNetwork net({host("10.0.0.1", {502}), host("10.0.0.2", {8080})}, {}, 1);
        auto cfg = config_for("10.0.0.1", "10.0.0.2", {1, 1024});
        cfg.scan_method = method;
        const auto order = all_ports(cfg.port_range);
        ProbePacer pacer(net.clock(), {});

        auto a = scan_host_ports(ip("10.0.0.1"), cfg, net, order, pacer);
        CHECK(a.ports.size() == 1024);
        CHECK(std::count_if(a.ports.begin(), a.ports.end(),
                            [](auto& kv) { return kv.second == PortState::Closed; }) == 1023);
        CHECK(a.ports.at(502) == PortState::Open);

        auto b = scan_host_ports(ip("10.0.0.2"), cfg, net, order, pacer);
        CHECK(std::all_of(b.ports.begin(), b.ports.end(), [](auto& kv) { return kv.second == PortState::Closed; }));
        CHECK(b.packets_sent == 1024);
    }
}

TEST_CASE("syn scan without raw sockets sends nothing") {
    SimNetwork net({host("10.0.0.1", {22})}, {}, 1);
    Wrapper w(net);
    w.caps_override = {true, false};
    auto cfg = config_for("10.0.0.1", "10.0.0.1");
    cfg.scan_method = ScanMethod::Syn;
    ProbePacer pacer(net.clock(), {});
    try {
        scan_host_ports(ip("10.0.0.1"), cfg, w, all_ports(cfg.port_range), pacer);
        FAIL("expected CapabilityUnsupported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CapabilityUnsupported);
    }
    CHECK(w.calls == 0);
    CHECK(net.counters().cumulative().total_count() == 0);
}

TEST_CASE("a full sweep records every live host with every port") {
    SimNetwork net({host("10.0.0.1", {22}), host("10.0.0.2"), host("10.0.0.4", {1, 16})}, {}, 1);
    auto cfg = config_for("10.0.0.1", "10.0.0.8");
    Xoshiro256StarStar rng(9);
    auto r = full_sweep(cfg, net, rng);
    CHECK(r.addresses_probed == 8);
    CHECK_FALSE(r.fingerprint.trusted());
    REQUIRE(r.fingerprint.hosts().size() == 3);
    for (const auto& [addr, rec] : r.fingerprint.hosts()) {
        CHECK(rec.alive() == AliveState::Up);
        CHECK(rec.ports().size() == 16);
        CHECK(rec.rtt_samples().size() == 3);
    }
    CHECK(r.fingerprint.hosts().at(ip("10.0.0.4")).ports().at(16) == PortState::Open);
    REQUIRE(r.counters.has_value());
    CHECK(r.counters->cumulative().discovery_request_count() > 0);
}

TEST_CASE("silent hosts are only port scanned on request") {
    auto h = host("10.0.0.1", {5});
    h.icmp_echo_enabled = false;
    for (bool scan_silent : {false, true}) {
        SimNetwork net({h}, {}, 1);
        auto cfg = config_for("10.0.0.1", "10.0.0.1");
        cfg.scan_silent_hosts = scan_silent;
        ProbePacer pacer(net.clock(), {});
        auto ports = all_ports(cfg.port_range);
        auto out = scan_host(h.address, cfg, net, ports, pacer);
        CHECK(out.record.alive() == AliveState::SilentUp);
        // ARP + one unanswered echo; then 16 ports (one open: SYN, ACK, RST).
        CHECK(out.packets_sent == (scan_silent ? 2u + 15u + 3u : 2u));
        CHECK(out.record.ports().size() == (scan_silent ? 16u : 0u));
    }
}

TEST_CASE("a host added mid-run shows up in the next sweep") {
    std::vector<SimHostSpec> hosts{host("10.0.0.1", {80}), host("10.0.0.2"), host("10.0.0.3"), host("10.0.0.4")};
    SimScript script({sim::AddHost{100s, host("10.0.0.5", {13})}});
    SimNetwork net(hosts, script, 1);
    auto cfg = config_for("10.0.0.1", "10.0.0.16");
    Xoshiro256StarStar rng(1);
    CHECK(full_sweep(cfg, net, rng).fingerprint.hosts().size() == 4);
    net.advance(100s);
    auto second = full_sweep(cfg, net, rng).fingerprint;
    CHECK(second.hosts().size() == 5);
    CHECK(second.hosts().at(ip("10.0.0.5")).ports().at(13) == PortState::Open);
}

TEST_CASE("an empty network yields an empty fingerprint") {
    SimNetwork net({}, {}, 1);
    auto cfg = config_for("10.0.0.1", "10.0.0.8");
    Xoshiro256StarStar rng(1);
    auto r = full_sweep(cfg, net, rng);
    CHECK(r.fingerprint.hosts().empty());
    CHECK(r.failures.empty());
    CHECK(r.counters->cumulative().total_count() == 8);  // one unanswered ARP each
}

TEST_CASE("a single host failure is contained, total failure propagates") {
    SimNetwork net({host("10.0.0.1", {22}), host("10.0.0.2", {22})}, {}, 1);
    Wrapper w(net);
    w.broken = [](Ipv4Address a) { return a == ip("10.0.0.2"); };
    auto cfg = config_for("10.0.0.1", "10.0.0.4");
    Xoshiro256StarStar rng(1);
    auto r = full_sweep(cfg, w, rng);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].address == ip("10.0.0.2"));
    CHECK(r.fingerprint.hosts().size() == 1);
    CHECK(r.fingerprint.hosts().count(ip("10.0.0.1")) == 1);

    w.broken = [](Ipv4Address) { return true; };
    try {
        full_sweep(cfg, w, rng);
        FAIL("expected TransportDown");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TransportDown);
    }
}

TEST_CASE("sweeps are reproducible for a fixed seed") {
    auto make = [] {
        auto h = host("10.0.0.3", {2, 9});
        h.rtt_jitter = 300us;
        h.open_ports[9] = to_bytes("hello");
        return SimNetwork({h, host("10.0.0.6", {4})}, {}, 5, true);
    };
    auto cfg = config_for("10.0.0.1", "10.0.0.8");
    auto n1 = make(), n2 = make();
    Xoshiro256StarStar r1(77), r2(77);
    auto a = full_sweep(cfg, n1, r1), b = full_sweep(cfg, n2, r2);
    CHECK(a.fingerprint == b.fingerprint);
    CHECK(n1.trace() == n2.trace());
}
