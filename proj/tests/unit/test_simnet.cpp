#include <doctest.h>

#include "edgemap/error.hpp"
#include "edgemap/probe/modbus.hpp"
#include "edgemap/transport/scenario.hpp"
#include "edgemap/transport/simnet.hpp"

using namespace edgemap;
using namespace std::chrono_literals;

namespace {

const auto kHost = Ipv4Address::from_string("10.0.0.1");
const auto kGhost = Ipv4Address::from_string("10.0.0.99");

SimHostSpec plc() {
    SimHostSpec h;
    h.address = kHost;
    h.base_rtt = 500us;
    h.open_ports[22] = to_bytes("SSH-2.0-test");
    h.open_ports[80];  // no banner
    h.filtered_ports.insert(8080);
    return h;
}

std::vector<std::pair<PacketClass, Direction>> shape(const std::vector<PacketRecord>& trace) {
    std::vector<std::pair<PacketClass, Direction>> out;
    for (const auto& p : trace) out.emplace_back(p.cls, p.direction);
    return out;
}

constexpr auto Out = Direction::ToTarget;
constexpr auto In = Direction::FromTarget;

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an edgemap::Error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("echo probes reply after the base rtt and advance virtual time") {
    SimNetwork net({plc()}, {}, 1, true);
    auto arp = net.arp_probe(kHost, 1s);
    CHECK(arp.replied);
    CHECK(arp.rtt == 500us);
    CHECK(net.clock().now() == 500us);
    auto echo = net.icmp_ping(kHost, 1s);
    CHECK(echo.rtt == 500us);
    auto miss = net.icmp_ping(kGhost, 1s);
    CHECK_FALSE(miss.replied);
    CHECK(net.clock().now() == 1000us + 1s);
    CHECK(shape(net.trace()) == std::vector<std::pair<PacketClass, Direction>>{
                                    {PacketClass::ArpRequest, Out},
                                    {PacketClass::ArpReply, In},
                                    {PacketClass::IcmpRequest, Out},
                                    {PacketClass::IcmpReply, In},
                                    {PacketClass::IcmpRequest, Out}});
}

TEST_CASE("stealth flags silence ARP and ICMP") {
    auto h = plc();
    h.icmp_echo_enabled = false;
    SimNetwork net({h}, {}, 1);
    CHECK(net.arp_probe(kHost, 1s).replied);
    CHECK_FALSE(net.icmp_ping(kHost, 1s).replied);
    h.arp_enabled = false;
    SimNetwork dark({h}, {}, 1);
    CHECK_FALSE(dark.arp_probe(kHost, 1s).replied);
}

TEST_CASE("connect scan packet sequences") {
    SimNetwork net({plc()}, {}, 1, true);
    ConnectOptions opt{1s, true, 4};

    auto open = net.tcp_connect(kHost, 22, opt);
    CHECK(open.state == PortState::Open);
    REQUIRE(open.banner.has_value());
    CHECK(to_text(*open.banner) == "SSH-");  // truncated to banner_max_bytes
    auto t = net.trace();
    CHECK(shape(t) == std::vector<std::pair<PacketClass, Direction>>{{PacketClass::TcpSyn, Out},
                                                                     {PacketClass::TcpSynAck, In},
                                                                     {PacketClass::TcpAck, Out},
                                                                     {PacketClass::BannerData, In},
                                                                     {PacketClass::TcpRst, Out}});
    // The whole banner crossed the wire even though only 4 bytes were kept.
    CHECK(t[3].bytes == 12 + kPayloadFramingBytes);

    SimNetwork n2({plc()}, {}, 1, true);
    CHECK(n2.tcp_connect(kHost, 23, opt).state == PortState::Closed);
    CHECK(shape(n2.trace()) ==
          std::vector<std::pair<PacketClass, Direction>>{{PacketClass::TcpSyn, Out}, {PacketClass::TcpRst, In}});

    SimNetwork n3({plc()}, {}, 1, true);
    CHECK(n3.tcp_connect(kHost, 8080, opt).state == PortState::Filtered);
    CHECK(shape(n3.trace()) == std::vector<std::pair<PacketClass, Direction>>{{PacketClass::TcpSyn, Out}});
    CHECK(n3.clock().now() == 1s);

    SimNetwork n4({plc()}, {}, 1, true);
    auto quiet = n4.tcp_connect(kHost, 80, opt);
    CHECK(quiet.state == PortState::Open);
    CHECK_FALSE(quiet.banner.has_value());
    CHECK(shape(n4.trace()) == std::vector<std::pair<PacketClass, Direction>>{{PacketClass::TcpSyn, Out},
                                                                              {PacketClass::TcpSynAck, In},
                                                                              {PacketClass::TcpAck, Out},
                                                                              {PacketClass::TcpRst, Out}});
    // It waited for a banner that never came.
    CHECK(n4.trace().back().at == 500us + 1s);
}

TEST_CASE("syn scan packet sequences") {
    SimNetwork net({plc()}, {}, 1, true);
    CHECK(net.tcp_syn(kHost, 22, 1s) == PortState::Open);
    CHECK(net.tcp_syn(kHost, 23, 1s) == PortState::Closed);
    CHECK(net.tcp_syn(kHost, 8080, 1s) == PortState::Filtered);
    CHECK(shape(net.trace()) == std::vector<std::pair<PacketClass, Direction>>{{PacketClass::TcpSyn, Out},
                                                                               {PacketClass::TcpSynAck, In},
                                                                               {PacketClass::TcpRst, Out},
                                                                               {PacketClass::TcpSyn, Out},
                                                                               {PacketClass::TcpRst, In},
                                                                               {PacketClass::TcpSyn, Out}});
    auto t = net.trace();
    CHECK(t[0].probe_id == t[2].probe_id);
    CHECK(t[2].probe_id != t[3].probe_id);
}

TEST_CASE("counters bucket by whole virtual second and price packets by class") {
    SimNetwork net({plc()}, {}, 1);
    net.advance(999'600us);
    net.arp_probe(kHost, 1s);  // request at 0.9996 s, reply at 1.0001 s
    auto c = net.counters();
    REQUIRE(c.per_second().size() == 2);
    CHECK(c.per_second().at(0).count_of(PacketClass::ArpRequest) == 1);
    CHECK(c.per_second().at(1).count_of(PacketClass::ArpReply) == 1);
    CHECK(c.cumulative().total_bytes() == 120);
    CHECK(packet_class_size(PacketClass::IcmpRequest) == 74);
    CHECK(packet_class_size(PacketClass::TcpSyn) == 60);
    CHECK(packet_class_size(PacketClass::ArpReply) == 60);
}

TEST_CASE("jitter stays inside [base, base + jitter] and is seed deterministic") {
    auto h = plc();
    h.rtt_jitter = 200us;
    SimNetwork a({h}, {}, 42), b({h}, {}, 42);
    for (int i = 0; i < 200; ++i) {
        auto ra = a.icmp_ping(kHost, 1s), rb = b.icmp_ping(kHost, 1s);
        CHECK(ra.rtt == rb.rtt);
        CHECK(*ra.rtt >= 500us);
        CHECK(*ra.rtt <= 700us);
    }
}

TEST_CASE("script actions fire at their time") {
    SimHostSpec extra;
    extra.address = kGhost;
    SimScript script({sim::AddHost{10s, extra}, sim::OpenPort{20s, kHost, 23, to_bytes("login:")},
                      sim::SetLatencyFactor{30s, kHost, 3.0}, sim::RemoveHost{40s, kGhost}});
    SimNetwork net({plc()}, script, 1);
    CHECK_FALSE(net.icmp_ping(kGhost, 1s).replied);
    net.advance(10s);
    CHECK(net.icmp_ping(kGhost, 1s).replied);
    CHECK(net.tcp_syn(kHost, 23, 1s) == PortState::Closed);
    net.advance(20s);
    CHECK(net.tcp_syn(kHost, 23, 1s) == PortState::Open);
    net.advance(30s);
    CHECK(net.icmp_ping(kHost, 1s).rtt == 1500us);
    CHECK(net.latency_factor(kHost) == 3.0);
    CHECK(net.advance(40s) == 1);
    CHECK_FALSE(net.host(kGhost).has_value());
}

TEST_CASE("link down makes every probe fail with TransportDown") {
    SimScript script({sim::SetLink{5s, false}, sim::SetLink{6s, true}});
    SimNetwork net({plc()}, script, 1);
    net.advance(5s);
    CHECK(code_of([&] { net.icmp_ping(kHost, 1s); }) == ErrorCode::TransportDown);
    net.advance(6s);
    CHECK(net.icmp_ping(kHost, 1s).replied);
}

TEST_CASE("malformed scripts are rejected") {
    CHECK(code_of([] {
              SimScript({sim::RemoveHost{10s, kHost}, sim::RemoveHost{5s, kHost}});
          }) == ErrorCode::MalformedScript);
    CHECK(code_of([] { SimScript({sim::SetLatencyFactor{1s, kHost, 0.0}}); }) == ErrorCode::MalformedScript);
    SimScript dangling({sim::ClosePort{1s, kGhost, 80}});
    CHECK(code_of([&] { dangling.validate({plc()}); }) == ErrorCode::MalformedScript);
    SimScript gone({sim::RemoveHost{1s, kHost}, sim::ClosePort{2s, kHost, 80}});
    CHECK(code_of([&] { gone.validate({plc()}); }) == ErrorCode::MalformedScript);
}

TEST_CASE("host specs reject contradictions") {
    auto h = plc();
    h.filtered_ports.insert(22);
    CHECK(code_of([&] { h.validate(); }) == ErrorCode::InvalidArgument);
    auto m = plc();
    m.modbus_objects[0] = "ACME";
    CHECK(code_of([&] { m.validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("modbus service answers identification requests") {
    auto h = plc();
    h.open_ports[502];
    h.modbus_objects = {{0, "ACME"}, {1, "EdgeNode"}, {2, "1.0"}, {3, "http://acme.example"}};
    SimNetwork net({h}, {}, 1, true);
    auto reply = net.tcp_exchange(kHost, 502, modbus::encode_request({7, 0xFF, modbus::kReadBasic, 0}), 1s);
    REQUIRE(reply.has_value());
    auto decoded = modbus::decode_reply(*reply);
    REQUIRE(decoded.kind == modbus::ReplyKind::DeviceId);
    CHECK(decoded.response->transaction_id == 7);
    // Basic category only: objects 0..2.
    CHECK(decoded.response->objects.size() == 3);
    CHECK_FALSE(net.tcp_exchange(kHost, 23, modbus::encode_request({}), 1s).has_value());
}

TEST_CASE("scenario files") {
    auto s = parse_scenario(R"(# comment
name demo
epochs 4
config address_range=10.0.0.0/28 rescan_interval=900s
host 10.0.0.1 rtt=2ms jitter=100us open=22,502 filtered=8000-8002 banner.22="SSH-2.0 x\r\n" modbus.0="ACME"
host 10.0.0.2 arp=off icmp=off
at 800s add 10.0.0.5 open=80   # trailing comment
at 800s latency 10.0.0.1 2.5
at 900s open 10.0.0.2 23 banner="login: "
at 1000s close 10.0.0.1 22
at 1100s icmp 10.0.0.1 off
at 1200s remove 10.0.0.5
at 1300s link down
)");
    CHECK(s.name == "demo");
    CHECK(s.epochs == 4u);
    REQUIRE(s.hosts.size() == 2);
    CHECK(s.hosts[0].base_rtt == 2ms);
    CHECK(s.hosts[0].filtered_ports.size() == 3);
    CHECK(to_text(*s.hosts[0].open_ports.at(22)) == "SSH-2.0 x\r\n");
    CHECK(s.hosts[0].modbus_objects.at(0) == "ACME");
    CHECK_FALSE(s.hosts[1].arp_enabled);
    CHECK(s.script.actions().size() == 7);
    CHECK(s.config.size() == 2);

    auto line_of = [](const char* text) -> std::string {
        try {
            parse_scenario(text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MalformedScript);
            return e.what();
        }
        return "accepted";
    };
    CHECK(line_of("name x\nbogus 1\n").find("line 2") != std::string::npos);
    CHECK(line_of("host 10.0.0.1\nhost 10.0.0.1\n") != "accepted");
    CHECK(line_of("host 10.0.0.1 banner.80=\"x\"\n").find("line 1") != std::string::npos);
    CHECK(line_of("host 10.0.0.1\nat 5s remove 10.0.0.1\nat 4s add 10.0.0.2\n") != "accepted");
    CHECK(line_of("host 10.0.0.1\nat 5s close 10.0.0.7 80\n") != "accepted");
    CHECK(line_of("config no_such_key=1\n") != "accepted");
    CHECK(line_of("host 10.0.0.1 rtt=5\n") != "accepted");
    CHECK(line_of("host 10.0.0.1 banner.22=\"unterminated\n") != "accepted");
}
