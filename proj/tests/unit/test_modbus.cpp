#include <doctest.h>

#include <random>

#include "edgemap/error.hpp"
#include "edgemap/probe/modbus.hpp"
#include "edgemap/transport/simnet.hpp"

using namespace edgemap;
using namespace std::chrono_literals;

namespace {

const auto kPlc = Ipv4Address::from_string("10.0.0.7");

SimNetwork plc_network() {
    SimHostSpec h;
    h.address = kPlc;
    h.open_ports[80] = to_bytes("HTTP/1.0 200 OK\r\n");
    h.open_ports[502];
    h.modbus_objects = {{0, "ACME"}, {1, "EdgeNode"}, {2, "2.1"}};
    return SimNetwork({h}, {}, 1);
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("request encoding matches the wire layout") {
    auto b = modbus::encode_request({0x1234, 0x11, modbus::kReadBasic, 0});
    CHECK(b == Bytes{0x12, 0x34, 0x00, 0x00, 0x00, 0x05, 0x11, 0x2B, 0x0E, 0x01, 0x00});
}

TEST_CASE("requests and responses round-trip") {
    std::mt19937_64 g(11);
    for (int i = 0; i < 500; ++i) {
        modbus::DeviceIdRequest rq{static_cast<std::uint16_t>(g()), static_cast<std::uint8_t>(g()),
                                   static_cast<std::uint8_t>(g() % 4 + 1), static_cast<std::uint8_t>(g())};
        CHECK(modbus::decode_request(modbus::encode_request(rq)) == rq);

        modbus::DeviceIdResponse rs;
        rs.transaction_id = static_cast<std::uint16_t>(g());
        rs.unit_id = static_cast<std::uint8_t>(g());
        rs.conformity = static_cast<std::uint8_t>(g());
        const auto n = g() % 6;
        for (std::uint64_t k = 0; k < n; ++k) {
            std::string v(g() % 40, 'x');
            for (auto& c : v) c = static_cast<char>(g());
            rs.objects.emplace_back(static_cast<std::uint8_t>(k), v);
        }
        auto decoded = modbus::decode_reply(modbus::encode_response(rs));
        REQUIRE(decoded.kind == modbus::ReplyKind::DeviceId);
        CHECK(*decoded.response == rs);
    }
}

TEST_CASE("identification over the simulated network") {
    auto net = plc_network();
    auto id = modbus::identify(net, kPlc, 502, 1s);
    REQUIRE(id.has_value());
    CHECK(id->at(0) == "ACME");
    CHECK(id->at(1) == "EdgeNode");

    // A web server answers with something that is not Modbus.
    CHECK_FALSE(modbus::identify(net, kPlc, 80, 1s).has_value());
    // Nothing listening.
    CHECK_FALSE(modbus::identify(net, kPlc, 503, 1s).has_value());
}

TEST_CASE("identification requires an open port in the record") {
    auto net = plc_network();
    HostRecord closed(kPlc, AliveState::Up, {500us}, {{502, PortState::Closed}});
    CHECK(code_of([&] { modbus::identify(net, closed, 502, 1s); }) == ErrorCode::InvalidArgument);
    HostRecord missing(kPlc, AliveState::Up, {500us}, {});
    CHECK(code_of([&] { modbus::identify(net, missing, 502, 1s); }) == ErrorCode::InvalidArgument);
    CHECK(net.counters().cumulative().total_count() == 0);
    HostRecord open(kPlc, AliveState::Up, {500us}, {{502, PortState::Open}});
    CHECK(modbus::identify(net, open, 502, 1s).has_value());
}

TEST_CASE("exception and malformed replies") {
    auto ex = modbus::decode_reply(modbus::encode_exception(3, 0xFF, 0x01));
    CHECK(ex.kind == modbus::ReplyKind::Exception);
    CHECK(ex.exception_code == 0x01);

    modbus::DeviceIdResponse rs;
    rs.objects = {{0, "ACME"}};
    auto good = modbus::encode_response(rs);

    auto bad_len = good;
    bad_len[5] += 1;
    CHECK(code_of([&] { modbus::decode_reply(bad_len); }) == ErrorCode::MalformedResponse);

    auto overrun = good;
    overrun[overrun.size() - 5] = 40;  // object length past the end
    CHECK(code_of([&] { modbus::decode_reply(overrun); }) == ErrorCode::MalformedResponse);

    auto trailing = good;
    trailing.push_back(0);
    trailing[5] += 1;
    CHECK(code_of([&] { modbus::decode_reply(trailing); }) == ErrorCode::MalformedResponse);

    CHECK(modbus::decode_reply(to_bytes("SSH-2.0-x")).kind == modbus::ReplyKind::NotModbus);
}
