#include "edgemap/probe/modbus.hpp"

#include "edgemap/error.hpp"

namespace edgemap::modbus {

namespace {

constexpr std::size_t kMbapSize = 7;  // transaction(2) protocol(2) length(2) unit(1)

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint16_t>((in[at] << 8) | in[at + 1]);
}

Bytes frame(std::uint16_t transaction_id, std::uint8_t unit_id, const Bytes& pdu) {
    require(pdu.size() + 1 <= 0xFFFF, "Modbus PDU too large");
    Bytes out;
    out.reserve(kMbapSize + pdu.size());
    put_u16(out, transaction_id);
    put_u16(out, 0);
    put_u16(out, static_cast<std::uint16_t>(pdu.size() + 1));
    out.push_back(unit_id);
    out.insert(out.end(), pdu.begin(), pdu.end());
    return out;
}

[[noreturn]] void malformed(const std::string& what) { fail(ErrorCode::MalformedResponse, what); }

}  // namespace

Bytes encode_request(const DeviceIdRequest& r) {
    return frame(r.transaction_id, r.unit_id, Bytes{kFunctionMei, kMeiReadDeviceId, r.read_code, r.object_id});
}

std::optional<DeviceIdRequest> decode_request(std::span<const std::uint8_t> adu) {
    if (adu.size() != kMbapSize + 4) return std::nullopt;
    if (get_u16(adu, 2) != 0 || get_u16(adu, 4) != 5) return std::nullopt;
    if (adu[7] != kFunctionMei || adu[8] != kMeiReadDeviceId) return std::nullopt;
    return DeviceIdRequest{get_u16(adu, 0), adu[6], adu[9], adu[10]};
}

Bytes encode_response(const DeviceIdResponse& r) {
    require(r.objects.size() <= 0xFF, "too many identification objects");
    Bytes pdu{kFunctionMei, kMeiReadDeviceId, r.read_code, r.conformity, r.more_follows, r.next_object_id,
              static_cast<std::uint8_t>(r.objects.size())};
    for (const auto& [id, value] : r.objects) {
        require(value.size() <= 0xFF, "identification object longer than 255 bytes");
        pdu.push_back(id);
        pdu.push_back(static_cast<std::uint8_t>(value.size()));
        pdu.insert(pdu.end(), value.begin(), value.end());
    }
    return frame(r.transaction_id, r.unit_id, pdu);
}

Bytes encode_exception(std::uint16_t transaction_id, std::uint8_t unit_id, std::uint8_t exception_code) {
    return frame(transaction_id, unit_id, Bytes{static_cast<std::uint8_t>(kFunctionMei | 0x80), exception_code});
}

DecodedReply decode_reply(std::span<const std::uint8_t> adu) {
    DecodedReply out;
    if (adu.size() < kMbapSize + 1 || get_u16(adu, 2) != 0) return out;
    if (get_u16(adu, 4) != adu.size() - 6) malformed("MBAP length does not match frame size");

    auto pdu = adu.subspan(kMbapSize);
    if (pdu[0] == (kFunctionMei | 0x80)) {
        if (pdu.size() != 2) malformed("exception reply must carry exactly one code byte");
        out.kind = ReplyKind::Exception;
        out.exception_code = pdu[1];
        return out;
    }
    if (pdu[0] != kFunctionMei) return out;
    if (pdu.size() < 7) malformed("identification reply header truncated");
    if (pdu[1] != kMeiReadDeviceId) malformed("unexpected MEI type");

    DeviceIdResponse r;
    r.transaction_id = get_u16(adu, 0);
    r.unit_id = adu[6];
    r.read_code = pdu[2];
    r.conformity = pdu[3];
    r.more_follows = pdu[4];
    r.next_object_id = pdu[5];
    const std::size_t count = pdu[6];
    std::size_t at = 7;
    for (std::size_t i = 0; i < count; ++i) {
        if (at + 2 > pdu.size()) malformed("object header runs past end of frame");
        const std::uint8_t id = pdu[at];
        const std::size_t len = pdu[at + 1];
        at += 2;
        if (at + len > pdu.size()) malformed("object value runs past end of frame");
        r.objects.emplace_back(id, std::string(pdu.begin() + at, pdu.begin() + at + len));
        at += len;
    }
    if (at != pdu.size()) malformed("trailing bytes after identification objects");
    out.kind = ReplyKind::DeviceId;
    out.response = std::move(r);
    return out;
}

std::optional<Identification> identify(ProbeTransport& transport, Ipv4Address target, Port port,
                                       Micros timeout, std::uint16_t transaction_id) {
    DeviceIdRequest request;
    request.transaction_id = transaction_id;
    auto reply = transport.tcp_exchange(target, port, encode_request(request), timeout);
    if (!reply || reply->empty()) return std::nullopt;

    auto decoded = decode_reply(*reply);
    if (decoded.kind != ReplyKind::DeviceId) return std::nullopt;
    if (decoded.response->transaction_id != transaction_id)
        malformed("reply transaction id does not match the request");

    Identification objects;
    for (const auto& [id, value] : decoded.response->objects) objects[id] = value;
    return objects;
}

std::optional<Identification> identify(ProbeTransport& transport, const HostRecord& record, Port port,
                                       Micros timeout) {
    auto it = record.ports().find(port);
    require(it != record.ports().end() && it->second == PortState::Open,
            "Modbus identification requires port " + std::to_string(port) + " to be open");
    return identify(transport, record.address(), port, timeout);
}

}  // namespace edgemap::modbus
