#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgemap/core/model.hpp"
#include "edgemap/transport/transport.hpp"

// Modbus/TCP "Read Device Identification" (function 0x2B, MEI type 0x0E).
// Only the ADU framing and this one request/response pair are handled.
namespace edgemap::modbus {

inline constexpr Port kDefaultPort = 502;
inline constexpr std::uint8_t kFunctionMei = 0x2B;
inline constexpr std::uint8_t kMeiReadDeviceId = 0x0E;
inline constexpr std::uint8_t kReadBasic = 0x01;

struct DeviceIdRequest {
    std::uint16_t transaction_id = 1;
    std::uint8_t unit_id = 0xFF;
    std::uint8_t read_code = kReadBasic;
    std::uint8_t object_id = 0x00;

    bool operator==(const DeviceIdRequest&) const = default;
};

struct DeviceIdResponse {
    std::uint16_t transaction_id = 0;
    std::uint8_t unit_id = 0xFF;
    std::uint8_t read_code = kReadBasic;
    std::uint8_t conformity = 0x01;
    std::uint8_t more_follows = 0x00;
    std::uint8_t next_object_id = 0x00;
    std::vector<std::pair<std::uint8_t, std::string>> objects;

    bool operator==(const DeviceIdResponse&) const = default;
};

Bytes encode_request(const DeviceIdRequest& request);
std::optional<DeviceIdRequest> decode_request(std::span<const std::uint8_t> adu);

Bytes encode_response(const DeviceIdResponse& response);
Bytes encode_exception(std::uint16_t transaction_id, std::uint8_t unit_id, std::uint8_t exception_code);

enum class ReplyKind { DeviceId, Exception, NotModbus };

struct DecodedReply {
    ReplyKind kind = ReplyKind::NotModbus;
    std::optional<DeviceIdResponse> response;
    std::uint8_t exception_code = 0;
};

/// Classifies a reply. Replies that are framed as Modbus (protocol id 0,
/// consistent length) but whose identification PDU is inconsistent throw
/// Error(MalformedResponse); anything else that is not an identification
/// reply comes back as Exception or NotModbus.
DecodedReply decode_reply(std::span<const std::uint8_t> adu);

using Identification = std::map<std::uint8_t, std::string>;

/// Sends one Basic identification request over one connection.
/// Returns nullopt ("unsupported") on an exception reply, a non-Modbus reply,
/// or no reply at all.
std::optional<Identification> identify(ProbeTransport& transport, Ipv4Address target, Port port,
                                       Micros timeout, std::uint16_t transaction_id = 1);

/// Same, but enforces that `record` lists `port` as Open before anything is sent.
std::optional<Identification> identify(ProbeTransport& transport, const HostRecord& record, Port port,
                                       Micros timeout);

}  // namespace edgemap::modbus
