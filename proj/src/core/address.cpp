#include "edgemap/core/address.hpp"

#include <charconv>

#include "edgemap/error.hpp"

namespace edgemap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<unsigned> parse_uint(std::string_view s, unsigned max) {
    if (s.empty() || s.size() > 5) return std::nullopt;
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v > max) return std::nullopt;
    return v;
}

}  // namespace

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
    std::uint32_t value = 0;
    int parts = 0;
    while (true) {
        auto dot = text.find('.');
        auto octet_text = text.substr(0, dot);
        // Leading zeros are rejected so that "010" never means something surprising.
        if (octet_text.size() > 1 && octet_text.front() == '0') return std::nullopt;
        auto octet = parse_uint(octet_text, 255);
        if (!octet) return std::nullopt;
        value = (value << 8) | *octet;
        ++parts;
        if (dot == std::string_view::npos) break;
        text.remove_prefix(dot + 1);
    }
    if (parts != 4) return std::nullopt;
    return Ipv4Address(value);
}

Ipv4Address Ipv4Address::from_string(std::string_view text) {
    auto a = parse(trim(text));
    if (!a) fail(ErrorCode::InvalidArgument, "malformed IPv4 address '" + std::string(text) + "'");
    return *a;
}

std::string Ipv4Address::to_string() const {
    return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
           std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

AddressRange::AddressRange(Ipv4Address first, Ipv4Address last) : first_(first), last_(last) {
    require(first <= last, "address range start " + first.to_string() + " is after end " + last.to_string());
    require(size() <= kMaxSize, "address range " + to_string() + " exceeds " +
                                    std::to_string(kMaxSize) + " addresses");
}

AddressRange AddressRange::parse(std::string_view text) {
    text = trim(text);
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto base = Ipv4Address::from_string(text.substr(0, slash));
        auto prefix = parse_uint(text.substr(slash + 1), 32);
        if (!prefix) fail(ErrorCode::InvalidArgument, "malformed CIDR prefix in '" + std::string(text) + "'");
        std::uint32_t mask = *prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - *prefix);
        std::uint32_t network = base.value() & mask;
        std::uint32_t broadcast = network | ~mask;
        if (*prefix <= 30) {
            ++network;
            --broadcast;
        }
        return AddressRange(Ipv4Address(network), Ipv4Address(broadcast));
    }
    if (auto dash = text.find('-'); dash != std::string_view::npos) {
        return AddressRange(Ipv4Address::from_string(text.substr(0, dash)),
                            Ipv4Address::from_string(text.substr(dash + 1)));
    }
    auto a = Ipv4Address::from_string(text);
    return AddressRange(a, a);
}

std::string AddressRange::to_string() const { return first_.to_string() + '-' + last_.to_string(); }

PortRange::PortRange(int low, int high)
    : low_(static_cast<Port>(low)), high_(static_cast<Port>(high)) {
    require(low >= 1, "port range low end must be >= 1");
    require(high <= 65535, "port range high end must be <= 65535");
    require(low <= high, "port range low end exceeds high end");
}

PortRange PortRange::parse(std::string_view text) {
    text = trim(text);
    auto dash = text.find('-');
    auto low = parse_uint(trim(text.substr(0, dash)), 99999);
    auto high = dash == std::string_view::npos ? low : parse_uint(trim(text.substr(dash + 1)), 99999);
    if (!low || !high) fail(ErrorCode::InvalidArgument, "malformed port range '" + std::string(text) + "'");
    return PortRange(static_cast<int>(*low), static_cast<int>(*high));
}

std::string PortRange::to_string() const { return std::to_string(low_) + '-' + std::to_string(high_); }

}  // namespace edgemap
