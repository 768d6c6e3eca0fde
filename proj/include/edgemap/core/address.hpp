#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace edgemap {

using Port = std::uint16_t;

class Ipv4Address {
public:
    constexpr Ipv4Address() = default;
    constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}

    static std::optional<Ipv4Address> parse(std::string_view text);
    /// Throws Error(InvalidArgument) on malformed text.
    static Ipv4Address from_string(std::string_view text);

    constexpr std::uint32_t value() const { return value_; }
    std::string to_string() const;

    constexpr auto operator<=>(const Ipv4Address&) const = default;

private:
    std::uint32_t value_ = 0;
};

/// Inclusive interval of IPv4 addresses.
///
/// Accepts "a.b.c.d", "a.b.c.d-e.f.g.h" and CIDR "a.b.c.d/n". For CIDR blocks
/// with a prefix of /30 or shorter the network and broadcast addresses are
/// excluded, since nothing answers on them in a LAN.
class AddressRange {
public:
    static constexpr std::uint64_t kMaxSize = 1u << 20;

    AddressRange(Ipv4Address first, Ipv4Address last);

    static AddressRange parse(std::string_view text);

    Ipv4Address first() const { return first_; }
    Ipv4Address last() const { return last_; }
    std::uint64_t size() const { return std::uint64_t{last_.value()} - first_.value() + 1; }
    bool contains(Ipv4Address a) const { return first_ <= a && a <= last_; }
    Ipv4Address at(std::uint64_t index) const {
        return Ipv4Address(first_.value() + static_cast<std::uint32_t>(index));
    }

    /// Canonical "first-last" form, also used for digests and file records.
    std::string to_string() const;

    bool operator==(const AddressRange&) const = default;

private:
    Ipv4Address first_;
    Ipv4Address last_;
};

class PortRange {
public:
    PortRange(int low, int high);

    /// "N" or "N-M".
    static PortRange parse(std::string_view text);

    Port low() const { return low_; }
    Port high() const { return high_; }
    std::size_t size() const { return std::size_t{high_} - low_ + 1; }
    bool contains(int p) const { return p >= low_ && p <= high_; }
    std::string to_string() const;

    bool operator==(const PortRange&) const = default;

private:
    Port low_;
    Port high_;
};

}  // namespace edgemap
