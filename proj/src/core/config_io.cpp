#include "edgemap/core/config_io.hpp"

#include <charconv>
#include <cstdlib>

#include "edgemap/error.hpp"

namespace edgemap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    text = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        fail(ErrorCode::InvalidArgument, "malformed " + std::string(what) + " '" + std::string(text) + "'");
    return v;
}

double parse_double(std::string_view text, std::string_view what) {
    std::string s(trim(text));
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        fail(ErrorCode::InvalidArgument, "malformed " + std::string(what) + " '" + s + "'");
    return v;
}

}  // namespace

Micros parse_duration(std::string_view text) {
    text = trim(text);
    std::size_t digits = 0;
    while (digits < text.size() && text[digits] >= '0' && text[digits] <= '9') ++digits;
    auto unit = text.substr(digits);
    std::int64_t scale = 0;
    if (unit == "us") scale = 1;
    else if (unit == "ms") scale = 1000;
    else if (unit == "s") scale = 1000000;
    else if (unit == "m" || unit == "min") scale = 60000000;
    else if (unit == "h") scale = 3600000000;
    if (digits == 0 || scale == 0)
        fail(ErrorCode::InvalidArgument, "malformed duration '" + std::string(text) + "' (expected e.g. 100ms)");
    auto n = parse_u64(text.substr(0, digits), "duration");
    return Micros(static_cast<std::int64_t>(n) * scale);
}

std::string format_duration(Micros d) {
    auto us = d.count();
    if (us != 0 && us % 3600000000 == 0) return std::to_string(us / 3600000000) + "h";
    if (us != 0 && us % 60000000 == 0) return std::to_string(us / 60000000) + "m";
    if (us != 0 && us % 1000000 == 0) return std::to_string(us / 1000000) + "s";
    if (us != 0 && us % 1000 == 0) return std::to_string(us / 1000) + "ms";
    return std::to_string(us) + "us";
}

bool parse_bool(std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    fail(ErrorCode::InvalidArgument, "malformed boolean '" + std::string(text) + "'");
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
    std::vector<KeyValue> out;
    int line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + ": expected key = value");
        out.push_back({std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return out;
}

bool apply_scan_setting(ScanConfig& c, std::string_view key, std::string_view value) {
    if (key == "address_range") c.address_range = AddressRange::parse(value);
    else if (key == "port_range") c.port_range = PortRange::parse(value);
    else if (key == "ping_delay") c.ping_delay = parse_duration(value);
    else if (key == "port_delay") c.port_delay = parse_duration(value);
    else if (key == "startup_delay_min") c.startup_delay_min = parse_duration(value);
    else if (key == "startup_delay_max") c.startup_delay_max = parse_duration(value);
    else if (key == "rescan_interval") c.rescan_interval = parse_duration(value);
    else if (key == "seed") c.seed = parse_u64(value, "seed");
    else if (key == "scan_silent_hosts") c.scan_silent_hosts = parse_bool(value);
    else if (key == "banner_grab") c.banner_grab = parse_bool(value);
    else if (key == "banner_max_bytes") c.banner_max_bytes = parse_u64(value, "banner_max_bytes");
    else if (key == "rtt_anomaly_factor") c.rtt_anomaly_factor = parse_double(value, "rtt_anomaly_factor");
    else if (key == "rtt_anomaly_floor") c.rtt_anomaly_floor = parse_duration(value);
    else if (key == "connect_timeout") c.connect_timeout = parse_duration(value);
    else if (key == "ping_timeout") c.ping_timeout = parse_duration(value);
    else if (key == "modbus_identify") c.modbus_identify = parse_bool(value);
    else if (key == "scan_method") {
        auto v = trim(value);
        if (v == "connect") c.scan_method = ScanMethod::Connect;
        else if (v == "syn") c.scan_method = ScanMethod::Syn;
        else fail(ErrorCode::InvalidArgument, "scan_method must be connect or syn");
    } else if (key == "rng") {
        auto v = trim(value);
        if (v == "xoshiro256ss") c.rng = RngKind::Xoshiro256StarStar;
        else if (v == "os-entropy") c.rng = RngKind::OsEntropy;
        else fail(ErrorCode::InvalidArgument, "rng must be xoshiro256ss or os-entropy");
    } else {
        return false;
    }
    return true;
}

}  // namespace edgemap
