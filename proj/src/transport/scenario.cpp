#include "edgemap/transport/scenario.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "edgemap/core/text.hpp"
#include "edgemap/error.hpp"

namespace edgemap {

namespace {

int parse_int(const std::string& s, int max) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || v < 0 || v > max)
        fail(ErrorCode::InvalidArgument, "bad number '" + s + "'");
    return v;
}

std::vector<Port> parse_port_list(const std::string& s) {
    std::vector<Port> ports;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            auto range = PortRange::parse(item);
            for (int p = range.low(); p <= range.high(); ++p) ports.push_back(static_cast<Port>(p));
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return ports;
}

MacAddress parse_mac(const std::string& s) {
    MacAddress mac{};
    if (s.size() != 17) fail(ErrorCode::InvalidArgument, "bad MAC address '" + s + "'");
    for (std::size_t i = 0; i < 6; ++i) {
        if (i > 0 && s[i * 3 - 1] != ':') fail(ErrorCode::InvalidArgument, "bad MAC address '" + s + "'");
        auto byte = text::from_hex(s.substr(i * 3, 2));
        mac[i] = static_cast<std::uint8_t>(byte[0]);
    }
    return mac;
}

double parse_factor(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) fail(ErrorCode::InvalidArgument, "bad factor '" + s + "'");
    return v;
}

// Host attributes: address followed by key=value words.
SimHostSpec parse_host(const std::vector<std::string>& words, std::size_t first) {
    if (first >= words.size()) fail(ErrorCode::InvalidArgument, "host needs an address");
    SimHostSpec spec;
    spec.address = Ipv4Address::from_string(words[first]);
    auto low = spec.address.value();
    spec.mac = {0x02, 0x00, static_cast<std::uint8_t>(low >> 24), static_cast<std::uint8_t>(low >> 16),
                static_cast<std::uint8_t>(low >> 8), static_cast<std::uint8_t>(low)};
    std::map<Port, Bytes> banners;
    for (std::size_t i = first + 1; i < words.size(); ++i) {
        auto [key, value] = text::split_key_value(words[i]);
        if (key == "mac") spec.mac = parse_mac(value);
        else if (key == "rtt") spec.base_rtt = parse_duration(value);
        else if (key == "jitter") spec.rtt_jitter = parse_duration(value);
        else if (key == "arp") spec.arp_enabled = parse_bool(value);
        else if (key == "icmp") spec.icmp_echo_enabled = parse_bool(value);
        else if (key == "open") {
            for (auto p : parse_port_list(value)) spec.open_ports[p];
        } else if (key == "filtered") {
            for (auto p : parse_port_list(value)) spec.filtered_ports.insert(p);
        } else if (key.starts_with("banner.")) {
            banners[static_cast<Port>(parse_int(key.substr(7), 65535))] = to_bytes(value);
        } else if (key.starts_with("modbus.")) {
            spec.modbus_objects[static_cast<std::uint8_t>(parse_int(key.substr(7), 255))] = value;
        } else {
            fail(ErrorCode::InvalidArgument, "unknown host attribute '" + key + "'");
        }
    }
    for (auto& [port, banner] : banners) {
        auto it = spec.open_ports.find(port);
        if (it == spec.open_ports.end())
            fail(ErrorCode::InvalidArgument, "banner given for port " + std::to_string(port) + " which is not open");
        it->second = std::move(banner);
    }
    spec.validate();
    return spec;
}

SimAction parse_action(const std::vector<std::string>& w) {
    // at <time> <verb> ...
    if (w.size() < 3) fail(ErrorCode::InvalidArgument, "expected: at <time> <action> ...");
    const auto at = parse_duration(w[1]);
    const auto& verb = w[2];
    auto need = [&](std::size_t n) {
        if (w.size() != n) fail(ErrorCode::InvalidArgument, "wrong number of arguments for '" + verb + "'");
    };
    if (verb == "add") return sim::AddHost{at, parse_host(w, 3)};
    if (verb == "link") {
        need(4);
        return sim::SetLink{at, w[3] == "up" ? true : w[3] == "down" ? false : parse_bool(w[3])};
    }
    if (w.size() < 4) fail(ErrorCode::InvalidArgument, "'" + verb + "' needs an address");
    const auto address = Ipv4Address::from_string(w[3]);
    if (verb == "remove") {
        need(4);
        return sim::RemoveHost{at, address};
    }
    if (verb == "open") {
        if (w.size() != 5 && w.size() != 6) fail(ErrorCode::InvalidArgument, "expected: open <addr> <port> [banner=...]");
        std::optional<Bytes> banner;
        if (w.size() == 6) {
            auto [key, value] = text::split_key_value(w[5]);
            if (key != "banner") fail(ErrorCode::InvalidArgument, "expected banner=...");
            banner = to_bytes(value);
        }
        return sim::OpenPort{at, address, static_cast<Port>(parse_int(w[4], 65535)), banner};
    }
    if (verb == "close") {
        need(5);
        return sim::ClosePort{at, address, static_cast<Port>(parse_int(w[4], 65535))};
    }
    if (verb == "latency") {
        need(5);
        return sim::SetLatencyFactor{at, address, parse_factor(w[4])};
    }
    if (verb == "icmp") {
        need(5);
        return sim::SetIcmpEcho{at, address, parse_bool(w[4])};
    }
    if (verb == "arp") {
        need(5);
        return sim::SetArp{at, address, parse_bool(w[4])};
    }
    fail(ErrorCode::InvalidArgument, "unknown action '" + verb + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    Scenario scenario;
    std::vector<SimAction> actions;
    int line_no = 0;
    try {
        while (!text.empty()) {
            auto nl = text.find('\n');
            auto line = text.substr(0, nl);
            text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
            ++line_no;
            auto words = text::split_words(line);
            if (words.empty() || words[0].starts_with('#')) continue;
            // Trailing comments.
            for (std::size_t i = 1; i < words.size(); ++i) {
                if (words[i].starts_with('#')) {
                    words.resize(i);
                    break;
                }
            }
            const auto& head = words[0];
            if (head == "name") {
                if (words.size() != 2) fail(ErrorCode::InvalidArgument, "expected: name <text>");
                scenario.name = words[1];
            } else if (head == "epochs") {
                if (words.size() != 2) fail(ErrorCode::InvalidArgument, "expected: epochs <n>");
                scenario.epochs = static_cast<std::uint64_t>(parse_int(words[1], 1000000));
            } else if (head == "config") {
                for (std::size_t i = 1; i < words.size(); ++i) {
                    auto [key, value] = text::split_key_value(words[i]);
                    ScanConfig probe;
                    if (!apply_scan_setting(probe, key, value))
                        fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
                    scenario.config.push_back({key, value, line_no});
                }
            } else if (head == "host") {
                scenario.hosts.push_back(parse_host(words, 1));
            } else if (head == "at") {
                actions.push_back(parse_action(words));
            } else {
                fail(ErrorCode::InvalidArgument, "unknown directive '" + head + "'");
            }
        }
        scenario.script = SimScript(std::move(actions));
    } catch (const Error& e) {
        fail(ErrorCode::MalformedScript, "line " + std::to_string(line_no) + ": " + e.what());
    }
    // Replays the script against the declared hosts.
    std::set<Ipv4Address> seen;
    for (const auto& h : scenario.hosts)
        if (!seen.insert(h.address).second)
            fail(ErrorCode::MalformedScript, "host " + h.address.to_string() + " declared twice");
    scenario.script.validate(scenario.hosts);
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MalformedScript, "cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace edgemap
