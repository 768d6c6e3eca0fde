#include "edgemap/baseline/fingerprint_io.hpp"

#include <zlib.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "edgemap/core/text.hpp"
#include "edgemap/error.hpp"

namespace edgemap {

namespace {

[[noreturn]] void corrupt(const std::string& what) { fail(ErrorCode::CorruptRecord, what); }

template <class Int>
Int parse_int(std::string_view s, int base = 10) {
    Int value{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) corrupt("bad number '" + std::string(s) + "'");
    return value;
}

std::vector<std::string_view> fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto next = line.find(' ', pos);
        out.push_back(line.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::string hex_of(const Bytes& b) { return text::to_hex(std::string_view(reinterpret_cast<const char*>(b.data()), b.size())); }

Bytes bytes_of_hex(std::string_view hex) {
    try {
        return to_bytes(text::from_hex(hex));
    } catch (const Error&) {
        corrupt("bad hex field");
    }
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }

    std::string_view next() {
        if (done()) corrupt("record is truncated");
        auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) corrupt("missing line terminator");
        auto line = text_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return line;
    }

    std::string_view peek_keyword() const {
        auto rest = text_.substr(pos_);
        return rest.substr(0, rest.find_first_of(" \n"));
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string_view expect_key(LineReader& in, std::string_view key) {
    auto line = in.next();
    if (line.size() <= key.size() || line.substr(0, key.size()) != key || line[key.size()] != ' ')
        corrupt("expected '" + std::string(key) + "'");
    return line.substr(key.size() + 1);
}

}  // namespace

std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string format_digest(std::uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

std::string serialize_fingerprint(const NetworkFingerprint& fp) {
    std::ostringstream out;
    out << kFingerprintHeader << '\n';
    out << "address_range " << fp.address_range().to_string() << '\n';
    out << "config_digest " << format_digest(fp.config_digest()) << '\n';
    out << "finished_at_us " << fp.finished_at().count() << '\n';
    out << "started_at_us " << fp.started_at().count() << '\n';
    out << "trusted " << (fp.trusted() ? "true" : "false") << '\n';
    for (const auto& [address, host] : fp.hosts()) {
        out << "host " << address.to_string() << ' ' << to_string(host.alive()) << '\n';
        for (const auto& [id, value] : host.device_identity())
            out << "identity " << unsigned{id} << ' ' << text::to_hex(value) << '\n';
        for (const auto& [port, state] : host.ports()) {
            out << "port " << port << ' ' << to_string(state);
            if (auto b = host.banners().find(port); b != host.banners().end()) out << " banner=" << hex_of(b->second);
            out << '\n';
        }
        if (!host.rtt_samples().empty()) {
            out << "rtt";
            for (auto s : host.rtt_samples()) out << ' ' << s.count();
            out << '\n';
        }
        out << "end\n";
    }
    std::string body = out.str();
    char sum[32];
    std::snprintf(sum, sizeof sum, "checksum %08x\n", crc32_of(body));
    return body + sum;
}

NetworkFingerprint parse_fingerprint(std::string_view text) {
    // Checksum first: nothing in a damaged record is worth interpreting.
    constexpr std::size_t kSumLine = 9 + 8 + 1;  // "checksum " + hex + '\n'
    if (text.size() < kSumLine || text.back() != '\n') corrupt("record is truncated");
    auto body = text.substr(0, text.size() - kSumLine);
    auto sum_line = text.substr(body.size());
    if (sum_line.substr(0, 9) != "checksum " || (!body.empty() && body.back() != '\n'))
        corrupt("missing checksum line");
    auto hex = sum_line.substr(9, 8);
    for (char c : hex)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) corrupt("checksum must be lowercase hex");
    if (parse_int<std::uint32_t>(hex, 16) != crc32_of(body)) corrupt("checksum mismatch");

    try {
        LineReader in(body);
        if (in.next() != kFingerprintHeader) corrupt("unknown header");
        auto range = AddressRange::parse(expect_key(in, "address_range"));
        auto digest_hex = expect_key(in, "config_digest");
        if (digest_hex.size() != 16) corrupt("config_digest must be 16 hex digits");
        auto digest = parse_int<std::uint64_t>(digest_hex, 16);
        Timestamp finished{parse_int<std::int64_t>(expect_key(in, "finished_at_us"))};
        Timestamp started{parse_int<std::int64_t>(expect_key(in, "started_at_us"))};
        auto trusted_text = expect_key(in, "trusted");
        if (trusted_text != "true" && trusted_text != "false") corrupt("trusted must be true or false");

        std::map<Ipv4Address, HostRecord> hosts;
        while (!in.done()) {
            auto head = fields(expect_key(in, "host"));
            if (head.size() != 2) corrupt("host line needs address and state");
            auto address = Ipv4Address::parse(head[0]);
            auto alive = parse_alive_state(head[1]);
            if (!address || !alive) corrupt("bad host line");

            std::map<std::uint8_t, std::string> identity;
            std::map<Port, PortState> ports;
            std::map<Port, Bytes> banners;
            std::vector<Micros> rtt;
            while (true) {
                auto line = in.next();
                if (line == "end") break;
                auto f = fields(line);
                if (f[0] == "identity" && f.size() == 3) {
                    auto bytes = bytes_of_hex(f[2]);
                    identity[parse_int<std::uint8_t>(f[1])] = to_text(bytes);
                } else if (f[0] == "port" && (f.size() == 3 || f.size() == 4)) {
                    auto port = parse_int<Port>(f[1]);
                    auto state = parse_port_state(f[2]);
                    if (!state) corrupt("bad port state");
                    ports[port] = *state;
                    if (f.size() == 4) {
                        if (f[3].substr(0, 7) != "banner=") corrupt("bad port attribute");
                        banners[port] = bytes_of_hex(f[3].substr(7));
                    }
                } else if (f[0] == "rtt" && f.size() >= 2) {
                    for (std::size_t i = 1; i < f.size(); ++i) rtt.emplace_back(parse_int<std::int64_t>(f[i]));
                } else {
                    corrupt("unexpected line in host block");
                }
            }
            hosts.emplace(*address, HostRecord(*address, *alive, std::move(rtt), std::move(ports),
                                               std::move(banners), std::move(identity)));
        }
        NetworkFingerprint fp(range, digest, started, finished, std::move(hosts), trusted_text == "true");
        // Anything that parsed but is not in canonical form (reordered lines,
        // duplicates, leading zeros) is rejected by comparing the round trip.
        if (serialize_fingerprint(fp) != text) corrupt("record is not in canonical form");
        return fp;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptRecord) throw;
        corrupt(e.what());
    }
}

NetworkFingerprint read_fingerprint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail(ErrorCode::Io, "cannot read " + path.string());
    return parse_fingerprint(buf.str());
}

void write_fingerprint_file(const std::filesystem::path& path, const NetworkFingerprint& fp) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot create " + tmp.string());
        out << serialize_fingerprint(fp);
        out.flush();
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename into " + path.string() + ": " + ec.message());
}

}  // namespace edgemap
