#include "edgemap/transport/os_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <random>
#include <utility>

#include "edgemap/error.hpp"

namespace edgemap {

namespace {

using SteadyPoint = std::chrono::steady_clock::time_point;

class Fd {
public:
    explicit Fd(int fd = -1) : fd_(fd) {}
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    void reset(int fd) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = fd;
    }
    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

private:
    int fd_;
};

sockaddr_in sockaddr_of(Ipv4Address a, Port port = 0) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    sa.sin_addr.s_addr = htonl(a.value());
    return sa;
}

int remaining_ms(SteadyPoint deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    return left.count() < 0 ? 0 : static_cast<int>(left.count()) + 1;
}

bool wait_for(int fd, short events, SteadyPoint deadline) {
    while (true) {
        pollfd p{fd, events, 0};
        int rc = ::poll(&p, 1, remaining_ms(deadline));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) return false;
        return true;
    }
}

bool network_gone(int err) { return err == ENETUNREACH || err == ENETDOWN; }

[[noreturn]] void transport_down(const std::string& what, int err) {
    fail(ErrorCode::TransportDown, what + ": " + std::strerror(err));
}

std::uint16_t inet_checksum(const std::uint8_t* data, std::size_t len, std::uint32_t sum = 0) {
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
    if (len & 1) sum += std::uint32_t{data[len - 1]} << 8;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

void put16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
}
void put32(std::uint8_t* p, std::uint32_t v) {
    put16(p, static_cast<std::uint16_t>(v >> 16));
    put16(p + 2, static_cast<std::uint16_t>(v));
}
std::uint16_t get16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }
std::uint32_t get32(const std::uint8_t* p) { return (std::uint32_t{get16(p)} << 16) | get16(p + 2); }

std::uint32_t random_u32() {
    static thread_local std::mt19937 gen{std::random_device{}()};
    return gen();
}

// Outcome of a non-blocking connect bounded by a deadline.
enum class ConnectOutcome { Connected, Refused, NoAnswer };

ConnectOutcome connect_until(int fd, Ipv4Address target, Port port, SteadyPoint deadline) {
    auto sa = sockaddr_of(target, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0) return ConnectOutcome::Connected;
    int err = errno;
    if (err == EINPROGRESS) {
        if (!wait_for(fd, POLLOUT, deadline)) return ConnectOutcome::NoAnswer;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err == 0) return ConnectOutcome::Connected;
    }
    if (err == ECONNREFUSED) return ConnectOutcome::Refused;
    if (network_gone(err)) transport_down("connect to " + target.to_string(), err);
    return ConnectOutcome::NoAnswer;  // EHOSTUNREACH, ETIMEDOUT and friends
}

Fd stream_socket() {
    Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0));
    if (!fd.valid()) transport_down("cannot open TCP socket", errno);
    return fd;
}

void reset_on_close(int fd) {
    linger l{1, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_LINGER, &l, sizeof l);
}

Ipv4Address source_address_for(Ipv4Address target) {
    Fd probe(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!probe.valid()) transport_down("cannot open UDP socket", errno);
    auto sa = sockaddr_of(target, 9);
    if (::connect(probe.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
        transport_down("no route to " + target.to_string(), errno);
    sockaddr_in local{};
    socklen_t len = sizeof local;
    ::getsockname(probe.get(), reinterpret_cast<sockaddr*>(&local), &len);
    return Ipv4Address(ntohl(local.sin_addr.s_addr));
}

std::array<std::uint8_t, 20> tcp_header(Ipv4Address src, Ipv4Address dst, Port sport, Port dport, std::uint32_t seq,
                                        std::uint8_t flags) {
    std::array<std::uint8_t, 20> h{};
    put16(&h[0], sport);
    put16(&h[2], dport);
    put32(&h[4], seq);
    h[12] = 5 << 4;
    h[13] = flags;
    put16(&h[14], 1024);
    std::uint8_t pseudo[12];
    put32(pseudo, src.value());
    put32(pseudo + 4, dst.value());
    pseudo[8] = 0;
    pseudo[9] = IPPROTO_TCP;
    put16(pseudo + 10, 20);
    std::uint32_t sum = 0;
    for (int i = 0; i < 12; i += 2) sum += get16(pseudo + i);
    put16(&h[16], inet_checksum(h.data(), h.size(), sum));
    return h;
}

constexpr std::uint8_t kFin = 0x01, kSyn = 0x02, kRst = 0x04, kAck = 0x10;

}  // namespace

OsTransport::OsTransport() : echo_id_(static_cast<std::uint16_t>(random_u32())) {
    Fd raw(::socket(AF_INET, SOCK_RAW | SOCK_CLOEXEC, IPPROTO_TCP));
    caps_.supports_raw_syn = raw.valid();
    caps_.supports_arp = false;
}

EchoResult OsTransport::arp_probe(Ipv4Address, Micros) {
    fail(ErrorCode::CapabilityUnsupported, "ARP probing is not available on the OS backend");
}

EchoResult OsTransport::icmp_ping(Ipv4Address target, Micros timeout) {
    bool raw = true;
    Fd fd(::socket(AF_INET, SOCK_RAW | SOCK_CLOEXEC, IPPROTO_ICMP));
    if (!fd.valid()) {
        raw = false;
        fd.reset(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, IPPROTO_ICMP));
    }
    if (!fd.valid()) transport_down("cannot open an ICMP socket", errno);

    const auto seq = ++echo_seq_;
    std::array<std::uint8_t, 24> pkt{};
    pkt[0] = 8;  // echo request
    put16(&pkt[4], echo_id_);
    put16(&pkt[6], seq);
    std::memcpy(&pkt[8], "edgemap-echo-pad", 16);
    put16(&pkt[2], inet_checksum(pkt.data(), pkt.size()));

    auto sa = sockaddr_of(target);
    const auto sent = std::chrono::steady_clock::now();
    const auto deadline = sent + timeout;
    if (::sendto(fd.get(), pkt.data(), pkt.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) {
        if (network_gone(errno)) transport_down("echo to " + target.to_string(), errno);
        return {};
    }
    std::array<std::uint8_t, 1500> buf;
    while (wait_for(fd.get(), POLLIN, deadline)) {
        sockaddr_in from{};
        socklen_t flen = sizeof from;
        auto n = ::recvfrom(fd.get(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &flen);
        if (n <= 0) continue;
        if (ntohl(from.sin_addr.s_addr) != target.value()) continue;
        std::size_t off = raw ? static_cast<std::size_t>(buf[0] & 0x0f) * 4 : 0;
        if (static_cast<std::size_t>(n) < off + 8) continue;
        const auto* icmp = buf.data() + off;
        if (icmp[0] != 0 || get16(icmp + 6) != seq) continue;
        if (raw && get16(icmp + 4) != echo_id_) continue;  // datagram sockets rewrite the id
        return {true, std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now() - sent)};
    }
    return {};
}

ConnectResult OsTransport::tcp_connect(Ipv4Address target, Port port, const ConnectOptions& options) {
    auto fd = stream_socket();
    const auto start = std::chrono::steady_clock::now();
    ConnectResult result;
    switch (connect_until(fd.get(), target, port, start + options.timeout)) {
        case ConnectOutcome::Refused: result.state = PortState::Closed; return result;
        case ConnectOutcome::NoAnswer: result.state = PortState::Filtered; return result;
        case ConnectOutcome::Connected: break;
    }
    result.state = PortState::Open;
    result.rtt = std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now() - start);
    if (options.banner_grab && options.banner_max_bytes > 0) {
        auto deadline = std::chrono::steady_clock::now() + options.timeout;
        Bytes banner(options.banner_max_bytes);
        std::size_t got = 0;
        // Wait the full timeout for the first bytes, then only briefly for more.
        auto next_wait = [&] { return got == 0 ? deadline : std::chrono::steady_clock::now() + std::chrono::milliseconds(20); };
        while (got < banner.size() && wait_for(fd.get(), POLLIN, next_wait())) {
            auto n = ::recv(fd.get(), banner.data() + got, banner.size() - got, 0);
            if (n <= 0) break;
            got += static_cast<std::size_t>(n);
        }
        if (got > 0) {
            banner.resize(got);
            result.banner = std::move(banner);
        }
    }
    reset_on_close(fd.get());
    return result;
}

PortState OsTransport::tcp_syn(Ipv4Address target, Port port, Micros timeout) {
    if (!caps_.supports_raw_syn) fail(ErrorCode::CapabilityUnsupported, "SYN probes need a raw socket");
    Fd fd(::socket(AF_INET, SOCK_RAW | SOCK_CLOEXEC, IPPROTO_TCP));
    if (!fd.valid()) fail(ErrorCode::CapabilityUnsupported, std::string("raw TCP socket: ") + std::strerror(errno));

    const auto src = source_address_for(target);
    const auto sport = static_cast<Port>(32768 + random_u32() % 28000);
    const auto seq = random_u32();
    auto syn = tcp_header(src, target, sport, port, seq, kSyn);
    auto sa = sockaddr_of(target);
    if (::sendto(fd.get(), syn.data(), syn.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) {
        if (network_gone(errno)) transport_down("SYN to " + target.to_string(), errno);
        return PortState::Filtered;
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::array<std::uint8_t, 1500> buf;
    while (wait_for(fd.get(), POLLIN, deadline)) {
        auto n = ::recv(fd.get(), buf.data(), buf.size(), 0);
        if (n < 20) continue;
        const std::size_t ihl = static_cast<std::size_t>(buf[0] & 0x0f) * 4;
        if (static_cast<std::size_t>(n) < ihl + 20 || get32(&buf[12]) != target.value()) continue;
        const auto* tcp = buf.data() + ihl;
        if (get16(tcp) != port || get16(tcp + 2) != sport) continue;
        const auto flags = tcp[13];
        if ((flags & (kSyn | kAck)) == (kSyn | kAck)) {
            auto rst = tcp_header(src, target, sport, port, get32(tcp + 8), kRst);
            ::sendto(fd.get(), rst.data(), rst.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
            return PortState::Open;
        }
        if (flags & kRst) return PortState::Closed;
        if (flags & kFin) continue;
    }
    return PortState::Filtered;
}

std::optional<Bytes> OsTransport::tcp_exchange(Ipv4Address target, Port port, std::span<const std::uint8_t> request,
                                               Micros timeout) {
    auto fd = stream_socket();
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    if (connect_until(fd.get(), target, port, deadline) != ConnectOutcome::Connected) return std::nullopt;

    std::size_t off = 0;
    while (off < request.size()) {
        if (!wait_for(fd.get(), POLLOUT, deadline)) return Bytes{};
        auto n = ::send(fd.get(), request.data() + off, request.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EAGAIN || errno == EINTR) continue;
            return Bytes{};
        }
        off += static_cast<std::size_t>(n);
    }
    // The first chunk may take up to the timeout; after that a short quiet
    // gap ends the reply.
    Bytes reply;
    std::array<std::uint8_t, 1024> buf;
    while (wait_for(fd.get(), POLLIN,
                    reply.empty() ? deadline : std::chrono::steady_clock::now() + std::chrono::milliseconds(50))) {
        auto n = ::recv(fd.get(), buf.data(), buf.size(), 0);
        if (n <= 0) break;
        reply.insert(reply.end(), buf.begin(), buf.begin() + n);
        if (reply.size() > 4096) break;
    }
    return reply;
}

}  // namespace edgemap
