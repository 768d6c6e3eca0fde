#include "edgemap/transport/simnet.hpp"

#include <cmath>

#include "edgemap/error.hpp"
#include "edgemap/probe/modbus.hpp"

namespace edgemap {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void malformed_script(const std::string& what) { fail(ErrorCode::MalformedScript, what); }

Ipv4Address action_address(const SimAction& action) {
    return std::visit(overloaded{[](const sim::AddHost& a) { return a.spec.address; },
                                 [](const sim::SetLink&) { return Ipv4Address(); },
                                 [](const auto& a) { return a.address; }},
                      action);
}

}  // namespace

void SimHostSpec::validate() const {
    const auto where = " (sim host " + address.to_string() + ")";
    require(base_rtt > Micros::zero(), "base_rtt must be positive" + where);
    require(rtt_jitter >= Micros::zero(), "rtt_jitter must not be negative" + where);
    for (const auto& [port, banner] : open_ports) {
        require(port != 0, "port 0 cannot be open" + where);
        require(!filtered_ports.contains(port),
                "port " + std::to_string(port) + " is both open and filtered" + where);
        require(!banner || !banner->empty(), "empty banner; omit it instead" + where);
    }
    require(!filtered_ports.contains(0), "port 0 cannot be filtered" + where);
    require(modbus_objects.empty() || open_ports.contains(modbus::kDefaultPort),
            "Modbus identification needs port 502 open" + where);
}

Timestamp action_time(const SimAction& action) {
    return std::visit([](const auto& a) { return a.at; }, action);
}

SimScript::SimScript(std::vector<SimAction> actions) : actions_(std::move(actions)) {
    Timestamp previous{0};
    for (const auto& action : actions_) {
        auto at = action_time(action);
        if (at < Timestamp::zero()) malformed_script("action scheduled before time zero");
        if (at < previous) malformed_script("action times must be non-decreasing");
        previous = at;
        if (auto* f = std::get_if<sim::SetLatencyFactor>(&action); f && !(f->factor > 0.0))
            malformed_script("latency factor must be positive");
        if (auto* o = std::get_if<sim::OpenPort>(&action); o && (o->port == 0 || (o->banner && o->banner->empty())))
            malformed_script("open action needs a nonzero port and a nonempty banner when given");
        if (auto* c = std::get_if<sim::ClosePort>(&action); c && c->port == 0)
            malformed_script("close action needs a nonzero port");
    }
}

void SimScript::validate(const std::vector<SimHostSpec>& initial_hosts) const {
    std::set<Ipv4Address> live;
    for (const auto& h : initial_hosts) live.insert(h.address);
    for (const auto& action : actions_) {
        auto at = std::to_string(action_time(action).count()) + "us";
        if (auto* add = std::get_if<sim::AddHost>(&action)) {
            try {
                add->spec.validate();
            } catch (const Error& e) {
                malformed_script(e.what());
            }
            if (!live.insert(add->spec.address).second)
                malformed_script("host " + add->spec.address.to_string() + " added twice at " + at);
            continue;
        }
        if (std::holds_alternative<sim::SetLink>(action)) continue;
        auto address = action_address(action);
        if (!live.contains(address))
            malformed_script("action at " + at + " refers to absent host " + address.to_string());
        if (std::holds_alternative<sim::RemoveHost>(action)) live.erase(address);
    }
}

std::string_view to_string(PacketClass c) noexcept {
    switch (c) {
        case PacketClass::ArpRequest: return "arp_request";
        case PacketClass::ArpReply: return "arp_reply";
        case PacketClass::IcmpRequest: return "icmp_request";
        case PacketClass::IcmpReply: return "icmp_reply";
        case PacketClass::TcpSyn: return "tcp_syn";
        case PacketClass::TcpSynAck: return "tcp_synack";
        case PacketClass::TcpAck: return "tcp_ack";
        case PacketClass::TcpRst: return "tcp_rst";
        case PacketClass::TcpFin: return "tcp_fin";
        case PacketClass::BannerData: return "banner_data";
    }
    return "?";
}

std::uint64_t packet_class_size(PacketClass c) noexcept {
    switch (c) {
        case PacketClass::ArpRequest:
        case PacketClass::ArpReply: return 60;
        case PacketClass::IcmpRequest:
        case PacketClass::IcmpReply: return 74;
        case PacketClass::TcpSyn:
        case PacketClass::TcpSynAck:
        case PacketClass::TcpAck:
        case PacketClass::TcpRst:
        case PacketClass::TcpFin: return 60;
        case PacketClass::BannerData: return 0;
    }
    return 0;
}

bool is_tcp_control(PacketClass c) noexcept {
    return c == PacketClass::TcpSyn || c == PacketClass::TcpSynAck || c == PacketClass::TcpAck ||
           c == PacketClass::TcpRst || c == PacketClass::TcpFin;
}

bool is_discovery_request(PacketClass c) noexcept {
    return c == PacketClass::ArpRequest || c == PacketClass::IcmpRequest;
}

std::uint64_t ClassTotals::tcp_control_count() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < kPacketClassCount; ++i)
        if (is_tcp_control(static_cast<PacketClass>(i))) n += count[i];
    return n;
}

std::uint64_t ClassTotals::tcp_control_bytes() const {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < kPacketClassCount; ++i)
        if (is_tcp_control(static_cast<PacketClass>(i))) n += bytes[i];
    return n;
}

std::uint64_t ClassTotals::discovery_request_count() const {
    return count_of(PacketClass::ArpRequest) + count_of(PacketClass::IcmpRequest);
}

std::uint64_t ClassTotals::total_count() const {
    std::uint64_t n = 0;
    for (auto c : count) n += c;
    return n;
}

std::uint64_t ClassTotals::total_bytes() const {
    std::uint64_t n = 0;
    for (auto b : bytes) n += b;
    return n;
}

void SimCounters::record(Timestamp at, PacketClass c, std::uint64_t bytes) {
    const auto i = static_cast<std::size_t>(c);
    auto second = at.count() / 1000000;
    auto& bucket = per_second_[second];
    bucket.count[i] += 1;
    bucket.bytes[i] += bytes;
    cumulative_.count[i] += 1;
    cumulative_.bytes[i] += bytes;
}

SimNetwork::SimNetwork(std::vector<SimHostSpec> hosts, SimScript script, std::uint64_t seed, bool record_trace)
    : script_(std::move(script)), jitter_rng_(seed), record_trace_(record_trace) {
    for (const auto& h : hosts) {
        try {
            h.validate();
        } catch (const Error& e) {
            malformed_script(e.what());
        }
        if (!hosts_.emplace(h.address, HostState{h}).second)
            malformed_script("host " + h.address.to_string() + " declared twice");
    }
    script_.validate(hosts);
}

void SimNetwork::apply(const SimAction& action) {
    auto host_or_fail = [&](Ipv4Address a) -> HostState& {
        auto* h = find(a);
        if (!h) malformed_script("action refers to absent host " + a.to_string());
        return *h;
    };
    std::visit(overloaded{
                   [&](const sim::AddHost& a) {
                       if (!hosts_.emplace(a.spec.address, HostState{a.spec}).second)
                           malformed_script("host " + a.spec.address.to_string() + " added twice");
                   },
                   [&](const sim::RemoveHost& a) {
                       host_or_fail(a.address);
                       hosts_.erase(a.address);
                   },
                   [&](const sim::OpenPort& a) {
                       auto& h = host_or_fail(a.address);
                       h.spec.filtered_ports.erase(a.port);
                       h.spec.open_ports[a.port] = a.banner;
                   },
                   [&](const sim::ClosePort& a) {
                       auto& h = host_or_fail(a.address);
                       h.spec.open_ports.erase(a.port);
                       h.spec.filtered_ports.erase(a.port);
                   },
                   [&](const sim::SetLatencyFactor& a) { host_or_fail(a.address).latency_factor = a.factor; },
                   [&](const sim::SetIcmpEcho& a) { host_or_fail(a.address).spec.icmp_echo_enabled = a.enabled; },
                   [&](const sim::SetArp& a) { host_or_fail(a.address).spec.arp_enabled = a.enabled; },
                   [&](const sim::SetLink& a) { link_up_ = a.up; },
               },
               action);
}

void SimNetwork::apply_pending(Timestamp now) {
    const auto& actions = script_.actions();
    while (next_action_ < actions.size() && action_time(actions[next_action_]) <= now) {
        apply(actions[next_action_]);
        ++next_action_;
    }
}

std::size_t SimNetwork::advance(Timestamp until) {
    require(until >= clock_.now(), "cannot advance the simulated network backwards in time");
    const auto before = next_action_;
    apply_pending(until);
    clock_.advance_to(until);
    return next_action_ - before;
}

SimNetwork::HostState* SimNetwork::find(Ipv4Address address) {
    auto it = hosts_.find(address);
    return it == hosts_.end() ? nullptr : &it->second;
}

void SimNetwork::ensure_link(Ipv4Address target) {
    if (!link_up_) fail(ErrorCode::TransportDown, "simulated link is down (probe to " + target.to_string() + ")");
}

Micros SimNetwork::draw_rtt(const HostState& host) {
    auto base = static_cast<std::int64_t>(
        std::llround(static_cast<double>(host.spec.base_rtt.count()) * host.latency_factor));
    std::int64_t jitter = 0;
    if (host.spec.rtt_jitter > Micros::zero())
        jitter = static_cast<std::int64_t>(
            jitter_rng_.uniform_below(static_cast<std::uint64_t>(host.spec.rtt_jitter.count()) + 1));
    return Micros(base + jitter);
}

std::uint64_t SimNetwork::begin_probe() {
    auto now = clock_.now();
    apply_pending(now);
    return ++probe_counter_;
}

void SimNetwork::emit(Timestamp at, PacketClass cls, Direction dir, Ipv4Address peer, Port port,
                      std::uint64_t bytes) {
    std::lock_guard lock(stats_mutex_);
    counters_.record(at, cls, bytes);
    if (record_trace_) trace_.push_back({at, cls, dir, peer, port, bytes, probe_counter_});
}

EchoResult SimNetwork::arp_probe(Ipv4Address target, Micros timeout) {
    begin_probe();
    ensure_link(target);
    const auto t = clock_.now();
    emit(t, PacketClass::ArpRequest, Direction::ToTarget, target, 0, packet_class_size(PacketClass::ArpRequest));
    if (auto* h = find(target); h && h->spec.arp_enabled) {
        auto rtt = draw_rtt(*h);
        if (rtt <= timeout) {
            emit(t + rtt, PacketClass::ArpReply, Direction::FromTarget, target, 0,
                 packet_class_size(PacketClass::ArpReply));
            clock_.advance_to(t + rtt);
            return {true, rtt};
        }
    }
    clock_.advance_to(t + timeout);
    return {};
}

EchoResult SimNetwork::icmp_ping(Ipv4Address target, Micros timeout) {
    begin_probe();
    ensure_link(target);
    const auto t = clock_.now();
    emit(t, PacketClass::IcmpRequest, Direction::ToTarget, target, 0, packet_class_size(PacketClass::IcmpRequest));
    if (auto* h = find(target); h && h->spec.icmp_echo_enabled) {
        auto rtt = draw_rtt(*h);
        if (rtt <= timeout) {
            emit(t + rtt, PacketClass::IcmpReply, Direction::FromTarget, target, 0,
                 packet_class_size(PacketClass::IcmpReply));
            clock_.advance_to(t + rtt);
            return {true, rtt};
        }
    }
    clock_.advance_to(t + timeout);
    return {};
}

ConnectResult SimNetwork::tcp_connect(Ipv4Address target, Port port, const ConnectOptions& options) {
    begin_probe();
    ensure_link(target);
    const auto t = clock_.now();
    const auto ctl = packet_class_size(PacketClass::TcpSyn);
    emit(t, PacketClass::TcpSyn, Direction::ToTarget, target, port, ctl);

    auto* h = find(target);
    std::optional<Micros> rtt;
    if (h && !h->spec.filtered_ports.contains(port)) {
        rtt = draw_rtt(*h);
        if (*rtt > options.timeout) rtt.reset();
    }
    if (!rtt) {
        clock_.advance_to(t + options.timeout);
        return {PortState::Filtered, std::nullopt, options.timeout};
    }

    const auto reply_at = t + *rtt;
    auto open = h->spec.open_ports.find(port);
    if (open == h->spec.open_ports.end()) {
        emit(reply_at, PacketClass::TcpRst, Direction::FromTarget, target, port, ctl);
        clock_.advance_to(reply_at);
        return {PortState::Closed, std::nullopt, *rtt};
    }

    emit(reply_at, PacketClass::TcpSynAck, Direction::FromTarget, target, port, ctl);
    emit(reply_at, PacketClass::TcpAck, Direction::ToTarget, target, port, ctl);
    ConnectResult result{PortState::Open, std::nullopt, *rtt};
    auto done = reply_at;
    if (options.banner_grab) {
        if (const auto& banner = open->second) {
            emit(reply_at, PacketClass::BannerData, Direction::FromTarget, target, port,
                 banner->size() + kPayloadFramingBytes);
            auto n = std::min(banner->size(), options.banner_max_bytes);
            result.banner = Bytes(banner->begin(), banner->begin() + static_cast<std::ptrdiff_t>(n));
        } else {
            // Nothing arrives; the read gives up after the timeout.
            done = reply_at + options.timeout;
        }
    }
    emit(done, PacketClass::TcpRst, Direction::ToTarget, target, port, ctl);
    clock_.advance_to(done);
    return result;
}

PortState SimNetwork::tcp_syn(Ipv4Address target, Port port, Micros timeout) {
    begin_probe();
    ensure_link(target);
    const auto t = clock_.now();
    const auto ctl = packet_class_size(PacketClass::TcpSyn);
    emit(t, PacketClass::TcpSyn, Direction::ToTarget, target, port, ctl);

    auto* h = find(target);
    std::optional<Micros> rtt;
    if (h && !h->spec.filtered_ports.contains(port)) {
        rtt = draw_rtt(*h);
        if (*rtt > timeout) rtt.reset();
    }
    if (!rtt) {
        clock_.advance_to(t + timeout);
        return PortState::Filtered;
    }
    const auto reply_at = t + *rtt;
    if (!h->spec.open_ports.contains(port)) {
        emit(reply_at, PacketClass::TcpRst, Direction::FromTarget, target, port, ctl);
        clock_.advance_to(reply_at);
        return PortState::Closed;
    }
    emit(reply_at, PacketClass::TcpSynAck, Direction::FromTarget, target, port, ctl);
    emit(reply_at, PacketClass::TcpRst, Direction::ToTarget, target, port, ctl);
    clock_.advance_to(reply_at);
    return PortState::Open;
}

std::optional<Bytes> SimNetwork::application_reply(const HostState& host, Port port,
                                                   std::span<const std::uint8_t> request) {
    if (port == modbus::kDefaultPort && !host.spec.modbus_objects.empty()) {
        auto req = modbus::decode_request(request);
        if (!req) return Bytes{};
        if (req->read_code < 1 || req->read_code > 3) return modbus::encode_exception(req->transaction_id, req->unit_id, 0x03);
        const std::uint8_t last = req->read_code == 1 ? 0x02 : req->read_code == 2 ? 0x7F : 0xFF;
        modbus::DeviceIdResponse resp;
        resp.transaction_id = req->transaction_id;
        resp.unit_id = req->unit_id;
        resp.read_code = req->read_code;
        resp.conformity = 0x01;
        for (const auto& [id, value] : host.spec.modbus_objects)
            if (id >= req->object_id && id <= last) resp.objects.emplace_back(id, value);
        return modbus::encode_response(resp);
    }
    const auto& banner = host.spec.open_ports.at(port);
    return banner ? *banner : Bytes{};
}

std::optional<Bytes> SimNetwork::tcp_exchange(Ipv4Address target, Port port, std::span<const std::uint8_t> request,
                                              Micros timeout) {
    begin_probe();
    ensure_link(target);
    const auto t = clock_.now();
    const auto ctl = packet_class_size(PacketClass::TcpSyn);
    emit(t, PacketClass::TcpSyn, Direction::ToTarget, target, port, ctl);

    auto* h = find(target);
    std::optional<Micros> rtt;
    if (h && !h->spec.filtered_ports.contains(port)) {
        rtt = draw_rtt(*h);
        if (*rtt > timeout) rtt.reset();
    }
    if (!rtt) {
        clock_.advance_to(t + timeout);
        return std::nullopt;
    }
    const auto reply_at = t + *rtt;
    if (!h->spec.open_ports.contains(port)) {
        emit(reply_at, PacketClass::TcpRst, Direction::FromTarget, target, port, ctl);
        clock_.advance_to(reply_at);
        return std::nullopt;
    }
    emit(reply_at, PacketClass::TcpSynAck, Direction::FromTarget, target, port, ctl);
    emit(reply_at, PacketClass::TcpAck, Direction::ToTarget, target, port, ctl);
    emit(reply_at, PacketClass::BannerData, Direction::ToTarget, target, port, request.size() + kPayloadFramingBytes);
    auto reply = application_reply(*h, port, request);
    auto done = reply_at + *rtt;
    if (reply->empty()) {
        done = reply_at + timeout;
    } else {
        emit(done, PacketClass::BannerData, Direction::FromTarget, target, port, reply->size() + kPayloadFramingBytes);
    }
    emit(done, PacketClass::TcpRst, Direction::ToTarget, target, port, ctl);
    clock_.advance_to(done);
    return reply;
}

SimCounters SimNetwork::counters() const {
    std::lock_guard lock(stats_mutex_);
    return counters_;
}

std::vector<PacketRecord> SimNetwork::trace() const {
    std::lock_guard lock(stats_mutex_);
    return trace_;
}

std::optional<SimHostSpec> SimNetwork::host(Ipv4Address address) const {
    auto it = hosts_.find(address);
    if (it == hosts_.end()) return std::nullopt;
    return it->second.spec;
}

double SimNetwork::latency_factor(Ipv4Address address) const {
    auto it = hosts_.find(address);
    return it == hosts_.end() ? 1.0 : it->second.latency_factor;
}

}  // namespace edgemap
