#include "edgemap/sink/event_sink.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <map>

#include "edgemap/core/text.hpp"
#include "edgemap/error.hpp"

namespace edgemap {

std::string_view to_string(Severity s) noexcept {
    switch (s) {
        case Severity::Info: return "info";
        case Severity::Warning: return "warning";
        case Severity::Alert: return "alert";
    }
    return "?";
}

std::optional<Severity> parse_severity(std::string_view text) {
    for (auto s : {Severity::Info, Severity::Warning, Severity::Alert})
        if (to_string(s) == text) return s;
    return std::nullopt;
}

namespace {

UdpOutput parse_host_port(std::string_view text) {
    auto colon = text.rfind(':');
    require(colon != std::string_view::npos && colon > 0, "logger address must be host:port, got '" + std::string(text) + "'");
    unsigned port = 0;
    auto digits = text.substr(colon + 1);
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    require(!digits.empty() && ec == std::errc{} && end == digits.data() + digits.size() && port <= 65535,
            "bad logger port in '" + std::string(text) + "'");
    return {std::string(text.substr(0, colon)), static_cast<Port>(port)};
}

struct Field {
    std::string key;
    std::string value;
};

std::string render(const std::vector<Field>& fields) {
    std::string line;
    for (const auto& f : fields) {
        if (!line.empty()) line += ' ';
        line += f.key;
        line += '=';
        line += text::encode_value(f.value);
    }
    return line;
}

std::string render_within(std::vector<Field> fields, std::size_t max_bytes) {
    auto line = render(fields);
    while (line.size() > max_bytes) {
        Field* longest = nullptr;
        for (auto& f : fields)
            if (!f.value.empty() && (!longest || text::encode_value(f.value).size() > text::encode_value(longest->value).size()))
                longest = &f;
        if (!longest) break;  // keys alone exceed the budget
        auto excess = line.size() - max_bytes;
        longest->value.resize(longest->value.size() - std::min(longest->value.size(), excess));
        line = render(fields);
    }
    return line;
}

std::vector<Field> common_fields(std::string_view node_id, std::uint64_t epoch, Timestamp ts) {
    return {{"node", std::string(node_id)}, {"epoch", std::to_string(epoch)}, {"ts", std::to_string(ts.count())}};
}

template <class Int>
Int to_int(const std::string& s, const char* what) {
    Int v{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(!s.empty() && ec == std::errc{} && end == s.data() + s.size(), std::string("bad ") + what + " '" + s + "'");
    return v;
}

}  // namespace

OutputSpec parse_output_spec(std::string_view text) {
    if (text == "stdout") return StdoutOutput{};
    if (text.starts_with("file:") && text.size() > 5) return FileOutput{std::filesystem::path(std::string(text.substr(5)))};
    if (text.starts_with("udp:")) return parse_host_port(text.substr(4));
    fail(ErrorCode::InvalidArgument, "unknown sink '" + std::string(text) + "' (stdout, file:<path>, udp:<host>:<port>)");
}

std::string describe(const OutputSpec& spec) {
    if (std::holds_alternative<StdoutOutput>(spec)) return "stdout";
    if (auto* f = std::get_if<FileOutput>(&spec)) return "file:" + f->path.string();
    const auto& u = std::get<UdpOutput>(spec);
    return "udp:" + u.host + ":" + std::to_string(u.port);
}

std::optional<UdpOutput> logger_from_env() {
    const char* v = std::getenv("EDGEMAP_LOGGER");
    if (!v || !*v) return std::nullopt;
    return parse_host_port(v);
}

void SinkConfig::validate() const {
    require(!outputs.empty(), "at least one sink output is required");
    require(!node_id.empty(), "node_id must not be empty");
}

std::string format_event_line(std::string_view node_id, const IntrusionEvent& event, Timestamp ts,
                              std::size_t max_bytes) {
    auto fields = common_fields(node_id, event.scan_epoch(), ts);
    fields.push_back({"kind", std::string(to_string(event.kind()))});
    fields.push_back({"addr", event.address().to_string()});
    if (event.port()) fields.push_back({"port", std::to_string(*event.port())});
    fields.push_back({"baseline", event.baseline_value()});
    fields.push_back({"observed", event.observed_value()});
    return render_within(std::move(fields), max_bytes);
}

std::string format_event_line(std::string_view node_id, const OperationalEvent& event, Timestamp ts,
                              std::size_t max_bytes) {
    auto fields = common_fields(node_id, event.epoch, ts);
    fields.push_back({"kind", "Operational"});
    fields.push_back({"severity", std::string(to_string(event.severity))});
    fields.push_back({"code", event.code});
    fields.push_back({"message", event.message});
    return render_within(std::move(fields), max_bytes);
}

ParsedEventLine parse_event_line(std::string_view line) {
    std::map<std::string, std::string> kv;
    for (const auto& word : text::split_words(line)) {
        auto [k, v] = text::split_key_value(word);
        require(word.find('=') != std::string::npos, "event field without '=': " + word);
        require(kv.emplace(k, v).second, "duplicate event field '" + k + "'");
    }
    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        require(it != kv.end(), std::string("event line lacks '") + key + "'");
        auto v = std::move(it->second);
        kv.erase(it);
        return v;
    };

    ParsedEventLine out{take("node"), Timestamp{to_int<std::int64_t>(take("ts"), "timestamp")},
                        OperationalEvent{}};
    auto epoch = to_int<std::uint64_t>(take("epoch"), "epoch");
    auto kind_text = take("kind");
    if (kind_text == "Operational") {
        auto sev = parse_severity(take("severity"));
        require(sev.has_value(), "bad severity");
        out.event = OperationalEvent{*sev, take("code"), take("message"), epoch};
    } else {
        auto kind = parse_event_kind(kind_text);
        require(kind.has_value(), "unknown event kind '" + kind_text + "'");
        auto addr = Ipv4Address::from_string(take("addr"));
        std::optional<Port> port;
        if (kv.count("port")) port = to_int<Port>(take("port"), "port");
        auto baseline = take("baseline");
        auto observed = take("observed");
        out.event = IntrusionEvent(*kind, addr, port, std::move(baseline), std::move(observed), epoch);
    }
    require(kv.empty(), "unexpected event field '" + (kv.empty() ? std::string() : kv.begin()->first) + "'");
    return out;
}

bool DeliveryReport::any_delivered() const {
    for (const auto& o : outputs)
        if (o.delivered) return true;
    return false;
}

bool DeliveryReport::all_delivered() const {
    for (const auto& o : outputs)
        if (!o.delivered) return false;
    return !outputs.empty();
}

// One destination. Each write is a single call on the underlying stream,
// descriptor or socket, under a per-output lock, so lines never interleave.
struct EventSink::Output {
    std::string name;
    std::mutex mutex;
    std::ostream* stream = nullptr;
    int fd = -1;
    bool datagram = false;
    sockaddr_in peer{};
    std::string setup_error;

    ~Output() {
        if (fd >= 0) ::close(fd);
    }

    std::string write(const std::string& line) {
        std::lock_guard lock(mutex);
        if (!setup_error.empty()) return setup_error;
        if (stream) {
            std::string framed = line + '\n';
            stream->write(framed.data(), static_cast<std::streamsize>(framed.size()));
            stream->flush();
            if (!*stream) {
                stream->clear();
                return "stream write failed";
            }
            return {};
        }
        if (datagram) {
            auto n = ::sendto(fd, line.data(), line.size(), MSG_NOSIGNAL, reinterpret_cast<const sockaddr*>(&peer),
                              sizeof peer);
            if (n < 0) return std::strerror(errno);
            return {};
        }
        std::string framed = line + '\n';
        // O_APPEND makes one write() one contiguous record even with other writers.
        while (true) {
            auto n = ::write(fd, framed.data(), framed.size());
            if (n < 0 && errno == EINTR) continue;
            if (n < 0) return std::strerror(errno);
            if (static_cast<std::size_t>(n) != framed.size()) return "short write";
            return {};
        }
    }
};

std::unique_ptr<EventSink::Output> EventSink::open_output(const OutputSpec& spec) {
    auto out = std::make_unique<EventSink::Output>();
    out->name = describe(spec);
    if (auto* s = std::get_if<StdoutOutput>(&spec)) {
        out->stream = s->stream ? s->stream : &std::cout;
    } else if (auto* f = std::get_if<FileOutput>(&spec)) {
        out->fd = ::open(f->path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
        if (out->fd < 0) out->setup_error = std::string("cannot open: ") + std::strerror(errno);
    } else {
        const auto& u = std::get<UdpOutput>(spec);
        out->datagram = true;
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_DGRAM;
        addrinfo* res = nullptr;
        int rc = ::getaddrinfo(u.host.c_str(), nullptr, &hints, &res);
        if (rc != 0 || !res) {
            out->setup_error = std::string("cannot resolve logger: ") + ::gai_strerror(rc);
        } else {
            out->peer = *reinterpret_cast<const sockaddr_in*>(res->ai_addr);
            out->peer.sin_port = htons(u.port);
            ::freeaddrinfo(res);
            out->fd = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
            if (out->fd < 0) out->setup_error = std::string("cannot open socket: ") + std::strerror(errno);
        }
    }
    return out;
}

EventSink::EventSink(SinkConfig config) : config_(std::move(config)) {
    config_.validate();
    for (const auto& spec : config_.outputs) outputs_.push_back(open_output(spec));
}

EventSink::~EventSink() = default;

DeliveryReport EventSink::deliver(Severity severity, const std::function<std::string(std::size_t)>& render_line) {
    DeliveryReport report;
    if (severity < config_.min_severity) {
        report.filtered = true;
        return report;
    }
    std::string full;
    for (auto& out : outputs_) {
        std::string line;
        if (out->datagram) {
            line = render_line(kMaxDatagram);
        } else {
            if (full.empty()) full = render_line(std::string::npos);
            line = full;
        }
        auto error = out->write(line);
        report.outputs.push_back({out->name, error.empty(), std::move(error)});
    }
    return report;
}

DeliveryReport EventSink::emit(const IntrusionEvent& event, Timestamp ts) {
    return deliver(Severity::Alert,
                   [&](std::size_t budget) { return format_event_line(config_.node_id, event, ts, budget); });
}

DeliveryReport EventSink::emit(const OperationalEvent& event, Timestamp ts) {
    return deliver(event.severity,
                   [&](std::size_t budget) { return format_event_line(config_.node_id, event, ts, budget); });
}

void EventSink::set_safe_state_hook(std::set<EventKind> triggers, SafeStateHook hook) {
    std::lock_guard lock(hook_mutex_);
    triggers_ = std::move(triggers);
    hook_ = std::move(hook);
}

bool EventSink::finish_epoch(std::uint64_t epoch, const std::vector<IntrusionEvent>& events, Timestamp ts) {
    SafeStateHook hook;
    {
        std::lock_guard lock(hook_mutex_);
        if (!hook_ || triggers_.empty() || last_hook_epoch_ == epoch) return false;
        bool triggered = false;
        for (const auto& e : events) triggered = triggered || triggers_.count(e.kind()) > 0;
        if (!triggered) return false;
        last_hook_epoch_ = epoch;
        ++hook_invocations_;
        hook = hook_;
    }
    try {
        hook(epoch, events);
    } catch (const std::exception& e) {
        emit(OperationalEvent{Severity::Warning, "safe-state-hook-failed", e.what(), epoch}, ts);
    } catch (...) {
        emit(OperationalEvent{Severity::Warning, "safe-state-hook-failed", "unknown exception", epoch}, ts);
    }
    return true;
}

std::uint64_t EventSink::hook_invocations() const {
    std::lock_guard lock(hook_mutex_);
    return hook_invocations_;
}

}  // namespace edgemap
