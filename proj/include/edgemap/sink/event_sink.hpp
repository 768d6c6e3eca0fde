#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgemap/core/model.hpp"

namespace edgemap {

enum class Severity { Info, Warning, Alert };

std::string_view to_string(Severity s) noexcept;
std::optional<Severity> parse_severity(std::string_view text);

/// Non-intrusion news from the scanner itself: store or transport trouble,
/// lifecycle notes.
struct OperationalEvent {
    Severity severity = Severity::Info;
    std::string code;
    std::string message;
    std::uint64_t epoch = 0;

    bool operator==(const OperationalEvent&) const = default;
};

struct StdoutOutput {
    std::ostream* stream = nullptr;  // nullptr means std::cout
};
struct FileOutput {
    std::filesystem::path path;
};
struct UdpOutput {
    std::string host;
    Port port = 0;
};
using OutputSpec = std::variant<StdoutOutput, FileOutput, UdpOutput>;

/// "stdout", "file:<path>" or "udp:<host>:<port>". Throws Error(InvalidArgument).
OutputSpec parse_output_spec(std::string_view text);
std::string describe(const OutputSpec& spec);

/// The logger address from EDGEMAP_LOGGER ("host:port"), if set.
std::optional<UdpOutput> logger_from_env();

struct SinkConfig {
    std::vector<OutputSpec> outputs;
    Severity min_severity = Severity::Info;
    std::string node_id = "edgemap";

    void validate() const;
};

/// Largest UDP payload the sink sends; longer lines lose value bytes, never keys.
inline constexpr std::size_t kMaxDatagram = 512;

/// One event per line:
///   node=<id> epoch=<n> ts=<us> kind=<EventKind> addr=<ip> [port=<p>] baseline=<v> observed=<v>
///   node=<id> epoch=<n> ts=<us> kind=Operational severity=<s> code=<c> message=<m>
/// Values are quoted and escaped when needed. With a byte budget the longest
/// values are cut until the line fits.
std::string format_event_line(std::string_view node_id, const IntrusionEvent& event, Timestamp ts,
                              std::size_t max_bytes = std::string::npos);
std::string format_event_line(std::string_view node_id, const OperationalEvent& event, Timestamp ts,
                              std::size_t max_bytes = std::string::npos);

struct ParsedEventLine {
    std::string node_id;
    Timestamp ts{0};
    std::variant<IntrusionEvent, OperationalEvent> event;
};

/// Throws Error(InvalidArgument) on lines that are not event lines.
ParsedEventLine parse_event_line(std::string_view line);

struct OutputReport {
    std::string output;
    bool delivered = false;
    std::string error;
};

struct DeliveryReport {
    bool filtered = false;  // below min_severity, nothing sent
    std::vector<OutputReport> outputs;

    bool any_delivered() const;
    bool all_delivered() const;
};

using SafeStateHook = std::function<void(std::uint64_t epoch, const std::vector<IntrusionEvent>& events)>;

/// Fans events out to every configured output. Output failures end up in the
/// delivery report and never propagate. Safe to call from several threads;
/// each output is written one whole line at a time.
class EventSink {
public:
    explicit EventSink(SinkConfig config);
    ~EventSink();
    EventSink(const EventSink&) = delete;
    EventSink& operator=(const EventSink&) = delete;

    const SinkConfig& config() const { return config_; }

    DeliveryReport emit(const IntrusionEvent& event, Timestamp ts);
    DeliveryReport emit(const OperationalEvent& event, Timestamp ts);

    /// Registers the callback run when an epoch contains a trigger kind.
    /// An empty trigger set disables it.
    void set_safe_state_hook(std::set<EventKind> triggers, SafeStateHook hook);

    /// Call after all of an epoch's events were emitted. Runs the hook at
    /// most once per epoch; a throwing hook is reported as an operational
    /// event. Returns whether the hook ran.
    bool finish_epoch(std::uint64_t epoch, const std::vector<IntrusionEvent>& events, Timestamp ts);

    std::uint64_t hook_invocations() const;

private:
    struct Output;
    static std::unique_ptr<Output> open_output(const OutputSpec& spec);
    DeliveryReport deliver(Severity severity, const std::function<std::string(std::size_t)>& render);

    SinkConfig config_;
    std::vector<std::unique_ptr<Output>> outputs_;
    mutable std::mutex hook_mutex_;
    std::set<EventKind> triggers_;
    SafeStateHook hook_;
    std::optional<std::uint64_t> last_hook_epoch_;
    std::uint64_t hook_invocations_ = 0;
};

}  // namespace edgemap
