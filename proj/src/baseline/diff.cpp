#include "edgemap/baseline/diff.hpp"

#include <algorithm>
#include <tuple>

#include "edgemap/baseline/fingerprint_io.hpp"
#include "edgemap/core/config_io.hpp"
#include "edgemap/core/text.hpp"
#include "edgemap/error.hpp"
#include "edgemap/probe/engine.hpp"

namespace edgemap {

namespace {

const HostRecord* present(const NetworkFingerprint& fp, Ipv4Address a) {
    auto it = fp.hosts().find(a);
    if (it == fp.hosts().end() || it->second.alive() == AliveState::Down) return nullptr;
    return &it->second;
}

std::string banner_text(const HostRecord& h, Port p) {
    auto it = h.banners().find(p);
    return it == h.banners().end() ? std::string{} : text::escape(to_text(it->second));
}

std::optional<Bytes> banner_of(const HostRecord& h, Port p) {
    auto it = h.banners().find(p);
    if (it == h.banners().end()) return std::nullopt;
    return it->second;
}

}  // namespace

std::vector<IntrusionEvent> diff(const NetworkFingerprint& baseline, const NetworkFingerprint& current,
                                 const ScanConfig& config, std::uint64_t epoch) {
    if (!baseline.trusted()) fail(ErrorCode::UntrustedBaseline, "baseline fingerprint is not trusted");
    if (baseline.config_digest() != current.config_digest())
        fail(ErrorCode::IncomparableFingerprints, "config digests differ: " + format_digest(baseline.config_digest()) +
                                                      " vs " + format_digest(current.config_digest()));

    std::set<Ipv4Address> addresses;
    for (const auto& [a, _] : baseline.hosts()) addresses.insert(a);
    for (const auto& [a, _] : current.hosts()) addresses.insert(a);

    std::vector<IntrusionEvent> events;
    auto add = [&](EventKind k, Ipv4Address a, std::optional<Port> p, std::string from, std::string to) {
        events.emplace_back(k, a, p, std::move(from), std::move(to), epoch);
    };

    for (auto address : addresses) {
        const auto* before = present(baseline, address);
        const auto* after = present(current, address);
        if (!before && !after) continue;
        if (!before) {
            add(EventKind::HostAdded, address, std::nullopt, "absent", std::string(to_string(after->alive())));
            continue;
        }
        if (!after) {
            add(EventKind::HostRemoved, address, std::nullopt, std::string(to_string(before->alive())), "absent");
            continue;
        }

        for (const auto& [port, was] : before->ports()) {
            auto it = after->ports().find(port);
            if (it == after->ports().end()) continue;
            const auto now = it->second;
            if (now == PortState::Open && was != PortState::Open)
                add(EventKind::PortOpened, address, port, std::string(to_string(was)), "open");
            else if (was == PortState::Open && now != PortState::Open)
                add(EventKind::PortClosed, address, port, "open", std::string(to_string(now)));
            else if (was == PortState::Open && banner_of(*before, port) != banner_of(*after, port))
                add(EventKind::BannerChanged, address, port, banner_text(*before, port), banner_text(*after, port));
        }

        if (!before->rtt_samples().empty() && !after->rtt_samples().empty()) {
            auto base = rtt_stats(before->rtt_samples()).median;
            auto cur = rtt_stats(after->rtt_samples()).median;
            const bool over_factor =
                static_cast<long double>(cur.count()) > static_cast<long double>(base.count()) * config.rtt_anomaly_factor;
            if (over_factor && cur - base > config.rtt_anomaly_floor)
                add(EventKind::LatencyAnomaly, address, std::nullopt, format_duration(base), format_duration(cur));
        }
    }

    std::stable_sort(events.begin(), events.end(), [](const IntrusionEvent& x, const IntrusionEvent& y) {
        return std::tuple(x.address(), x.kind(), x.port()) < std::tuple(y.address(), y.kind(), y.port());
    });
    return events;
}

std::string_view to_string(ScenarioTag tag) noexcept {
    switch (tag) {
        case ScenarioTag::NodeRemoved: return "NodeRemoved";
        case ScenarioTag::ServiceChanged: return "ServiceChanged";
        case ScenarioTag::NewDevice: return "NewDevice";
        case ScenarioTag::MitmSuspected: return "MitmSuspected";
        case ScenarioTag::None: return "None";
    }
    return "?";
}

std::optional<ScenarioTag> parse_scenario_tag(std::string_view text) {
    for (auto t : {ScenarioTag::NodeRemoved, ScenarioTag::ServiceChanged, ScenarioTag::NewDevice,
                   ScenarioTag::MitmSuspected, ScenarioTag::None})
        if (to_string(t) == text) return t;
    return std::nullopt;
}

std::set<ScenarioTag> classify_scenario(const std::vector<IntrusionEvent>& events) {
    std::set<ScenarioTag> tags;
    for (const auto& e : events) {
        switch (e.kind()) {
            case EventKind::HostRemoved: tags.insert(ScenarioTag::NodeRemoved); break;
            case EventKind::PortOpened:
            case EventKind::PortClosed:
            case EventKind::BannerChanged: tags.insert(ScenarioTag::ServiceChanged); break;
            case EventKind::HostAdded: tags.insert(ScenarioTag::NewDevice); break;
            case EventKind::LatencyAnomaly: tags.insert(ScenarioTag::MitmSuspected); break;
        }
    }
    if (tags.empty()) tags.insert(ScenarioTag::None);
    return tags;
}

}  // namespace edgemap
