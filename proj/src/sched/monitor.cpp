#include "edgemap/sched/monitor.hpp"

#include "edgemap/error.hpp"
#include "edgemap/probe/engine.hpp"
#include "edgemap/sched/schedule.hpp"

namespace edgemap {

namespace {

std::string join_tags(const std::set<ScenarioTag>& tags) {
    std::string out;
    for (auto t : tags) {
        if (!out.empty()) out += ',';
        out += to_string(t);
    }
    return out;
}

}  // namespace

MonitorReport run_monitor(const ScanConfig& config, ProbeTransport& transport, FingerprintStore& store,
                          EventSink& sink, RandomSource& rng, std::stop_token stop, MonitorOptions options) {
    config.validate();
    auto& clock = transport.clock();
    const auto digest = config_digest(config);
    MonitorReport report;

    auto schedule = make_schedule(config, rng, 0);
    if (options.apply_startup_delay) {
        report.startup_delay = schedule.startup_delay();
        if (!clock.sleep_until(clock.now() + schedule.startup_delay(), stop)) {
            report.stopped = true;
            return report;
        }
    }

    // One pacer for the whole run keeps probe gaps across sweep boundaries.
    ProbePacer pacer(clock, stop);
    Timestamp next_start = clock.now();
    for (std::uint64_t epoch = 0;; ++epoch) {
        if (options.max_epochs && epoch >= *options.max_epochs) break;
        if (epoch > 0) {
            if (!clock.sleep_until(next_start, stop)) {
                report.stopped = true;
                break;
            }
            schedule = make_schedule(config, rng, epoch);
        }
        EpochReport er;
        er.epoch = epoch;
        er.started = clock.now();
        next_start = er.started + config.rescan_interval;

        auto problem = [&](Severity sev, const std::string& code, const std::string& message) {
            er.errors.push_back(code + ": " + message);
            sink.emit(OperationalEvent{sev, code, message, epoch}, clock.now());
        };

        std::optional<SweepResult> sweep;
        try {
            sweep = full_sweep(config, transport, schedule, pacer);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Cancelled) {
                report.stopped = true;
                break;
            }
            problem(Severity::Warning, "sweep-failed", e.what());
        }

        if (sweep) {
            er.hosts = sweep->fingerprint.hosts().size();
            er.packets_sent = sweep->packets_sent;
            for (const auto& f : sweep->failures)
                problem(Severity::Warning, "host-unreachable", f.address.to_string() + ": " + f.reason);
            try {
                if (!store.has_trusted(digest)) {
                    store.save(sweep->fingerprint.with_trusted(true));
                    er.reference = true;
                } else {
                    auto baseline = store.load_trusted(digest);
                    er.events = diff(baseline, sweep->fingerprint, config, epoch);
                    for (const auto& ev : er.events) sink.emit(ev, clock.now());
                    er.tags = classify_scenario(er.events);
                    if (!er.events.empty())
                        sink.emit(OperationalEvent{Severity::Info, "scenario", join_tags(er.tags), epoch}, clock.now());
                    sink.finish_epoch(epoch, er.events, clock.now());
                    store.save(sweep->fingerprint);
                }
            } catch (const Error& e) {
                problem(Severity::Warning, "store-failed", e.what());
            }
        }
        er.finished = clock.now();
        if (options.on_epoch) options.on_epoch(er);
        report.epochs.push_back(std::move(er));
    }
    return report;
}

}  // namespace edgemap
