#include "edgemap/cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "edgemap/baseline/diff.hpp"
#include "edgemap/baseline/fingerprint_io.hpp"
#include "edgemap/baseline/store.hpp"
#include "edgemap/core/config_io.hpp"
#include "edgemap/core/text.hpp"
#include "edgemap/error.hpp"
#include "edgemap/probe/engine.hpp"
#include "edgemap/sched/monitor.hpp"
#include "edgemap/sched/rng.hpp"
#include "edgemap/sink/event_sink.hpp"
#include "edgemap/transport/os_transport.hpp"
#include "edgemap/transport/scenario.hpp"
#include "edgemap/transport/simnet.hpp"

namespace edgemap::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config_file;
    std::string backend = "os";
    std::optional<std::uint64_t> seed;
    std::string ping_delay, port_delay, ports, range, rescan_interval, method;
    std::vector<std::string> sinks;
    std::string format = "human";
    bool force = false;
    std::string store = "edgemap-store";
    bool store_given = false;
    std::string node_id = "edgemap";
    std::optional<std::uint64_t> epochs;
    std::string out_file;
    std::vector<std::string> positional;
};

struct Backend {
    std::unique_ptr<ProbeTransport> transport;
    SimNetwork* sim = nullptr;
    std::optional<Scenario> scenario;
};

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<std::string> scenario_path(const Flags& f) {
    if (f.backend.rfind("sim:", 0) == 0) return f.backend.substr(4);
    if (f.backend != "os") throw UsageError("--backend must be 'os' or 'sim:<scenario-file>'");
    return std::nullopt;
}

void apply_pairs(ScanConfig& config, const std::vector<KeyValue>& pairs, const std::string& origin) {
    for (const auto& kv : pairs) {
        try {
            if (!apply_scan_setting(config, kv.key, kv.value))
                throw UsageError(origin + ":" + std::to_string(kv.line) + ": unknown setting '" + kv.key + "'");
        } catch (const Error& e) {
            throw UsageError(origin + ":" + std::to_string(kv.line) + ": " + e.what());
        }
    }
}

/// Defaults, then the config file, then the scenario's settings, then flags.
ScanConfig build_config(const Flags& f, const Scenario* scenario) {
    ScanConfig config;
    if (!f.config_file.empty()) {
        std::ifstream in(f.config_file);
        if (!in) throw UsageError("cannot read config file " + f.config_file);
        std::stringstream text;
        text << in.rdbuf();
        try {
            apply_pairs(config, parse_key_values(text.str()), f.config_file);
        } catch (const Error& e) {
            throw UsageError(f.config_file + ": " + e.what());
        }
    }
    if (scenario) apply_pairs(config, scenario->config, "scenario");
    auto set = [&](const char* key, const std::string& value) {
        if (value.empty()) return;
        try {
            apply_scan_setting(config, key, value);
        } catch (const Error& e) {
            throw UsageError(std::string("--") + key + ": " + e.what());
        }
    };
    set("ping_delay", f.ping_delay);
    set("port_delay", f.port_delay);
    set("port_range", f.ports);
    set("address_range", f.range);
    set("rescan_interval", f.rescan_interval);
    set("scan_method", f.method);
    if (f.seed) config.seed = f.seed;
    try {
        config.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return config;
}

std::uint64_t sim_seed(const ScanConfig& config) {
    std::uint64_t state = config.seed.value_or(0) ^ 0x5eedf00dULL;
    return splitmix64(state);
}

Backend make_backend(const Flags& f, ScanConfig& config) {
    Backend b;
    if (auto path = scenario_path(f)) {
        b.scenario = load_scenario(*path);
        config = build_config(f, &*b.scenario);
        if (!config.seed) config.seed = OsEntropySource().next_u64();
        auto sim = std::make_unique<SimNetwork>(b.scenario->hosts, b.scenario->script, sim_seed(config));
        b.sim = sim.get();
        b.transport = std::move(sim);
    } else {
        config = build_config(f, nullptr);
        b.transport = std::make_unique<OsTransport>();
    }
    return b;
}

std::size_t open_port_count(const NetworkFingerprint& fp) {
    std::size_t n = 0;
    for (const auto& [_, h] : fp.hosts())
        for (const auto& [p, s] : h.ports()) n += s == PortState::Open;
    return n;
}

std::string seconds_text(Micros d) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << static_cast<double>(d.count()) / 1e6 << "s";
    return s.str();
}

void print_sweep_summary(std::ostream& out, const char* what, const SweepResult& r) {
    const auto& fp = r.fingerprint;
    out << what << ": hosts " << fp.hosts().size() << ", open ports " << open_port_count(fp) << ", duration "
        << seconds_text(fp.finished_at() - fp.started_at()) << ", packets sent " << r.packets_sent << "\n";
    for (const auto& [addr, h] : fp.hosts()) {
        out << "  " << addr.to_string() << " " << to_string(h.alive());
        if (!h.rtt_samples().empty()) out << " rtt " << format_duration(rtt_stats(h.rtt_samples()).median);
        std::string open;
        for (const auto& [p, s] : h.ports())
            if (s == PortState::Open) open += (open.empty() ? "" : ",") + std::to_string(p);
        if (!open.empty()) out << " open " << open;
        out << "\n";
    }
    for (const auto& fl : r.failures) out << "  " << fl.address.to_string() << " failed: " << fl.reason << "\n";
}

SinkConfig sink_config(const Flags& f, std::ostream& out) {
    SinkConfig sc;
    sc.node_id = f.node_id;
    bool has_udp = false;
    for (const auto& s : f.sinks) {
        auto spec = parse_output_spec(s);
        if (auto* so = std::get_if<StdoutOutput>(&spec)) so->stream = &out;
        has_udp = has_udp || std::holds_alternative<UdpOutput>(spec);
        sc.outputs.push_back(spec);
    }
    if (!has_udp)
        if (auto env = logger_from_env()) sc.outputs.push_back(*env);
    return sc;
}

SweepResult sweep_now(const ScanConfig& config, Backend& b, std::stop_token stop) {
    auto rng = make_rng(config);
    return full_sweep(config, *b.transport, *rng, std::move(stop));
}

int cmd_baseline(const Flags& f, std::ostream& out, std::stop_token stop) {
    ScanConfig config;
    auto b = make_backend(f, config);
    FingerprintStore store(f.store);
    if (store.has_trusted(config_digest(config)))
        fail(ErrorCode::TrustedAlreadyExists, "a trusted baseline already exists in " + f.store + "; use rebaseline --force");
    auto r = sweep_now(config, b, stop);
    auto trusted = r.fingerprint.with_trusted(true);
    store.save(trusted);
    if (!f.out_file.empty()) write_fingerprint_file(f.out_file, trusted);
    print_sweep_summary(out, "baseline saved", r);
    return exit_code::kOk;
}

int cmd_rebaseline(const Flags& f, std::ostream& out, std::stop_token stop) {
    if (!f.force) throw UsageError("rebaseline replaces the trusted baseline and requires --force");
    ScanConfig config;
    auto b = make_backend(f, config);
    FingerprintStore store(f.store);
    auto r = sweep_now(config, b, stop);
    auto trusted = r.fingerprint.with_trusted(true);
    store.replace_trusted(trusted);
    if (!f.out_file.empty()) write_fingerprint_file(f.out_file, trusted);
    print_sweep_summary(out, "baseline replaced", r);
    return exit_code::kOk;
}

int cmd_scan(const Flags& f, std::ostream& out, std::stop_token stop) {
    ScanConfig config;
    auto b = make_backend(f, config);
    auto r = sweep_now(config, b, stop);
    if (!f.out_file.empty()) write_fingerprint_file(f.out_file, r.fingerprint);
    if (f.format == "lines") out << serialize_fingerprint(r.fingerprint);
    else print_sweep_summary(out, "scan", r);
    return exit_code::kOk;
}

int cmd_monitor(const Flags& f, std::ostream& out, std::ostream& err, std::stop_token stop) {
    ScanConfig config;
    auto b = make_backend(f, config);
    FingerprintStore store(f.store);
    if (!store.has_trusted(config_digest(config))) {
        err << "edgemap: no trusted baseline in " << f.store << " for this configuration; run baseline first\n";
        return exit_code::kMissingBaseline;
    }
    auto flags = f;
    if (flags.sinks.empty()) flags.sinks.push_back("stdout");
    EventSink sink(sink_config(flags, out));
    MonitorOptions opts;
    opts.max_epochs = f.epochs;
    if (!opts.max_epochs && b.scenario && b.scenario->epochs) opts.max_epochs = b.scenario->epochs;
    auto rng = make_rng(config);
    auto report = run_monitor(config, *b.transport, store, sink, *rng, stop, opts);
    err << "monitor finished after " << report.epochs.size() << " sweeps" << (report.stopped ? " (stopped)" : "") << "\n";
    return exit_code::kOk;
}

int cmd_diff(const Flags& f, std::ostream& out) {
    if (f.positional.size() != 2) throw UsageError("diff needs exactly two fingerprint files");
    auto config = build_config(f, nullptr);
    auto a = read_fingerprint_file(f.positional[0]);
    auto c = read_fingerprint_file(f.positional[1]);
    // The first file is the reference by the operator's choice.
    auto events = diff(a.with_trusted(true), c, config, 0);
    for (const auto& e : events) {
        if (f.format == "lines") {
            out << format_event_line(f.node_id, e, c.finished_at()) << "\n";
        } else {
            out << to_string(e.kind()) << " " << e.address().to_string();
            if (e.port()) out << " port " << *e.port();
            out << ": " << text::encode_value(e.baseline_value()) << " -> " << text::encode_value(e.observed_value())
                << "\n";
        }
    }
    return events.empty() ? exit_code::kOk : exit_code::kEventsFound;
}

void print_rate_report(std::ostream& out, const SimCounters& counters) {
    out << "rates (packets per virtual second)\nsecond";
    for (std::size_t i = 0; i < kPacketClassCount; ++i) out << ' ' << to_string(static_cast<PacketClass>(i));
    out << " discovery_requests tcp_control bytes tcp_control_bytes\n";
    std::uint64_t max_disc = 0, max_tcp = 0, peak_tcp_bytes = 0, peak_bytes = 0;
    for (const auto& [sec, t] : counters.per_second()) {
        out << sec;
        for (auto c : t.count) out << ' ' << c;
        out << ' ' << t.discovery_request_count() << ' ' << t.tcp_control_count() << ' ' << t.total_bytes() << ' '
            << t.tcp_control_bytes() << '\n';
        max_disc = std::max(max_disc, t.discovery_request_count());
        max_tcp = std::max(max_tcp, t.tcp_control_count());
        peak_tcp_bytes = std::max(peak_tcp_bytes, t.tcp_control_bytes());
        peak_bytes = std::max(peak_bytes, t.total_bytes());
    }
    const auto& cum = counters.cumulative();
    out << "summary active_seconds=" << counters.per_second().size() << " total_packets=" << cum.total_count()
        << " total_bytes=" << cum.total_bytes() << " max_discovery_per_s=" << max_disc << " max_tcp_per_s=" << max_tcp
        << " peak_tcp_bytes_per_s=" << peak_tcp_bytes << " peak_bytes_per_s=" << peak_bytes << '\n';
    out << "totals";
    for (std::size_t i = 0; i < kPacketClassCount; ++i)
        out << ' ' << to_string(static_cast<PacketClass>(i)) << '=' << cum.count[i] << '/' << cum.bytes[i] << 'B';
    out << '\n';
}

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "edgemap-sim-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) fail(ErrorCode::Io, "cannot create a temporary store");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

int cmd_simulate(const Flags& in, std::ostream& out, std::stop_token stop) {
    auto f = in;
    if (!f.positional.empty()) {
        if (f.positional.size() != 1 || f.backend != "os")
            throw UsageError("simulate takes one scenario file, either as argument or as --backend sim:<file>");
        f.backend = "sim:" + f.positional[0];
    }
    if (!scenario_path(f)) throw UsageError("simulate needs a scenario file");
    ScanConfig config;
    auto b = make_backend(f, config);

    std::optional<TempDir> temp;
    fs::path store_root = f.store;
    if (!f.store_given) {
        temp.emplace();
        store_root = temp->path();
    }
    FingerprintStore store(store_root);

    std::ostringstream captured;
    auto flags = f;
    if (flags.sinks.empty()) flags.sinks.push_back("stdout");
    EventSink sink(sink_config(flags, f.sinks.empty() ? static_cast<std::ostream&>(captured) : out));

    MonitorOptions opts;
    opts.max_epochs = f.epochs ? f.epochs : b.scenario->epochs;
    if (!opts.max_epochs) opts.max_epochs = 3;
    auto rng = make_rng(config);
    auto report = run_monitor(config, *b.transport, store, sink, *rng, stop, opts);

    out << "scenario " << (b.scenario->name.empty() ? "unnamed" : b.scenario->name) << "\n";
    out << "seed " << *config.seed << "\n";
    out << "config_digest " << format_digest(config_digest(config)) << "\n";
    out << "startup_delay_us " << report.startup_delay.count() << "\n";
    for (const auto& e : report.epochs) {
        out << "epoch " << e.epoch << (e.reference ? " reference" : "") << " started_us=" << e.started.count()
            << " finished_us=" << e.finished.count() << " hosts=" << e.hosts << " packets=" << e.packets_sent
            << " events=" << e.events.size();
        if (!e.reference && e.errors.empty()) {
            std::string tags;
            for (auto t : e.tags) tags += (tags.empty() ? "" : ",") + std::string(to_string(t));
            out << " tags=" << tags;
        }
        out << "\n";
        for (const auto& msg : e.errors) out << "  error " << msg << "\n";
    }
    print_rate_report(out, b.sim->counters());
    out << "events\n" << captured.str();
    return exit_code::kOk;
}

int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::TrustedAlreadyExists: return exit_code::kTrustedExists;
        case ErrorCode::TransportDown:
        case ErrorCode::CapabilityUnsupported: return exit_code::kTransportFailure;
        case ErrorCode::IncomparableFingerprints: return exit_code::kIncomparable;
        case ErrorCode::MalformedScript: return exit_code::kMalformedScript;
        case ErrorCode::Cancelled: return exit_code::kInterrupted;
        case ErrorCode::InvalidArgument: return exit_code::kUsage;
        default: return exit_code::kBadRecord;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::stop_token stop) {
    CLI::App app{"edgemap: paced active network mapping with baseline diffing"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;

    app.add_option("--config", f.config_file, "key=value config file using ScanConfig field names");
    app.add_option("--backend", f.backend, "os or sim:<scenario-file>");
    app.add_option("--seed", f.seed, "fixed PRNG seed");
    app.add_option("--ping-delay", f.ping_delay, "gap between ARP/ICMP probes, e.g. 100ms");
    app.add_option("--port-delay", f.port_delay, "gap between port probes, e.g. 100ms");
    app.add_option("--ports", f.ports, "port range N-M");
    app.add_option("--range", f.range, "address range a.b.c.d[-e.f.g.h] or CIDR");
    app.add_option("--rescan-interval", f.rescan_interval, "time between sweep starts, e.g. 5m");
    app.add_option("--method", f.method, "connect or syn");
    app.add_option("--sink", f.sinks, "stdout, file:<path> or udp:<host>:<port>; repeatable")->allow_extra_args(false);
    app.add_option("--format", f.format, "human or lines")->check(CLI::IsMember({"human", "lines"}));
    app.add_flag("--force", f.force, "allow replacing the trusted baseline");
    auto* store_opt = app.add_option("--store", f.store, "fingerprint store directory");
    app.add_option("--node-id", f.node_id, "scanner name in event lines");
    app.add_option("--epochs", f.epochs, "number of sweeps for monitor/simulate");
    app.add_option("--out", f.out_file, "also write the fingerprint to this file");

    auto* baseline = app.add_subcommand("baseline", "learn and store the trusted baseline");
    auto* scan = app.add_subcommand("scan", "one sweep, nothing stored");
    auto* monitor = app.add_subcommand("monitor", "periodic sweeps diffed against the baseline");
    auto* diff_cmd = app.add_subcommand("diff", "compare two fingerprint files");
    diff_cmd->add_option("files", f.positional, "baseline and current fingerprint files");
    auto* simulate = app.add_subcommand("simulate", "monitor a scenario on the simulated network");
    simulate->add_option("scenario", f.positional, "scenario file");
    auto* rebaseline = app.add_subcommand("rebaseline", "replace the trusted baseline (needs --force)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        return rc == 0 ? exit_code::kOk : exit_code::kUsage;
    }
    f.store_given = store_opt->count() > 0;

    try {
        if (*baseline) return cmd_baseline(f, out, stop);
        if (*scan) return cmd_scan(f, out, stop);
        if (*monitor) return cmd_monitor(f, out, err, stop);
        if (*diff_cmd) return cmd_diff(f, out);
        if (*simulate) return cmd_simulate(f, out, stop);
        if (*rebaseline) return cmd_rebaseline(f, out, stop);
    } catch (const UsageError& e) {
        err << "edgemap: " << e.what() << "\n";
        return exit_code::kUsage;
    } catch (const Error& e) {
        err << "edgemap: " << e.what() << "\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        err << "edgemap: " << e.what() << "\n";
        return exit_code::kBadRecord;
    }
    return exit_code::kUsage;
}

}  // namespace edgemap::cli
