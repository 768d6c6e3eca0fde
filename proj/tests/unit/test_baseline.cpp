#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "support/diff_oracle.hpp"
#include "edgemap/baseline/diff.hpp"
#include "edgemap/baseline/fingerprint_io.hpp"
#include "edgemap/baseline/store.hpp"
#include "edgemap/error.hpp"
#include "support/mutations.hpp"

using namespace edgemap;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

Ipv4Address ip(const char* s) { return Ipv4Address::from_string(s); }

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

NetworkFingerprint fp(std::map<Ipv4Address, HostRecord> hosts, bool trusted) {
    return NetworkFingerprint(testgen::kRange, testgen::kDigest, Timestamp(0), Timestamp(1000), std::move(hosts),
                              trusted);
}

HostRecord up(const char* a, Micros rtt = 1000us, std::map<Port, PortState> ports = {},
              std::map<Port, Bytes> banners = {}) {
    return HostRecord(ip(a), AliveState::Up, {rtt}, std::move(ports), std::move(banners));
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::string t = (fs::temp_directory_path() / "edgemap-test-XXXXXX").string();
        REQUIRE(::mkdtemp(t.data()) != nullptr);
        path = t;
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("a new device is the only change") {
    std::map<Ipv4Address, HostRecord> base, cur;
    for (const char* a : {"10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.4"}) {
        base.emplace(ip(a), up(a, 1000us, {{80, PortState::Open}}));
        cur.emplace(ip(a), up(a, 1000us, {{80, PortState::Open}}));
    }
    cur.emplace(ip("10.0.0.9"), up("10.0.0.9"));
    auto events = diff(fp(base, true), fp(cur, false), testgen::diff_config(), 4);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind() == EventKind::HostAdded);
    CHECK(events[0].address() == ip("10.0.0.9"));
    CHECK(events[0].baseline_value() == "absent");
    CHECK(events[0].observed_value() == "up");
    CHECK(events[0].scan_epoch() == 4);
    CHECK(classify_scenario(events) == std::set{ScenarioTag::NewDevice});
}

TEST_CASE("event values and ordering") {
    std::map<Ipv4Address, HostRecord> base, cur;
    base.emplace(ip("10.0.0.2"), up("10.0.0.2", 1000us, {{22, PortState::Open}, {23, PortState::Closed}},
                                    {{22, to_bytes("SSH-1")}}));
    cur.emplace(ip("10.0.0.2"), up("10.0.0.2", 5000us, {{22, PortState::Open}, {23, PortState::Open}},
                                   {{22, to_bytes("SSH-2\n")}}));
    base.emplace(ip("10.0.0.1"), HostRecord(ip("10.0.0.1"), AliveState::SilentUp));
    auto events = diff(fp(base, true), fp(cur, false), testgen::diff_config());
    REQUIRE(events.size() == 4);
    CHECK(events[0].kind() == EventKind::HostRemoved);
    CHECK(events[0].baseline_value() == "silent-up");
    CHECK(events[0].observed_value() == "absent");
    CHECK(events[1].kind() == EventKind::PortOpened);
    CHECK(events[1].port() == Port{23});
    CHECK(events[1].baseline_value() == "closed");
    CHECK(events[1].observed_value() == "open");
    CHECK(events[2].kind() == EventKind::BannerChanged);
    CHECK(events[2].baseline_value() == "SSH-1");
    CHECK(events[2].observed_value() == "SSH-2\\n");
    CHECK(events[3].kind() == EventKind::LatencyAnomaly);
    CHECK(events[3].baseline_value() == "1ms");
    CHECK(events[3].observed_value() == "5ms");
    CHECK(classify_scenario(events) ==
          std::set{ScenarioTag::NodeRemoved, ScenarioTag::ServiceChanged, ScenarioTag::MitmSuspected});
}

TEST_CASE("classification") {
    CHECK(classify_scenario({}) == std::set{ScenarioTag::None});
    IntrusionEvent removed(EventKind::HostRemoved, ip("10.0.0.1"), std::nullopt, "up", "absent", 1);
    CHECK(classify_scenario({removed}) == std::set{ScenarioTag::NodeRemoved});
    IntrusionEvent opened(EventKind::PortOpened, ip("10.0.0.1"), Port{23}, "closed", "open", 1);
    CHECK(classify_scenario({opened}) == std::set{ScenarioTag::ServiceChanged});
    for (auto t : {ScenarioTag::NodeRemoved, ScenarioTag::ServiceChanged, ScenarioTag::NewDevice,
                   ScenarioTag::MitmSuspected, ScenarioTag::None})
        CHECK(parse_scenario_tag(to_string(t)) == t);
}

TEST_CASE("latency thresholds are strict") {
    auto cfg = testgen::diff_config();  // factor 2, floor 1000us
    auto check = [&](Micros base, Micros cur) {
        std::map<Ipv4Address, HostRecord> b, c;
        b.emplace(ip("10.0.0.1"), up("10.0.0.1", base));
        c.emplace(ip("10.0.0.1"), up("10.0.0.1", cur));
        return diff(fp(b, true), fp(c, false), cfg).size();
    };
    CHECK(check(2000us, 4000us) == 0);  // exactly factor x
    CHECK(check(2000us, 4001us) == 1);
    CHECK(check(500us, 1500us) == 0);   // 3x but exactly the floor
    CHECK(check(500us, 1501us) == 1);
    CHECK(check(100us, 900us) == 0);    // 9x but under the floor
    CHECK(check(5000us, 500us) == 0);
}

TEST_CASE("preconditions") {
    auto base = fp({}, false);
    CHECK(code_of([&] { diff(base, base, testgen::diff_config()); }) == ErrorCode::UntrustedBaseline);
    NetworkFingerprint other(testgen::kRange, testgen::kDigest + 1, Timestamp(0), Timestamp(0), {}, false);
    CHECK(code_of([&] { diff(base.with_trusted(true), other, testgen::diff_config()); }) ==
          ErrorCode::IncomparableFingerprints);
}

TEST_CASE("diff agrees with the brute-force oracle") {
    std::mt19937_64 g(1);
    const auto cfg = testgen::diff_config();
    for (int i = 0; i < 1000; ++i) {
        auto a = testgen::random_fingerprint(g, true);
        auto b = testgen::random_fingerprint(g, false);
        auto got = diff(a, b, cfg);
        REQUIRE(oracle::project(got) == oracle::diff(a, b, 2.0, 1000));
        CHECK(diff(a, b, cfg) == got);  // pure
        CHECK(diff(a, a.with_trusted(false), cfg).empty());
    }
}

TEST_CASE("known mutations produce exactly their events") {
    std::mt19937_64 g(2);
    const auto cfg = testgen::diff_config();
    std::size_t total = 0;
    for (int i = 0; i < 1000; ++i) {
        auto m = testgen::mutate(g, testgen::random_fingerprint(g, true));
        auto got = oracle::project(diff(m.baseline, m.current, cfg));
        auto expected = m.expected;
        std::sort(expected.begin(), expected.end());
        auto sorted = got;
        std::sort(sorted.begin(), sorted.end());
        REQUIRE(sorted == expected);
        CHECK(got == oracle::diff(m.baseline, m.current, 2.0, 1000));
        total += got.size();
    }
    CHECK(total > 1000);
}

TEST_CASE("swapping arguments mirrors host and port events") {
    std::mt19937_64 g(3);
    auto cfg = testgen::diff_config();
    for (int i = 0; i < 300; ++i) {
        auto a = testgen::random_fingerprint(g, true);
        auto b = testgen::random_fingerprint(g, true);
        auto forward = diff(a, b, cfg), backward = diff(b, a, cfg);
        auto mirrored = [](EventKind k) {
            switch (k) {
                case EventKind::HostAdded: return EventKind::HostRemoved;
                case EventKind::HostRemoved: return EventKind::HostAdded;
                case EventKind::PortOpened: return EventKind::PortClosed;
                case EventKind::PortClosed: return EventKind::PortOpened;
                default: return k;
            }
        };
        std::set<oracle::Expected> f, bw;
        for (const auto& e : forward)
            if (e.kind() != EventKind::LatencyAnomaly) f.insert({mirrored(e.kind()), e.address(), e.port()});
        for (const auto& e : backward)
            if (e.kind() != EventKind::LatencyAnomaly) bw.insert({e.kind(), e.address(), e.port()});
        REQUIRE(f == bw);
    }
}

TEST_CASE("canonical text round-trips and rejects corruption") {
    std::mt19937_64 g(4);
    CHECK(crc32_of("123456789") == 0xcbf43926u);
    for (int i = 0; i < 300; ++i) {
        auto x = testgen::random_fingerprint(g, testgen::coin(g));
        auto text = serialize_fingerprint(x);
        CHECK(text.rfind(kFingerprintHeader, 0) == 0);
        REQUIRE(parse_fingerprint(text) == x);
        CHECK(serialize_fingerprint(parse_fingerprint(text)) == text);

        auto bad = text;
        const auto at = static_cast<std::size_t>(testgen::pick(g, 0, static_cast<int>(text.size()) - 1));
        bad[at] = static_cast<char>(bad[at] ^ testgen::pick(g, 1, 255));
        CHECK(code_of([&] { parse_fingerprint(bad); }) == ErrorCode::CorruptRecord);
        CHECK(code_of([&] { parse_fingerprint(text.substr(0, at)); }) == ErrorCode::CorruptRecord);
    }
    CHECK(code_of([] { parse_fingerprint(""); }) == ErrorCode::CorruptRecord);
}

TEST_CASE("store slots") {
    TempDir dir;
    FingerprintStore store(dir.path / "store");
    std::mt19937_64 g(5);
    auto trusted = testgen::random_fingerprint(g, true);
    auto latest = testgen::random_fingerprint(g, false);
    const auto d = testgen::kDigest;

    CHECK_FALSE(store.has_trusted(d));
    CHECK(code_of([&] { store.load_trusted(d); }) == ErrorCode::NotFound);
    store.save(trusted);
    CHECK(store.has_trusted(d));
    CHECK(store.load_trusted(d) == trusted);
    CHECK(code_of([&] { store.save(trusted); }) == ErrorCode::TrustedAlreadyExists);
    CHECK(store.load_trusted(d) == trusted);

    store.save(latest);
    store.save(latest);
    CHECK(store.load_latest(d) == latest);

    auto replacement = testgen::random_fingerprint(g, true);
    store.replace_trusted(replacement);
    CHECK(store.load_trusted(d) == replacement);

    auto log = store.write_log();
    REQUIRE(log.size() == 4);
    CHECK(log[0].kind == StoreWrite::Trusted);
    CHECK(log[1].kind == StoreWrite::Latest);
    CHECK(log[3].kind == StoreWrite::ReplaceTrusted);
    CHECK(store.trusted_path(d).parent_path().filename() == format_digest(d));

    // Another store instance on the same directory still refuses to clobber.
    FingerprintStore second(dir.path / "store");
    CHECK(code_of([&] { second.save(trusted); }) == ErrorCode::TrustedAlreadyExists);
}

TEST_CASE("damaged store files are never loaded") {
    TempDir dir;
    FingerprintStore store(dir.path);
    std::mt19937_64 g(6);
    auto trusted = testgen::random_fingerprint(g, true);
    store.save(trusted);
    const auto path = store.trusted_path(testgen::kDigest);
    std::string text = serialize_fingerprint(trusted);

    for (int i = 0; i < 50; ++i) {
        const auto cut = static_cast<std::size_t>(testgen::pick(g, 0, static_cast<int>(text.size()) - 1));
        std::ofstream(path, std::ios::binary | std::ios::trunc) << text.substr(0, cut);
        CHECK(code_of([&] { store.load_trusted(testgen::kDigest); }) == ErrorCode::CorruptRecord);
    }

    // A valid record filed under the wrong digest.
    NetworkFingerprint foreign(testgen::kRange, 99, Timestamp(0), Timestamp(0), {}, true);
    std::ofstream(path, std::ios::binary | std::ios::trunc) << serialize_fingerprint(foreign);
    CHECK(code_of([&] { store.load_trusted(testgen::kDigest); }) == ErrorCode::IncomparableFingerprints);
}
