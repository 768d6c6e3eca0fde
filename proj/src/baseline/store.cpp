#include "edgemap/baseline/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "edgemap/baseline/fingerprint_io.hpp"
#include "edgemap/error.hpp"

namespace edgemap {

namespace fs = std::filesystem;

namespace {

void write_all_synced(const fs::path& path, const std::string& data) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::Io, "cannot create " + path.string() + ": " + std::strerror(errno));
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            fail(ErrorCode::Io, "cannot write " + path.string() + ": " + std::strerror(err));
        }
        off += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

}  // namespace

FingerprintStore::FingerprintStore(fs::path root) : root_(std::move(root)) {}

fs::path FingerprintStore::slot_dir(std::uint64_t digest) const { return root_ / format_digest(digest); }
fs::path FingerprintStore::trusted_path(std::uint64_t digest) const { return slot_dir(digest) / "trusted.fp"; }
fs::path FingerprintStore::latest_path(std::uint64_t digest) const { return slot_dir(digest) / "latest.fp"; }

void FingerprintStore::save(const NetworkFingerprint& fp) {
    std::lock_guard lock(mutex_);
    const auto digest = fp.config_digest();
    std::error_code ec;
    fs::create_directories(slot_dir(digest), ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + slot_dir(digest).string() + ": " + ec.message());

    if (!fp.trusted()) {
        write_fingerprint_file(latest_path(digest), fp);
        log_.push_back({StoreWrite::Latest, digest, latest_path(digest)});
        return;
    }
    auto target = trusted_path(digest);
    auto tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    write_all_synced(tmp, serialize_fingerprint(fp));
    // link() refuses to replace an existing name, which rename() would do.
    if (::link(tmp.c_str(), target.c_str()) != 0) {
        int err = errno;
        ::unlink(tmp.c_str());
        if (err == EEXIST) fail(ErrorCode::TrustedAlreadyExists, "a trusted baseline exists for digest " + format_digest(digest));
        fail(ErrorCode::Io, "cannot create " + target.string() + ": " + std::strerror(err));
    }
    ::unlink(tmp.c_str());
    log_.push_back({StoreWrite::Trusted, digest, target});
}

void FingerprintStore::replace_trusted(const NetworkFingerprint& fp) {
    require(fp.trusted(), "replace_trusted needs a fingerprint marked trusted");
    std::lock_guard lock(mutex_);
    const auto digest = fp.config_digest();
    std::error_code ec;
    fs::create_directories(slot_dir(digest), ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + slot_dir(digest).string() + ": " + ec.message());
    write_fingerprint_file(trusted_path(digest), fp);
    log_.push_back({StoreWrite::ReplaceTrusted, digest, trusted_path(digest)});
}

bool FingerprintStore::has_trusted(std::uint64_t digest) const {
    std::error_code ec;
    return fs::exists(trusted_path(digest), ec);
}

NetworkFingerprint FingerprintStore::load(const fs::path& path, std::uint64_t digest) const {
    auto fp = read_fingerprint_file(path);
    if (fp.config_digest() != digest)
        fail(ErrorCode::IncomparableFingerprints, path.string() + " holds digest " + format_digest(fp.config_digest()) +
                                                       ", expected " + format_digest(digest));
    return fp;
}

NetworkFingerprint FingerprintStore::load_trusted(std::uint64_t digest) const {
    auto fp = load(trusted_path(digest), digest);
    if (!fp.trusted()) fail(ErrorCode::CorruptRecord, "trusted slot holds an untrusted record");
    return fp;
}

NetworkFingerprint FingerprintStore::load_latest(std::uint64_t digest) const { return load(latest_path(digest), digest); }

std::vector<StoreWriteEntry> FingerprintStore::write_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

}  // namespace edgemap
