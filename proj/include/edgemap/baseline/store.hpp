#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <vector>

#include "edgemap/core/model.hpp"

namespace edgemap {

enum class StoreWrite { Trusted, Latest, ReplaceTrusted };

struct StoreWriteEntry {
    StoreWrite kind;
    std::uint64_t digest;
    std::filesystem::path path;
};

/// Directory-backed fingerprints, one subdirectory per config digest holding
/// trusted.fp and latest.fp. The trusted record is created with a no-clobber
/// link so it is written at most once even across processes; the only way
/// to change it is replace_trusted. Writes are serialized internally and
/// readers only ever see whole files.
class FingerprintStore {
public:
    explicit FingerprintStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Trusted fingerprints go to the trusted slot (Error(TrustedAlreadyExists)
    /// when occupied), others to the latest slot.
    void save(const NetworkFingerprint& fp);
    /// Deliberate operator action: overwrite the trusted record.
    void replace_trusted(const NetworkFingerprint& fp);

    bool has_trusted(std::uint64_t digest) const;
    /// Throws NotFound, CorruptRecord, or IncomparableFingerprints when the
    /// stored record carries a different digest than its slot.
    NetworkFingerprint load_trusted(std::uint64_t digest) const;
    NetworkFingerprint load_latest(std::uint64_t digest) const;

    std::filesystem::path trusted_path(std::uint64_t digest) const;
    std::filesystem::path latest_path(std::uint64_t digest) const;

    /// Writes made through this instance, in order.
    std::vector<StoreWriteEntry> write_log() const;

private:
    NetworkFingerprint load(const std::filesystem::path& path, std::uint64_t digest) const;
    std::filesystem::path slot_dir(std::uint64_t digest) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::vector<StoreWriteEntry> log_;
};

}  // namespace edgemap
