#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "edgemap/core/model.hpp"

namespace edgemap {

inline constexpr std::string_view kFingerprintHeader = "edgemap-fingerprint v1";

/// Canonical text form. Hosts and ports ascend numerically and the record
/// ends with "checksum <crc32 as 8 lowercase hex>\n" computed over every byte
/// before the checksum line. Equal fingerprints always serialize identically.
std::string serialize_fingerprint(const NetworkFingerprint& fp);

/// Strict inverse of serialize_fingerprint. Any deviation from the canonical
/// form, including a checksum mismatch or trailing bytes, throws
/// Error(CorruptRecord).
NetworkFingerprint parse_fingerprint(std::string_view text);

std::uint32_t crc32_of(std::string_view bytes);
std::string format_digest(std::uint64_t digest);

NetworkFingerprint read_fingerprint_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, flushes it and renames it into place.
void write_fingerprint_file(const std::filesystem::path& path, const NetworkFingerprint& fp);

}  // namespace edgemap
