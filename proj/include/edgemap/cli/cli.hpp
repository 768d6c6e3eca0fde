#pragma once

#include <iosfwd>
#include <stop_token>
#include <string>
#include <vector>

namespace edgemap::cli {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kEventsFound = 1;
inline constexpr int kTrustedExists = 2;
inline constexpr int kTransportFailure = 3;
inline constexpr int kMissingBaseline = 4;
inline constexpr int kIncomparable = 5;
inline constexpr int kMalformedScript = 6;
inline constexpr int kBadRecord = 7;  // corrupt, missing or unreadable fingerprint file
inline constexpr int kInterrupted = 130;
inline constexpr int kUsage = 64;
}  // namespace exit_code

/// Runs one invocation. args[0] is the program name. Normal output goes to
/// `out`, diagnostics to `err`; the stop token ends monitor runs cleanly.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::stop_token stop = {});

}  // namespace edgemap::cli
