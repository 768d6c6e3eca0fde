#pragma once

#include <atomic>
#include <chrono>
#include <stop_token>

#include "edgemap/core/model.hpp"

namespace edgemap {

/// Monotonic time source for scans. Real backends use the steady clock;
/// the simulated network uses a virtual clock that jumps instead of sleeping.
class ScanClock {
public:
    virtual ~ScanClock() = default;

    virtual Timestamp now() const = 0;

    /// Returns false if `stop` was requested before the deadline was reached.
    virtual bool sleep_until(Timestamp deadline, std::stop_token stop) = 0;
};

class SteadyScanClock final : public ScanClock {
public:
    SteadyScanClock() : origin_(std::chrono::steady_clock::now()) {}

    Timestamp now() const override;
    bool sleep_until(Timestamp deadline, std::stop_token stop) override;

private:
    std::chrono::steady_clock::time_point origin_;
};

class VirtualClock final : public ScanClock {
public:
    Timestamp now() const override { return Timestamp(now_.load(std::memory_order_acquire)); }
    bool sleep_until(Timestamp deadline, std::stop_token stop) override;

    /// Moves time forward; never backwards.
    void advance_to(Timestamp t);

private:
    std::atomic<std::int64_t> now_{0};
};

}  // namespace edgemap
