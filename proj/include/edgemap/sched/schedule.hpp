#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edgemap/core/model.hpp"
#include "edgemap/sched/rng.hpp"

namespace edgemap {

/// In-place Fisher-Yates shuffle driven by `rng`.
template <class T>
void fisher_yates(std::span<T> items, RandomSource& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Pseudo-random order for one sweep.
///
/// Port orders are derived lazily from a per-host seed drawn when the
/// schedule is made, so large address ranges do not materialise one port
/// permutation per address up front and results do not depend on which
/// hosts turn out to be alive.
class ScanSchedule {
public:
    ScanSchedule(std::vector<Ipv4Address> host_order, std::vector<std::uint64_t> port_seeds, PortRange ports,
                 Micros startup_delay, std::uint64_t epoch);

    const std::vector<Ipv4Address>& host_order() const { return host_order_; }
    Micros startup_delay() const { return startup_delay_; }
    std::uint64_t epoch() const { return epoch_; }

    /// Port permutation for the host at `position` in host_order().
    std::vector<Port> port_order(std::size_t position) const;

    bool operator==(const ScanSchedule&) const = default;

private:
    std::vector<Ipv4Address> host_order_;
    std::vector<std::uint64_t> port_seeds_;
    PortRange ports_;
    Micros startup_delay_;
    std::uint64_t epoch_;
};

/// Uniform in [startup_delay_min, startup_delay_max] at microsecond resolution.
Micros draw_startup_delay(const ScanConfig& config, RandomSource& rng);

/// Draws, in this order: the startup delay, the host permutation, then one
/// port seed per host position.
ScanSchedule make_schedule(const ScanConfig& config, RandomSource& rng, std::uint64_t epoch = 0);

}  // namespace edgemap
