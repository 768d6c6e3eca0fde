#include "edgemap/sched/schedule.hpp"

#include <numeric>

#include "edgemap/error.hpp"

namespace edgemap {

ScanSchedule::ScanSchedule(std::vector<Ipv4Address> host_order, std::vector<std::uint64_t> port_seeds,
                           PortRange ports, Micros startup_delay, std::uint64_t epoch)
    : host_order_(std::move(host_order)),
      port_seeds_(std::move(port_seeds)),
      ports_(ports),
      startup_delay_(startup_delay),
      epoch_(epoch) {
    require(host_order_.size() == port_seeds_.size(), "one port seed per scheduled host is required");
}

std::vector<Port> ScanSchedule::port_order(std::size_t position) const {
    require(position < port_seeds_.size(), "schedule position out of range");
    std::vector<Port> order(ports_.size());
    std::iota(order.begin(), order.end(), ports_.low());
    Xoshiro256StarStar rng(port_seeds_[position]);
    fisher_yates(std::span<Port>(order), rng);
    return order;
}

Micros draw_startup_delay(const ScanConfig& config, RandomSource& rng) {
    auto span = static_cast<std::uint64_t>((config.startup_delay_max - config.startup_delay_min).count());
    return config.startup_delay_min + Micros(static_cast<std::int64_t>(rng.uniform_below(span + 1)));
}

ScanSchedule make_schedule(const ScanConfig& config, RandomSource& rng, std::uint64_t epoch) {
    config.validate();
    auto startup = draw_startup_delay(config, rng);
    const auto& range = config.address_range;
    std::vector<Ipv4Address> hosts;
    hosts.reserve(range.size());
    for (std::uint64_t i = 0; i < range.size(); ++i) hosts.push_back(range.at(i));
    fisher_yates(std::span<Ipv4Address>(hosts), rng);
    std::vector<std::uint64_t> seeds(hosts.size());
    for (auto& s : seeds) s = rng.next_u64();
    return ScanSchedule(std::move(hosts), std::move(seeds), config.port_range, startup, epoch);
}

}  // namespace edgemap
