#include "edgemap/sched/rng.hpp"

#include "edgemap/error.hpp"

namespace edgemap {

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
    require(bound != 0, "uniform_below needs a nonzero bound");
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        auto r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Xoshiro256StarStar::Xoshiro256StarStar(std::uint64_t seed) {
    for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Xoshiro256StarStar::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

std::uint64_t OsEntropySource::next_u64() {
    return (std::uint64_t{device_()} << 32) ^ std::uint64_t{device_()};
}

std::unique_ptr<RandomSource> make_rng(const ScanConfig& config) {
    if (config.rng == RngKind::OsEntropy) return std::make_unique<OsEntropySource>();
    std::uint64_t seed = 0;
    if (config.seed) {
        seed = *config.seed;
    } else {
        OsEntropySource entropy;
        seed = entropy.next_u64();
    }
    return std::make_unique<Xoshiro256StarStar>(seed);
}

}  // namespace edgemap
