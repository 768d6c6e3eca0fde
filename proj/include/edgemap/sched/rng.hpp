#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>

#include "edgemap/core/model.hpp"

namespace edgemap {

class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual std::uint64_t next_u64() = 0;

    /// Unbiased integer in [0, bound). bound must be nonzero.
    std::uint64_t uniform_below(std::uint64_t bound);
};

/// xoshiro256** (Blackman and Vigna), state expanded from a 64-bit seed with
/// splitmix64. Recurrence, with rotl = rotate left on 64 bits:
///
///   out  = rotl(s1 * 5, 7) * 9
///   t    = s1 << 17
///   s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3
///   s2 ^= t;  s3 = rotl(s3, 45)
///
/// Bounded draws reject values below 2^64 mod bound before taking the
/// remainder, so a given seed yields the same schedule on every platform.
class Xoshiro256StarStar final : public RandomSource {
public:
    explicit Xoshiro256StarStar(std::uint64_t seed);

    std::uint64_t next_u64() override;

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Draws from std::random_device. Not reproducible.
class OsEntropySource final : public RandomSource {
public:
    std::uint64_t next_u64() override;

private:
    std::random_device device_;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Generator selected by config.rng; an absent seed is filled from OS entropy.
std::unique_ptr<RandomSource> make_rng(const ScanConfig& config);

}  // namespace edgemap
