#pragma once

#include <array>
#include <cstdint>

namespace floral {

/// xoshiro256** seeded through splitmix64.
///
/// Every draw is specified down to the bit so seeded runs replay identically on
/// any platform; nothing here touches <random> distributions, whose output is
/// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer on [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Standard normal via the Box-Muller transform (one draw per call).
    double normal() noexcept;

    friend bool operator==(const Rng &, const Rng &) = default;

  private:
    std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t &state) noexcept;

}  // namespace floral
