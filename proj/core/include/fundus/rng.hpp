#pragma once

#include <cstdint>

namespace fundus {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// xorshift64* generator. A value type: copy it to fork, never share it.
class RngStream {
public:
    explicit RngStream(std::uint64_t state) noexcept;

    std::uint64_t next() noexcept;
    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) noexcept { return uniform() < p; }
    // Uniform integer in [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n) noexcept;
    // Standard normal via Box-Muller (consumes two draws per call).
    double normal() noexcept;

    std::uint64_t state() const noexcept { return state_; }
    friend bool operator==(const RngStream&, const RngStream&) = default;

private:
    std::uint64_t state_;
};

// Independent stream for one (seed, item, epoch) triple.
RngStream rng_for(std::uint64_t master_seed, std::uint64_t image_index, std::uint64_t epoch) noexcept;

}  // namespace fundus
