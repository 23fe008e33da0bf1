#include "fundus/rng.hpp"

#include <cmath>
#include <numbers>

namespace fundus {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t state) noexcept : state_(state ? state : kGolden) {}

std::uint64_t RngStream::next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
}

double RngStream::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % n;
}

double RngStream::normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream rng_for(std::uint64_t master_seed, std::uint64_t image_index, std::uint64_t epoch) noexcept {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ splitmix64(image_index + 0x632BE59BD9B4E019ull));
    h = splitmix64(h ^ splitmix64(epoch + 0x85157AF5ull));
    return RngStream(h);
}

}  // namespace fundus
