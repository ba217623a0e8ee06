#pragma once

// Counter-based Gaussian increments. Every draw is a pure function of
// (seed, stream, step, channel), so results do not depend on how work is
// scheduled across threads.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace mvldp::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Sub-seed for a purpose tag and replica index. Adding replicas never
/// changes the seeds of existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                    std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed ^ tag_hash(purpose)) + index);
}

constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t step, std::uint64_t lane) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ stream);
    h = splitmix64(h ^ step);
    return splitmix64(h ^ lane);
}

/// Uniform on the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw for (seed, stream, step, channel) via Box-Muller.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t step,
                     std::uint64_t channel) noexcept {
    const double u1 = to_open_unit(counter_bits(seed, stream, step, 2 * channel));
    const double u2 = to_open_unit(counter_bits(seed, stream, step, 2 * channel + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential generator for auditing and sampling; deterministic given its seed.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {}

    double uniform() noexcept { return to_open_unit(counter_bits(seed_, stream_, counter_++, 0)); }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept { return rng::normal(seed_, stream_, counter_++, 0); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace mvldp::rng
