#pragma once

#include <cstdint>
#include <random>

namespace preqsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// One independent draw stream per stochastic process. Identical
/// (seed, stream_id) reproduces the identical sequence on every platform:
/// mt19937_64 output is fully pinned by the standard, and all sampling
/// goes through next_unit() rather than std::*_distribution.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : gen_(splitmix64(seed ^ splitmix64(stream_id ^ 0xD1B54A32D192ED03ULL))) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0,1), 53-bit resolution
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0, n); modulo bias is irrelevant for the tiny n used here
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

private:
    std::mt19937_64 gen_;
};

}  // namespace preqsim
