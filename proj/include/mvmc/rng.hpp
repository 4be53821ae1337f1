#pragma once

#include <cstdint>
#include <random>

namespace mvmc {

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// standard); uniform/bernoulli draws are derived here rather than through
// std::*_distribution so that identical seeds give identical byte streams on
// any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(engine_() % span);
    }

    // Derive an independent stream; used to give each experiment sub-phase its
    // own replayable sequence.
    Rng split(std::uint64_t tag) const {
        std::uint64_t z = seed_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace mvmc
