#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace depthtrim {

/// Counter-free splitmix64 generator. Small state makes cheap per-task
/// substreams practical: every Monte-Carlo task derives its own engine from
/// (seed, task_index) so results do not depend on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; always consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform index in [0, n), unbiased (Lemire rejection).
    std::size_t index(std::size_t n) {
        if (n == 0) return 0;
        while (true) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            auto lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (0ull - n) % n) return static_cast<std::size_t>(m >> 64);
        }
    }

    static std::uint64_t scramble(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Substream key derivation; mix(seed, k) and mix(seed, k') decorrelate
    /// even for adjacent k.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        return scramble(scramble(a) ^
                        (0xD1B54A32D192ED03ull * (b + 0x632BE59BD9B4E019ull)));
    }

private:
    std::uint64_t state_;
};

inline Rng substream(std::uint64_t seed, std::uint64_t task) {
    return Rng(Rng::mix(seed, task));
}

}  // namespace depthtrim
