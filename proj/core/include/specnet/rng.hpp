#pragma once

#include <cstdint>
#include <string>

namespace specnet {

// Counter-based pseudo-random stream (splitmix64 finalizer over a keyed
// counter). The full state is (key, counter), so a stream can be digested,
// replayed, and compared across runs. All randomized routines in the library
// draw from this type; nothing uses <random> engines, which keeps output
// identical across standard library implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Per-trajectory key derivation: pure function of (master, index).
    static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
        return mix(master ^ mix(index + 0x9E3779B97F4A7C15ull));
    }

    std::uint64_t next_u64() {
        ++counter_;
        return mix(key_ + 0x9E3779B97F4A7C15ull * counter_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased uniform integer in [0, bound) via Lemire rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) return 0;
        while (true) {
            std::uint64_t x = next_u64();
            unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
            std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= (-bound) % bound) {
                return static_cast<std::uint64_t>(m >> 64);
            }
        }
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    // Compact state fingerprint for trajectory records.
    std::string digest() const {
        std::uint64_t d = mix(key_ + 0x9E3779B97F4A7C15ull * counter_);
        static const char* hex = "0123456789abcdef";
        std::string out(16, '0');
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = hex[d & 0xF];
            d >>= 4;
        }
        return out;
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace specnet
