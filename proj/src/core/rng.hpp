#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace scafm {

// splitmix64: used to mix seeds and derive independent substreams.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x8f1bbcdcbfa53e0bull;
    for (uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

// Deterministic RNG wrapper. The engine sequence is fully specified by the
// standard and all value mappings are hand-rolled, so streams are identical
// across compilers and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(splitmix64(seed)) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n); n > 0
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(
            (static_cast<__uint128_t>(next_u64()) * static_cast<uint64_t>(n)) >> 64);
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace scafm
