#pragma once

#include <cstdint>
#include <string_view>

namespace openfed {

// splitmix64: tiny, fast, and identical on every platform. Used for
// participant sampling and seed derivation, where bit-reproducibility
// across runs matters more than statistical finesse.
struct split_mix64 {
    std::uint64_t state;

    explicit split_mix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n); n must be > 0
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // uniform in [0, 1)
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Documented seed-splitting rule: every component derives its own seed as
// sub_seed(seed, component-name), so the experiment seed fully determines
// all randomness without coupling components to each other.
inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view component) {
    return split_mix64(seed ^ fnv1a64(component)).next();
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
    return split_mix64(seed ^ (index + 0x51ed2701d533a103ull)).next();
}

}  // namespace openfed
