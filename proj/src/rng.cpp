#include "advgraph/rng.hpp"

#include <cmath>

#include "advgraph/common.hpp"

namespace advgraph {

uint64_t Rng::next_below(uint64_t n) {
    require(n > 0, "next_below: n must be positive");
    if ((n & (n - 1)) == 0) return engine_() & (n - 1);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::next_normal() {
    double u1;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

namespace {
uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t fnv1a(uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}
} // namespace

uint64_t derive_seed(uint64_t base, std::string_view tag) {
    return mix64(fnv1a(0xCBF29CE484222325ULL ^ base, tag));
}

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t a) {
    return mix64(derive_seed(base, tag) ^ mix64(a));
}

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t a, uint64_t b) {
    return mix64(derive_seed(base, tag, a) ^ mix64(~b));
}

} // namespace advgraph
