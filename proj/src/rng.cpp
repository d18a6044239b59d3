#include "slr/rng.hpp"

namespace slr {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

uint64_t fnv1a_bytes(uint64_t h, const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= kFnvPrime;
    }
    return h;
}

// splitmix64 finalizer, spreads the fnv hash over all bits.
uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

uint64_t Rng::stream_seed(uint64_t root, std::string_view name, uint64_t a, uint64_t b) {
    uint64_t h = kFnvOffset;
    h = fnv1a_bytes(h, &root, sizeof root);
    h = fnv1a_bytes(h, name.data(), name.size());
    h = fnv1a_bytes(h, &a, sizeof a);
    h = fnv1a_bytes(h, &b, sizeof b);
    return mix(h);
}

Rng Rng::stream(uint64_t root, std::string_view name, uint64_t a, uint64_t b) {
    return Rng(stream_seed(root, name, a, b));
}

}  // namespace slr
