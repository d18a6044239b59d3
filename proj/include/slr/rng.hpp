#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace slr {

// Deterministic random stream. All randomness in a run flows from one root
// seed through named sub-streams so that stages can be reproduced in
// isolation. Uniform values are derived from raw 64-bit draws instead of
// std distributions, which keeps byte-level reproducibility independent of
// the standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Sub-stream addressing: hash of (root, name, a, b).
    static Rng stream(uint64_t root, std::string_view name, uint64_t a = 0, uint64_t b = 0);
    static uint64_t stream_seed(uint64_t root, std::string_view name, uint64_t a = 0,
                                uint64_t b = 0);

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    bool bernoulli(double p) { return next_unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = gen_() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace slr
