#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace advdet {

// Deterministic random source. All distributions are implemented here
// (instead of <random> distribution objects, whose output is
// implementation-defined) so that a seed pins the exact stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        // rejection sampling keeps the draw unbiased
        uint64_t bound = UINT64_MAX - UINT64_MAX % static_cast<uint64_t>(n);
        uint64_t v;
        do { v = gen_(); } while (v >= bound);
        return static_cast<int>(v % static_cast<uint64_t>(n));
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Per-item seed for batched work: item i uses seed + i.
inline uint64_t derived_seed(uint64_t seed, int64_t index) {
    return seed + static_cast<uint64_t>(index);
}

}  // namespace advdet
