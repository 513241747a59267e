#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace clit {

// Deterministic RNG. Distributions are hand-rolled on top of mt19937_64 so a
// given seed produces the same stream on every platform and libstdc++ version.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    int64_t below(int64_t n) {
        return static_cast<int64_t>(uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller (one value per call; the pair's second
    // half is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // First `count` entries of a Fisher-Yates shuffle of [0, n).
    std::vector<int64_t> sample_without_replacement(int64_t n, int64_t count) {
        std::vector<int64_t> idx(n);
        for (int64_t i = 0; i < n; ++i) idx[i] = i;
        for (int64_t i = 0; i < count; ++i) {
            const int64_t j = i + below(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(count);
        return idx;
    }

    // Derives an independent child stream (for per-stage or per-worker use).
    Rng fork() { return Rng(next_u64() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace clit
