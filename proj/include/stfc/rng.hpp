#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stfc {

// splitmix64; used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG wrapper. The engine (mt19937_64) is specified by the
// standard; the distributions below are hand-rolled so that identical seeds
// give identical draws on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be > 0. Multiply-shift reduction.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller, one spare cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // k distinct values drawn uniformly from [0, n), in draw order.
    std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k) {
        std::vector<std::uint64_t> pool(n);
        for (std::uint64_t i = 0; i < n; ++i) pool[i] = i;
        if (k > n) k = n;
        for (std::uint64_t i = 0; i < k; ++i) {
            const std::uint64_t j = i + bounded(n - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace stfc
