#ifndef URNFLOW_RNG_HPP
#define URNFLOW_RNG_HPP

// Seedable random streams for simulation replicates.
//
// Every replicate gets its own stream derived from (master_seed, replicate_index)
// through a splitmix64 chain, so runs are reproducible independently of thread
// count or replicate execution order.  The distribution helpers (uniform double,
// bounded integer, categorical) are implemented here on top of raw 64-bit draws
// instead of <random> distributions, because the standard leaves those
// implementation-defined and we want byte-identical output across toolchains.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace urnflow {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Stream for one replicate of one experiment.
    static Rng for_replicate(std::uint64_t master_seed, std::uint64_t replicate_index) {
        std::uint64_t s = master_seed;
        (void)splitmix64(s);
        s ^= 0x5851f42d4c957f2dULL * (replicate_index + 1);
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), n >= 1.  Rejection keeps it exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    // Index into a cumulative-probability table (last entry ~= 1).
    std::size_t categorical(const std::vector<double>& cumprob) {
        const double u = uniform01();
        std::size_t i = 0;
        while (i + 1 < cumprob.size() && u >= cumprob[i]) ++i;
        return i;
    }

    // Standard normal via Box-Muller (polar form rejected for determinism of
    // draw count; the trig form consumes exactly two uniforms per call).
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace urnflow

#endif
