// RNG determinism and distribution sanity.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "urnflow/rng.hpp"

using namespace urnflow;

TEST_CASE("replicate streams are deterministic and distinct") {
    Rng a = Rng::for_replicate(42, 0);
    Rng b = Rng::for_replicate(42, 0);
    Rng c = Rng::for_replicate(42, 1);
    Rng d = Rng::for_replicate(43, 0);
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 16; ++i) {
        const std::uint64_t x = a.next_u64();
        REQUIRE(x == b.next_u64());
        firsts.insert(x);
    }
    // different replicate or master seed => different stream
    bool diff_c = false, diff_d = false;
    for (int i = 0; i < 16; ++i) {
        if (firsts.count(c.next_u64()) == 0) diff_c = true;
        if (firsts.count(d.next_u64()) == 0) diff_d = true;
    }
    REQUIRE(diff_c);
    REQUIRE(diff_d);
}

TEST_CASE("uniform01 stays in [0,1) with mean 1/2") {
    Rng r = Rng::for_replicate(7, 3);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.uniform01();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        sum += x;
    }
    // SE of the mean is 1/sqrt(12 n) ~ 6.5e-4; allow 5 sigma
    REQUIRE(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("below(n) is bounded and roughly uniform") {
    Rng r = Rng::for_replicate(11, 0);
    const int n = 7;
    std::vector<int> counts(n, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t k = r.below(n);
        REQUIRE(k < static_cast<std::uint64_t>(n));
        ++counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < n; ++k) {
        // expected 10000 per cell, SD ~ 95; allow 6 sigma
        REQUIRE(std::abs(counts[static_cast<std::size_t>(k)] - draws / n) < 600);
    }
}

TEST_CASE("normal() has third-moment-checked standard moments") {
    Rng r = Rng::for_replicate(5, 9);
    const int n = 400000;
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        m1 += x;
        m2 += x * x;
        m3 += x * x * x;
    }
    m1 /= n;
    m2 /= n;
    m3 /= n;
    REQUIRE(std::abs(m1) < 5.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(m2 - 1.0) < 5.0 * std::sqrt(2.0 / n));
    REQUIRE(std::abs(m3) < 5.0 * std::sqrt(15.0 / n));
}

TEST_CASE("categorical respects cumulative weights") {
    Rng r = Rng::for_replicate(123, 0);
    const std::vector<double> cum = {0.2, 0.5, 1.0};
    std::vector<int> counts(3, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[r.categorical(cum)];
    REQUIRE(std::abs(counts[0] / static_cast<double>(draws) - 0.2) < 0.01);
    REQUIRE(std::abs(counts[1] / static_cast<double>(draws) - 0.3) < 0.01);
    REQUIRE(std::abs(counts[2] / static_cast<double>(draws) - 0.5) < 0.01);
}
