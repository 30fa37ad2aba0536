// Statistical machinery: reference values for the normal CDF, the Kolmogorov
// and Anderson-Darling null distributions, the incomplete gamma, and
// behavioural checks (power, degenerate inputs, pooling).

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "urnflow/rng.hpp"
#include "urnflow/stats.hpp"

using namespace urnflow;

TEST_CASE("normal cdf reference points") {
    REQUIRE(normal_cdf(0.0) == 0.5);
    REQUIRE(std::abs(normal_cdf(1.959964) - 0.975) < 1e-6);
    REQUIRE(std::abs(normal_cdf(-1.0) - 0.15865525) < 1e-7);
    REQUIRE(std::abs(normal_cdf(3.0) - 0.99865010) < 1e-7);
}

TEST_CASE("Kolmogorov distribution reference points") {
    // classical critical values
    REQUIRE(std::abs(kolmogorov_p(1.224) - 0.10) < 2e-3);
    REQUIRE(std::abs(kolmogorov_p(1.358) - 0.05) < 2e-3);
    REQUIRE(std::abs(kolmogorov_p(1.628) - 0.01) < 1e-3);
    REQUIRE(std::abs(kolmogorov_p(0.828) - 0.50) < 5e-3);
    // the two series forms agree with a high-precision reference on either
    // side of the internal switch at t = 1.18
    REQUIRE(std::abs(kolmogorov_p(1.1799) - 0.12351204971188676) < 1e-12);
    REQUIRE(std::abs(kolmogorov_p(1.1801) - 0.12339559161939294) < 1e-12);
    REQUIRE(kolmogorov_p(0.0) == 1.0);
}

TEST_CASE("KS test behaviour") {
    // constant sample: empirical CDF jumps over the normal median
    std::vector<double> zeros(100, 0.0);
    const TestResult r = ks_test(zeros);
    REQUIRE(std::abs(r.statistic - 0.5) < 1e-12);
    REQUIRE(r.p_value < 1e-12);

    // proper normal draws pass
    Rng rng = Rng::for_replicate(314, 0);
    std::vector<double> sample(100000);
    for (double& x : sample) x = rng.normal();
    REQUIRE(ks_test(sample).p_value > 0.01);

    // a shifted sample is rejected decisively
    std::vector<double> shifted(10000);
    Rng rng2 = Rng::for_replicate(314, 1);
    for (double& x : shifted) x = rng2.normal() + 0.5;
    REQUIRE(ks_test(shifted).p_value < 1e-6);

    std::vector<double> tiny(10, 0.1);
    REQUIRE_THROWS_AS(ks_test(tiny), StatsError);
}

TEST_CASE("Anderson-Darling null distribution and behaviour") {
    // asymptotic case-0 percentage points
    REQUIRE(std::abs(ad_cdf(1.933) - 0.90) < 5e-3);
    REQUIRE(std::abs(ad_cdf(2.492) - 0.95) < 5e-3);
    REQUIRE(std::abs(ad_cdf(3.857) - 0.99) < 5e-3);

    Rng rng = Rng::for_replicate(2718, 0);
    std::vector<double> sample(50000);
    for (double& x : sample) x = rng.normal();
    REQUIRE(ad_test(sample).p_value > 0.01);

    std::vector<double> shifted(10000);
    Rng rng2 = Rng::for_replicate(2718, 1);
    for (double& x : shifted) x = rng2.normal() + 0.5;
    REQUIRE(ad_test(shifted).p_value < 1e-6);
}

TEST_CASE("regularized incomplete gamma") {
    for (const double x : {0.1, 0.5, 1.0, 2.5, 7.0}) {
        REQUIRE(std::abs(gamma_q(1.0, x) - std::exp(-x)) < 1e-12);
        REQUIRE(std::abs(gamma_q(0.5, x) - std::erfc(std::sqrt(x))) < 1e-12);
    }
    // Poisson tail identity Q(3,2) = e^{-2}(1 + 2 + 2)
    REQUIRE(std::abs(gamma_q(3.0, 2.0) - 5.0 * std::exp(-2.0)) < 1e-12);
    // continuity across the series/continued-fraction switch at x = a+1
    REQUIRE(std::abs(gamma_q(2.0, 2.999999) - gamma_q(2.0, 3.000001)) < 1e-5);
}

TEST_CASE("chi-square goodness of fit") {
    // df = 2: p = exp(-stat/2) exactly
    const std::vector<double> obs = {30, 50, 20}, exp = {33, 47, 20};
    const TestResult r = chi_square_gof(obs, exp);
    double stat = 9.0 / 33.0 + 9.0 / 47.0;
    REQUIRE(std::abs(r.statistic - stat) < 1e-12);
    REQUIRE(r.df == 2);
    REQUIRE(std::abs(r.p_value - std::exp(-r.statistic / 2.0)) < 1e-12);

    // perfect agreement
    const TestResult perfect = chi_square_gof({10, 20, 30}, {10, 20, 30});
    REQUIRE(perfect.statistic == 0.0);
    REQUIRE(perfect.p_value == 1.0);

    // cells with tiny expectation are pooled: 4 cells, two below 5, df shrinks
    const TestResult pooled = chi_square_gof({50, 50, 2, 3}, {49, 51, 2.5, 2.5});
    REQUIRE(pooled.df == 2);  // the two small cells merged into one
}

TEST_CASE("chi-square homogeneity") {
    const TestResult same = chi_square_homogeneity({100, 200, 300}, {100, 200, 300});
    REQUIRE(same.statistic == 0.0);
    REQUIRE(same.p_value == 1.0);

    const TestResult diff = chi_square_homogeneity({300, 100, 200}, {100, 300, 200});
    REQUIRE(diff.p_value < 1e-10);

    // one-column degenerate case carries no information
    const TestResult degen = chi_square_homogeneity({40.0}, {60.0});
    REQUIRE(degen.df == 0);
    REQUIRE(degen.p_value == 1.0);
}

TEST_CASE("sample summaries") {
    REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
    REQUIRE(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    REQUIRE(sample_mean({1.0, 2.0, 3.0}) == 2.0);
    REQUIRE(std::abs(sample_variance({1.0, 2.0, 3.0}) - 1.0) < 1e-15);
    REQUIRE_THROWS_AS(median({}), StatsError);
}
