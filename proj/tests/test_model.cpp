// Replacement-law validation, moments, assumption checks, and the exact
// enumeration oracle.  Golden values for the 3-type reference law (B(2) split
// 1/2 - 1/2, P(B(4)=(5,3,4)) = 1/6) are checked as exact rationals.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "urnflow/model.hpp"

using namespace urnflow;

namespace {

ReplacementLaw reference_law() { return load_law(std::string(URNFLOW_DATA_DIR) + "/appendix_a.json"); }

ReplacementLaw boundary_law() { return load_law(std::string(URNFLOW_DATA_DIR) + "/case_ii.json"); }

std::map<std::vector<std::int64_t>, Rational> as_map(const ExactDistribution& d) {
    std::map<std::vector<std::int64_t>, Rational> m;
    for (const auto& e : d.entries) m[e.B] = e.prob_exact;
    return m;
}

}  // namespace

TEST_CASE("reference law golden values, exact rationals") {
    const ReplacementLaw law = reference_law();

    const ExactDistribution d1 = exact_distribution(law, 0, 1);
    REQUIRE(d1.exact);
    REQUIRE(d1.entries.size() == 1);
    REQUIRE(d1.entries[0].B == std::vector<std::int64_t>{2, 0, 1});
    REQUIRE(d1.entries[0].prob_exact == Rational(1));

    const auto d2 = as_map(exact_distribution(law, 0, 2));
    REQUIRE(d2.size() == 2);
    REQUIRE(d2.at({4, 1, 2}) == Rational(1, 2));
    REQUIRE(d2.at({3, 0, 2}) == Rational(1, 2));

    const auto d3 = as_map(exact_distribution(law, 0, 3));
    REQUIRE(d3.size() == 1);
    REQUIRE(d3.at({5, 1, 3}) == Rational(1));

    const auto d4 = as_map(exact_distribution(law, 0, 4));
    REQUIRE(d4.at({5, 3, 4}) == Rational(1, 6));
    REQUIRE(d4.at({6, 1, 4}) == Rational(1, 2));
    REQUIRE(d4.at({7, 2, 4}) == Rational(1, 3));
}

TEST_CASE("mean matrix is the weighted average of column outcomes") {
    const ReplacementLaw law = reference_law();
    Mat expected(3, 3);
    expected << 1, 0, 2,
                0, 2, 1,
                1, 1, 1;
    REQUIRE((mean_matrix(law) - expected).cwiseAbs().maxCoeff() == 0.0);

    ReplacementLaw two;
    two.J = 2;
    two.columns = {{{{4, 2}, 0.5}, {{2, 0}, 0.5}}, {{{1, 1}, 1.0}}};
    Mat e2(2, 2);
    e2 << 3, 1, 1, 1;
    REQUIRE((mean_matrix(two) - e2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("covariance: deterministic columns are exactly zero") {
    const ReplacementLaw law = reference_law();
    for (int j = 0; j < 3; ++j) REQUIRE(covariance(law, j).cwiseAbs().maxCoeff() == 0.0);

    ReplacementLaw bern;
    bern.J = 2;
    bern.columns = {{{{2, 0}, 0.5}, {{0, 0}, 0.5}}, {{{1, 1}, 1.0}}};
    Mat expected(2, 2);
    expected << 1, 0, 0, 0;
    REQUIRE((covariance(bern, 0) - expected).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(covariance(bern, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assumption report over the corpus") {
    const AssumptionReport det = check_assumptions(reference_law());
    REQUIRE(det.gw1);
    REQUIRE(det.gw2);
    REQUIRE_FALSE(det.gw3);  // deterministic law: zero covariance sum
    REQUIRE(det.gw4);
    REQUIRE(det.moment_2_plus_delta);

    const AssumptionReport noisy = check_assumptions(boundary_law());
    REQUIRE(noisy.gw1);
    REQUIRE(noisy.gw2);
    REQUIRE(noisy.gw3);

    ReplacementLaw dead;
    dead.J = 1;
    dead.columns = {{{{0}, 1.0}}};
    const AssumptionReport sub = check_assumptions(dead);
    REQUIRE_FALSE(sub.gw1);  // rho = 0
}

TEST_CASE("column sampling: determinism and empirical mean") {
    const ReplacementLaw law = boundary_law();
    Rng a = Rng::for_replicate(99, 0);
    Rng b = Rng::for_replicate(99, 0);
    for (int i = 0; i < 1000; ++i) REQUIRE(sample_column(law, 0, a) == sample_column(law, 0, b));

    // column 1 of the boundary law has mean (3,1) and per-coordinate SD 1
    Rng r = Rng::for_replicate(7, 1);
    const int n = 100000;
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& off = sample_column(law, 0, r);
        s0 += static_cast<double>(off[0]);
        s1 += static_cast<double>(off[1]);
    }
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    REQUIRE(std::abs(s0 / n - 3.0) < 4 * se);
    REQUIRE(std::abs(s1 / n - 1.0) < 4 * se);

    const ReplacementLaw det = reference_law();
    Rng q = Rng::for_replicate(1, 1);
    REQUIRE(sample_column(det, 2, q) == std::vector<std::int64_t>{2, 1, 1});
}

TEST_CASE("exact distribution probabilities sum to one") {
    for (const auto& law : {reference_law(), boundary_law()}) {
        for (int n = 1; n <= 4; ++n) {
            const ExactDistribution d = exact_distribution(law, 0, n);
            double total = 0.0;
            for (const auto& e : d.entries) total += e.prob;
            REQUIRE(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("enumerator mean consistency: E[B(n)] follows the draw-probability recursion") {
    for (const auto& law : {reference_law(), boundary_law()}) {
        const Mat A = mean_matrix(law);
        const int J = law.J;
        for (int n = 1; n <= 4; ++n) {
            // E[B(n)] directly
            Vec EB = Vec::Zero(J);
            for (const auto& e : exact_distribution(law, 0, n).entries)
                for (int i = 0; i < J; ++i) EB(i) += e.prob * static_cast<double>(e.B[static_cast<std::size_t>(i)]);
            // E[B(n-1)] + sum over states of p * sum_i P(draw i) * A e_i
            Vec rec = Vec::Zero(J);
            for (const auto& e : exact_distribution(law, 0, n - 1).entries)
                for (int i = 0; i < J; ++i) rec(i) += e.prob * static_cast<double>(e.B[static_cast<std::size_t>(i)]);
            for (const auto& s : exact_state_distribution(law, 0, n - 1)) {
                double total = 0.0;
                for (const std::int64_t c : s.active) total += static_cast<double>(c);
                if (total == 0.0) continue;  // extinct: no increment
                for (int i = 0; i < J; ++i)
                    if (s.active[static_cast<std::size_t>(i)] > 0)
                        rec += s.prob * (static_cast<double>(s.active[static_cast<std::size_t>(i)]) / total) * A.col(i);
            }
            REQUIRE((EB - rec).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("deterministic law support never exceeds the number of draw orders") {
    const ReplacementLaw law = reference_law();
    const std::map<int, std::size_t> expected = {{1, 1}, {2, 2}, {3, 1}, {4, 3}};
    for (const auto& [n, size] : expected)
        REQUIRE(exact_distribution(law, 0, n).entries.size() == size);
}

TEST_CASE("budget exhaustion raises with the leaf count") {
    const ReplacementLaw law = boundary_law();
    try {
        exact_distribution(law, 0, 6, 50);
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded& e) {
        REQUIRE(e.leaves > 50);
    }
}

TEST_CASE("law JSON round-trip and validation errors") {
    const ReplacementLaw law = boundary_law();
    const ReplacementLaw back = law_from_json(law_to_json(law));
    REQUIRE(back.J == law.J);
    REQUIRE(back.columns.size() == law.columns.size());
    for (int j = 0; j < law.J; ++j) {
        const auto& a = law.columns[static_cast<std::size_t>(j)];
        const auto& b = back.columns[static_cast<std::size_t>(j)];
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            REQUIRE(a[k].offspring == b[k].offspring);
            REQUIRE(a[k].prob == b[k].prob);
        }
    }

    ReplacementLaw bad = law;
    bad.columns[0][0].prob = 0.7;  // probabilities no longer sum to 1
    REQUIRE_THROWS_AS(validate_law(bad), LawError);
    bad = law;
    bad.columns[0][0].offspring[0] = -1;
    REQUIRE_THROWS_AS(validate_law(bad), LawError);
}

TEST_CASE("thirds rationalize from doubles") {
    ReplacementLaw law;
    law.J = 1;
    law.columns = {{{{1}, 1.0 / 3.0}, {{2}, 2.0 / 3.0}}};
    const ExactDistribution d = exact_distribution(law, 0, 1);
    REQUIRE(d.exact);
    std::map<std::vector<std::int64_t>, Rational> m;
    for (const auto& e : d.entries) m[e.B] = e.prob_exact;
    REQUIRE(m.at({2}) == Rational(1, 3));
    REQUIRE(m.at({3}) == Rational(2, 3));
}
