// Spectral decomposition tests.
//
// Oracles are independent of the code under test: the Perron root of the
// 3x3 reference matrix is located by bisection on a determinant evaluated
// with the explicit cofactor formula, and the defective-matrix projections
// are built by hand from an explicit similarity S J S^{-1}.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "urnflow/spectral.hpp"

using namespace urnflow;

namespace {

Mat reference3() {
    Mat A(3, 3);
    A << 1, 0, 2,
         0, 2, 1,
         1, 1, 1;
    return A;
}

// det(x I - A) for a 3x3 matrix, explicit cofactor expansion.
double char3(const Mat& A, double x) {
    const double a = x - A(0, 0), b = -A(0, 1), c = -A(0, 2);
    const double d = -A(1, 0), e = x - A(1, 1), f = -A(1, 2);
    const double g = -A(2, 0), h = -A(2, 1), i = x - A(2, 2);
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
}

double bisect_root(const Mat& A, double lo, double hi) {
    double flo = char3(A, lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = (lo + hi) / 2;
        const double fm = char3(A, mid);
        if ((flo < 0) == (fm < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

double max_abs(const CMat& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Perron root of the 3x3 reference matrix matches a bisection oracle") {
    const Mat A = reference3();
    const SpectralData sd = decompose(A);
    const double rho_oracle = bisect_root(A, 2.5, 3.5);
    REQUIRE(std::abs(sd.rho - rho_oracle) < 1e-10);
    REQUIRE(std::abs(sd.rho - 3.0) < 1e-10);  // (x-3)(x^2-x-1)

    // remaining eigenvalues are the golden-ratio pair
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    REQUIRE(sd.comps.size() == 3);
    double got_phi = 0.0, got_psi = 0.0;
    for (const auto& c : sd.comps) {
        if (std::abs(c.lambda - Complex(phi)) < 1e-9) got_phi = 1;
        if (std::abs(c.lambda - Complex(1.0 - phi)) < 1e-9) got_psi = 1;
    }
    REQUIRE(got_phi == 1.0);
    REQUIRE(got_psi == 1.0);

    // gamma is the golden ratio, strictly below sqrt(3): third regime
    REQUIRE(std::abs(sd.gamma - phi) < 1e-9);
    REQUIRE(regime(sd) == 3);
    REQUIRE(sd.primitive);
}

TEST_CASE("Perron pair satisfies the contract normalization") {
    for (const Mat& A : {reference3(), (Mat(2, 2) << 3, 1, 1, 3).finished(),
                         (Mat(2, 2) << 5, 2, 2, 5).finished(), (Mat(1, 1) << 2).finished()}) {
        const PerronData p = perron(A);
        REQUIRE(std::abs(p.u.sum() - 1.0) < 1e-12);
        REQUIRE(std::abs((p.v * p.u)(0) - 1.0) < 1e-12);
        REQUIRE((A * p.u - p.rho * p.u).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE((p.v * A - p.rho * p.v).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("projections form a partition of identity and reconstruct A") {
    std::vector<Mat> corpus;
    corpus.push_back(reference3());
    corpus.push_back((Mat(2, 2) << 3, 1, 1, 3).finished());
    corpus.push_back((Mat(2, 2) << 1, 1, 1, 1).finished());
    corpus.push_back((Mat(3, 3) << 0, 0, 2, 2, 0, 0, 0, 2, 0).finished());
    corpus.push_back((Mat(2, 2) << 2, 1, 0, 2).finished());
    for (const Mat& A : corpus) {
        const SpectralData sd = decompose(A);
        const int n = sd.J;
        CMat sum = CMat::Zero(n, n);
        CMat recon = CMat::Zero(n, n);
        for (const auto& c : sd.comps) {
            // idempotence and commutation with A
            REQUIRE(max_abs(c.pi * c.pi - c.pi) < 1e-8);
            REQUIRE(max_abs(c.pi * A.cast<Complex>() - A.cast<Complex>() * c.pi) < 1e-8);
            // N = (A - lambda) pi and nilpotency at the declared index
            CMat shifted = A.cast<Complex>();
            shifted.diagonal().array() -= c.lambda;
            REQUIRE(max_abs(shifted * c.pi - c.N) < 1e-8);
            CMat Np = CMat::Identity(n, n);
            for (int k = 0; k <= c.d; ++k) Np = Np * c.N;
            REQUIRE(max_abs(Np) < 1e-8);  // N^(d+1) == 0
            sum += c.pi;
            recon += c.lambda * c.pi + c.N;
        }
        REQUIRE(max_abs(sum - CMat::Identity(n, n)) < 1e-8);
        REQUIRE(max_abs(recon - A.cast<Complex>()) < 1e-8);
        // projections of distinct eigenvalues annihilate each other
        for (std::size_t i = 0; i < sd.comps.size(); ++i)
            for (std::size_t j = 0; j < sd.comps.size(); ++j)
                if (i != j) REQUIRE(max_abs(sd.comps[i].pi * sd.comps[j].pi) < 1e-8);
    }
}

TEST_CASE("defective 2x2 Jordan block is recovered exactly") {
    Mat A(2, 2);
    A << 2, 1, 0, 2;
    const SpectralData sd = decompose(A);
    REQUIRE(sd.comps.size() == 1);
    const EigenComponent& c = sd.comps[0];
    REQUIRE(c.multiplicity == 2);
    REQUIRE_FALSE(c.simple);
    REQUIRE(c.d == 1);
    REQUIRE(max_abs(c.pi - CMat::Identity(2, 2)) < 1e-10);
    CMat N_oracle = CMat::Zero(2, 2);
    N_oracle(0, 1) = 1.0;
    REQUIRE(max_abs(c.N - N_oracle) < 1e-10);
}

TEST_CASE("defective 3x3 built from an explicit similarity") {
    // A = S J S^{-1} with J = diag(4) + Jordan block at 1
    Mat S(3, 3), J(3, 3);
    S << 1, 1, 0,
         0, 1, 1,
         1, 0, 1;
    J << 4, 0, 0,
         0, 1, 1,
         0, 0, 1;
    const Mat Sinv = S.inverse();
    const Mat A = S * J * Sinv;
    const SpectralData sd = decompose(A);
    REQUIRE(std::abs(sd.rho - 4.0) < 1e-9);
    REQUIRE(sd.comps.size() == 2);

    Mat E1 = Mat::Zero(3, 3), E23 = Mat::Zero(3, 3), NJ = Mat::Zero(3, 3);
    E1(0, 0) = 1;
    E23(1, 1) = E23(2, 2) = 1;
    NJ(1, 2) = 1;
    const Mat pi4 = S * E1 * Sinv;
    const Mat pi1 = S * E23 * Sinv;
    const Mat N1 = S * NJ * Sinv;

    for (const auto& c : sd.comps) {
        if (std::abs(c.lambda - Complex(4.0)) < 1e-8) {
            REQUIRE(c.multiplicity == 1);
            REQUIRE(max_abs(c.pi - pi4.cast<Complex>()) < 1e-8);
        } else {
            REQUIRE(std::abs(c.lambda - Complex(1.0)) < 1e-8);
            REQUIRE(c.multiplicity == 2);
            REQUIRE(c.d == 1);
            REQUIRE(max_abs(c.pi - pi1.cast<Complex>()) < 1e-8);
            REQUIRE(max_abs(c.N - N1.cast<Complex>()) < 1e-8);
        }
    }
}

TEST_CASE("boundary eigenvalue lands in class 2 and classification is stable") {
    Mat A(2, 2);
    A << 3, 1, 1, 3;  // eigenvalues 4 and 2 = sqrt(4)
    const SpectralData sd = decompose(A);
    REQUIRE(regime(sd) == 2);
    bool found = false;
    for (const auto& c : sd.comps)
        if (std::abs(c.lambda - Complex(2.0)) < 1e-9) {
            REQUIRE(c.cls == SpectralClass::boundary);
            found = true;
        }
    REQUIRE(found);

    // exact class projections: pi2 = [[.5,-.5],[-.5,.5]]
    Mat pi2_oracle(2, 2);
    pi2_oracle << 0.5, -0.5, -0.5, 0.5;
    REQUIRE((sd.pi2 - pi2_oracle).cwiseAbs().maxCoeff() < 1e-10);

    // a perturbation well below the class tolerance keeps the label
    Mat Ap = A;
    Ap(0, 0) += 1e-12;
    REQUIRE(regime(decompose(Ap)) == 2);
    // a visible perturbation moves lambda_2 off the boundary
    Ap(0, 0) = 3.01;
    REQUIRE(regime(decompose(Ap)) != 2);
}

TEST_CASE("assert_on_boundary widens the boundary band") {
    Mat A(2, 2);
    A << 3.0000001, 1, 1, 3;  // lambda_2 just off sqrt(rho)
    DecomposeOptions strict;
    const SpectralData loose = decompose(A, strict);
    REQUIRE(regime(loose) != 2);
    REQUIRE_FALSE(loose.warnings.empty());  // ambiguity warning
    DecomposeOptions forced;
    forced.assert_on_boundary = true;
    const SpectralData sd = decompose(A, forced);
    REQUIRE(regime(sd) == 2);
}

TEST_CASE("cyclic matrix: not primitive, all moduli equal rho") {
    Mat A(3, 3);
    A << 0, 0, 2,
         2, 0, 0,
         0, 2, 0;
    const SpectralData sd = decompose(A);
    REQUIRE(std::abs(sd.rho - 2.0) < 1e-10);
    REQUIRE_FALSE(sd.primitive);
    for (const auto& c : sd.comps) REQUIRE(std::abs(std::abs(c.lambda) - 2.0) < 1e-9);
    REQUIRE(std::abs(sd.gamma - 2.0) < 1e-9);
    REQUIRE(regime(sd) == 1);
    REQUIRE(sd.Gamma.size() == 2);  // the conjugate pair
    // u is uniform and v = (1,1,1)
    for (int j = 0; j < 3; ++j) {
        REQUIRE(std::abs(sd.u(j) - 1.0 / 3.0) < 1e-10);
        REQUIRE(std::abs(sd.v(j) - 1.0) < 1e-10);
    }
}

TEST_CASE("class operators: inverses and restricted resolvents") {
    std::vector<Mat> corpus;
    corpus.push_back(reference3());
    corpus.push_back((Mat(2, 2) << 3, 1, 1, 3).finished());
    corpus.push_back((Mat(2, 2) << 3, 2, 2, 3).finished());
    corpus.push_back((Mat(2, 2) << 5, 2, 2, 5).finished());
    for (const Mat& A : corpus) {
        const SpectralData sd = decompose(A);
        const Mat I = Mat::Identity(sd.J, sd.J);
        REQUIRE((sd.pi1 + sd.pi2 + sd.pi3 - I).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((sd.A1 * sd.A1_inv - I).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((sd.A2 * sd.A2_inv - I).cwiseAbs().maxCoeff() < 1e-8);
        // defining property of the restricted resolvent
        REQUIRE(((sd.A1 - I) * sd.R1 - sd.pi1).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((sd.pi1 * sd.R1 - sd.R1).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE(((sd.A2 - I) * sd.R2 - sd.pi2).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE((sd.pi2 * sd.R2 - sd.R2).cwiseAbs().maxCoeff() < 1e-8);
    }

    // closed form for [[3,2],[2,3]]: R1 = pi1 / 4
    const SpectralData sd = decompose((Mat(2, 2) << 3, 2, 2, 3).finished());
    REQUIRE((sd.R1 - sd.pi1 / 4.0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("component powers match direct computation, including negative powers") {
    const Mat A = reference3();
    const SpectralData sd = decompose(A);
    const CMat Ac = A.cast<Complex>();
    const CMat A2 = Ac * Ac;
    const CMat Ainv = Ac.inverse();
    for (const auto& c : sd.comps) {
        REQUIRE(max_abs(matrix_power_component(sd, c, 2) - A2 * c.pi) < 1e-8);
        REQUIRE(max_abs(matrix_power_component(sd, c, -1) - Ainv * c.pi) < 1e-8);
        REQUIRE(max_abs(matrix_power_component(sd, c, 0) - c.pi) < 1e-10);
    }

    // defective case: powers must pick up the binomial N-terms
    Mat D(2, 2);
    D << 2, 1, 0, 2;
    const SpectralData sdd = decompose(D);
    const CMat D3 = (D * D * D).cast<Complex>();
    REQUIRE(max_abs(matrix_power_component(sdd, sdd.comps[0], 3) - D3) < 1e-8);
    const CMat Dinv = D.inverse().cast<Complex>();
    REQUIRE(max_abs(matrix_power_component(sdd, sdd.comps[0], -1) - Dinv) < 1e-8);
}

TEST_CASE("simple eigenvalue left/right vectors reproduce the projection") {
    const Mat A = reference3();
    const SpectralData sd = decompose(A);
    for (const auto& c : sd.comps) {
        REQUIRE(c.simple);
        REQUIRE(max_abs((A.cast<Complex>() * c.u) - c.lambda * c.u) < 1e-8);
        REQUIRE(max_abs((c.v * A.cast<Complex>()) - c.lambda * c.v) < 1e-8);
        REQUIRE(std::abs((c.v * c.u)(0) - Complex(1.0)) < 1e-8);
        REQUIRE(max_abs(c.u * c.v - c.pi) < 1e-8);
    }
}

TEST_CASE("degenerate inputs are rejected") {
    REQUIRE_THROWS_AS(decompose(Mat::Zero(2, 2)), SpectralError);
    Mat neg(1, 1);
    neg << -1;
    REQUIRE_THROWS_AS(decompose(neg), SpectralError);
}
