#ifndef URNFLOW_SPECTRAL_HPP
#define URNFLOW_SPECTRAL_HPP

// Spectral analysis of a nonnegative mean replacement matrix A.
//
// decompose() produces, for every eigenvalue cluster lambda of A, the spectral
// projection pi_lambda and nilpotent part N_lambda = (A - lambda I) pi_lambda
// of the Jordan-Chevalley decomposition  A = sum_lambda (lambda pi_lambda + N_lambda).
// The projections are evaluated as p_lambda(A) where p_lambda is the Hermite
// interpolation polynomial with p_lambda == 1 (to order m_lambda) at lambda and
// == 0 (to order m_mu) at every other eigenvalue mu; this handles simple and
// defective eigenvalues uniformly.
//
// Eigenvalues are classified against sqrt(rho) into the three classes that
// drive the limit behaviour of the urn functionals:
//   class 1:  |lambda| >  sqrt(rho)   (includes the Perron root rho)
//   class 2:  |lambda| == sqrt(rho)
//   class 3:  |lambda| <  sqrt(rho)
// together with the class operators A_i = A pi^(i) + (I - pi^(i)), their
// inverses, and the restricted resolvents (A_i - I)^{-1} pi^(i) used by the
// limit formulas (A_i - I is singular on the complement of range(pi^(i)), so
// the resolvent only exists composed with the projection).

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace urnflow {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using CRowVec = Eigen::RowVectorXcd;
using Complex = std::complex<double>;

inline constexpr double kEpsSpec = 1e-9;   // absolute tolerance on matrix identities

struct SpectralError : std::runtime_error {
    explicit SpectralError(const std::string& what) : std::runtime_error(what) {}
};

enum class SpectralClass { perron, above, boundary, below };

inline const char* class_name(SpectralClass c) {
    switch (c) {
        case SpectralClass::perron: return "perron";
        case SpectralClass::above: return "above";
        case SpectralClass::boundary: return "boundary";
        default: return "below";
    }
}

struct EigenComponent {
    Complex lambda;
    int multiplicity = 1;
    bool simple = true;
    int d = 0;  // nilpotency index: N^d != 0, N^(d+1) == 0
    SpectralClass cls = SpectralClass::below;
    CMat pi;  // spectral projection
    CMat N;   // nilpotent part
    CVec u;   // right eigenvector, simple eigenvalues only
    CRowVec v;  // left eigenvector with v*u = 1, simple eigenvalues only
};

struct PerronData {
    double rho = 0.0;
    Vec u;     // right eigenvector, sum(u) = 1
    RowVec v;  // left eigenvector, v*u = 1
    bool primitive = false;
};

struct DecomposeOptions {
    bool assert_on_boundary = false;  // force class 2 when ||lambda|^2 - rho| < 1e-6
};

struct SpectralData {
    Mat A;
    int J = 0;
    double rho = 0.0;
    double sqrt_rho = 0.0;
    Vec u;
    RowVec v;
    bool primitive = false;
    std::vector<EigenComponent> comps;
    int perron_index = -1;
    double gamma = 0.0;            // largest non-Perron modulus (0 when J = 1)
    std::vector<int> Gamma;        // indices into comps with |lambda| == gamma
    bool gamma_all_simple = true;
    Mat pi1, pi2, pi3;             // class projections (real: classes are conjugation-closed)
    Mat A1, A2;
    Mat A1_inv, A2_inv;
    Mat R1, R2;                    // (A_i - I)^{-1} pi^(i) on range(pi^(i))
    std::vector<std::string> warnings;
};

namespace detail {

// --- polynomial helpers, ascending coefficients -------------------------------

inline std::vector<Complex> poly_mul(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    std::vector<Complex> r(a.size() + b.size() - 1, Complex(0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

// Taylor coefficients of p around c: returns t-coefficients of p(c + t),
// computed by repeated synthetic division by (z - c).
inline std::vector<Complex> poly_taylor(std::vector<Complex> p, Complex c) {
    const std::size_t n = p.size();
    std::vector<Complex> out(n, Complex(0.0));
    for (std::size_t s = 0; s < n && !p.empty(); ++s) {
        Complex rem(0.0);
        for (std::size_t k = p.size(); k-- > 0;) {
            rem = p[k] + rem * c;
            p[k] = rem;
        }
        out[s] = p[0];
        p.erase(p.begin());
    }
    return out;
}

inline Complex poly_eval(const std::vector<Complex>& p, Complex z) {
    Complex r(0.0);
    for (std::size_t k = p.size(); k-- > 0;) r = r * z + p[k];
    return r;
}

inline CMat poly_eval_matrix(const std::vector<Complex>& p, const CMat& M) {
    const Eigen::Index n = M.rows();
    CMat R = CMat::Zero(n, n);
    for (std::size_t k = p.size(); k-- > 0;) {
        R = R * M;
        R.diagonal().array() += p[k];
    }
    return R;
}

// Characteristic polynomial coefficients (monic, ascending) via Faddeev-LeVerrier.
inline std::vector<double> char_poly(const Mat& A) {
    const int n = static_cast<int>(A.rows());
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    Mat Mk = Mat::Identity(n, n);
    for (int k = 1; k <= n; ++k) {
        Mk = (A * Mk).eval();
        const double coeff = -Mk.trace() / k;
        c[static_cast<std::size_t>(n - k)] = coeff;
        Mk.diagonal().array() += coeff;
    }
    return c;
}

// Roots of the characteristic polynomial.  J <= 4 goes through the closed-form /
// companion route with Newton polishing; larger J uses the complex eigensolver.
inline std::vector<Complex> eigenvalue_list(const Mat& A) {
    const int n = static_cast<int>(A.rows());
    if (n == 1) return {Complex(A(0, 0))};
    if (n <= 4) {
        const std::vector<double> c = char_poly(A);
        std::vector<Complex> roots;
        if (n == 2) {
            // z^2 + c1 z + c0
            const Complex disc = Complex(c[1] * c[1] - 4.0 * c[0]);
            const Complex s = std::sqrt(disc);
            roots = {(-c[1] + s) / 2.0, (-c[1] - s) / 2.0};
        } else {
            Mat comp = Mat::Zero(n, n);
            for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
            for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)];
            Eigen::EigenSolver<Mat> es(comp, false);
            for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
        }
        // Newton polish against the exact characteristic coefficients.
        std::vector<Complex> cc(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) cc[i] = Complex(c[i]);
        std::vector<Complex> dc(cc.size() - 1);
        for (std::size_t i = 1; i < cc.size(); ++i) dc[i - 1] = cc[i] * static_cast<double>(i);
        const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
        for (auto& r : roots) {
            for (int it = 0; it < 3; ++it) {
                const Complex pv = poly_eval(cc, r);
                const Complex dv = poly_eval(dc, r);
                if (std::abs(dv) < 1e-12) break;
                const Complex step = pv / dv;
                if (std::abs(step) > 0.5 * scale) break;
                r -= step;
            }
        }
        return roots;
    }
    Eigen::ComplexEigenSolver<CMat> es(A.cast<Complex>(), false);
    std::vector<Complex> roots(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) roots[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

struct Cluster {
    Complex rep;
    int count = 0;
};

// Single-linkage clustering with tolerance eps, then conjugate symmetrization.
inline std::vector<Cluster> cluster_eigenvalues(std::vector<Complex> roots, double eps) {
    std::vector<std::vector<Complex>> groups;
    for (const Complex& r : roots) {
        std::vector<std::size_t> hits;
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (const Complex& m : groups[g])
                if (std::abs(m - r) <= eps) {
                    hits.push_back(g);
                    break;
                }
        if (hits.empty()) {
            groups.push_back({r});
        } else {
            // r may bridge several groups; merge them all into the first
            auto& home = groups[hits.front()];
            home.push_back(r);
            for (std::size_t h = hits.size(); h-- > 1;) {
                auto& g = groups[hits[static_cast<std::size_t>(h)]];
                home.insert(home.end(), g.begin(), g.end());
                groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(hits[static_cast<std::size_t>(h)]));
            }
        }
    }
    std::vector<Cluster> out;
    for (const auto& g : groups) {
        Complex mean(0.0);
        for (const Complex& m : g) mean += m;
        mean /= static_cast<double>(g.size());
        if (std::abs(mean.imag()) <= eps) mean = Complex(mean.real(), 0.0);
        out.push_back({mean, static_cast<int>(g.size())});
    }
    // Force exact conjugate pairing so that class sums are real.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].rep.imag() <= 0.0) continue;
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (i == j || out[j].rep.imag() >= 0.0) continue;
            if (std::abs(std::conj(out[j].rep) - out[i].rep) <= 2 * eps &&
                out[i].count == out[j].count) {
                const Complex m = (out[i].rep + std::conj(out[j].rep)) / 2.0;
                out[i].rep = m;
                out[j].rep = std::conj(m);
                break;
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
        if (std::abs(a.rep) != std::abs(b.rep)) return std::abs(a.rep) > std::abs(b.rep);
        if (a.rep.real() != b.rep.real()) return a.rep.real() > b.rep.real();
        return a.rep.imag() > b.rep.imag();
    });
    return out;
}

}  // namespace detail

// Wielandt bound for the primitivity test: A is primitive iff A^m > 0 for
// m = (J-1)^2 + 1.
inline bool is_primitive(const Mat& A) {
    const int n = static_cast<int>(A.rows());
    const int bound = (n - 1) * (n - 1) + 1;
    std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                         std::vector<bool>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = A(i, j) > 0.0;
    auto all_positive = [&]() {
        for (const auto& row : reach)
            for (bool b : row)
                if (!b) return false;
        return true;
    };
    for (int p = 1; p <= bound; ++p) {
        if (all_positive()) return true;
        // boolean square-free step: reach <- reach * adjacency
        std::vector<std::vector<bool>> nxt(static_cast<std::size_t>(n),
                                           std::vector<bool>(static_cast<std::size_t>(n)));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)])
                    for (int j = 0; j < n; ++j)
                        if (A(k, j) > 0.0) nxt[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
        reach = nxt;
    }
    return all_positive();
}

inline SpectralData decompose(const Mat& A, const DecomposeOptions& opts = {});

// Perron root and the normalized eigenvector pair: A u = rho u with sum(u) = 1,
// v A = rho v with v u = 1.
inline PerronData perron(const Mat& A) {
    SpectralData sd = decompose(A);
    PerronData p;
    p.rho = sd.rho;
    p.u = sd.u;
    p.v = sd.v;
    p.primitive = sd.primitive;
    return p;
}

inline SpectralData decompose(const Mat& A, const DecomposeOptions& opts) {
    SpectralData sd;
    sd.A = A;
    const int n = static_cast<int>(A.rows());
    if (n < 1 || A.rows() != A.cols()) throw SpectralError("decompose: square matrix required");
    sd.J = n;

    const double norm = A.norm();
    const double eps_cluster = 1e-8 * std::max(norm, 1.0);

    std::vector<Complex> roots = detail::eigenvalue_list(A);
    std::vector<detail::Cluster> clusters = detail::cluster_eigenvalues(roots, eps_cluster);

    // Post-merge separation check.
    for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::size_t j = i + 1; j < clusters.size(); ++j)
            if (std::abs(clusters[i].rep - clusters[j].rep) < eps_cluster)
                throw SpectralError("ClusterAmbiguity: eigenvalue clusters closer than tolerance");

    // Perron cluster: the real nonnegative eigenvalue of maximal modulus.
    double max_mod = 0.0;
    for (const auto& c : clusters) max_mod = std::max(max_mod, std::abs(c.rep));
    int perron_idx = -1;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const Complex r = clusters[i].rep;
        if (r.imag() == 0.0 && r.real() > 0.0 && std::abs(std::abs(r) - max_mod) <= eps_cluster) {
            perron_idx = static_cast<int>(i);
            break;
        }
    }
    if (perron_idx < 0 || max_mod <= eps_cluster)
        throw SpectralError("Degenerate: no positive Perron root (rho = 0?)");

    sd.rho = clusters[static_cast<std::size_t>(perron_idx)].rep.real();
    sd.sqrt_rho = std::sqrt(sd.rho);
    sd.perron_index = perron_idx;
    sd.primitive = is_primitive(A);
    if (!sd.primitive) sd.warnings.push_back("NotPrimitive: some power of A has a zero entry");

    // Hermite interpolation projections.
    const CMat Ac = A.cast<Complex>();
    for (const auto& cl : clusters) {
        EigenComponent comp;
        comp.lambda = cl.rep;
        comp.multiplicity = cl.count;
        comp.simple = (cl.count == 1);

        std::vector<Complex> q = {Complex(1.0)};
        for (const auto& other : clusters) {
            if (&other == &cl) continue;
            const std::vector<Complex> factor = {-other.rep, Complex(1.0)};
            for (int m = 0; m < other.count; ++m) q = detail::poly_mul(q, factor);
        }
        // Truncated Taylor inverse of q around lambda.
        const std::vector<Complex> qt = detail::poly_taylor(q, comp.lambda);
        std::vector<Complex> b(static_cast<std::size_t>(cl.count));
        b[0] = 1.0 / qt[0];
        for (int s = 1; s < cl.count; ++s) {
            Complex acc(0.0);
            for (int r = 1; r <= s; ++r)
                acc += (static_cast<std::size_t>(r) < qt.size() ? qt[static_cast<std::size_t>(r)] : Complex(0.0)) *
                       b[static_cast<std::size_t>(s - r)];
            b[static_cast<std::size_t>(s)] = -acc / qt[0];
        }
        // h(z) = sum_s b_s (z - lambda)^s expanded in z, then p = q * h.
        std::vector<Complex> h = {b[static_cast<std::size_t>(cl.count) - 1]};
        const std::vector<Complex> lin = {-comp.lambda, Complex(1.0)};
        for (int s = cl.count - 2; s >= 0; --s) {
            h = detail::poly_mul(h, lin);
            h[0] += b[static_cast<std::size_t>(s)];
        }
        const std::vector<Complex> p = detail::poly_mul(q, h);
        comp.pi = detail::poly_eval_matrix(p, Ac);

        CMat shifted = Ac;
        shifted.diagonal().array() -= comp.lambda;
        comp.N = shifted * comp.pi;
        // Threshold away roundoff and find the nilpotency index.
        for (Eigen::Index r = 0; r < comp.N.rows(); ++r)
            for (Eigen::Index c2 = 0; c2 < comp.N.cols(); ++c2)
                if (std::abs(comp.N(r, c2)) < kEpsSpec) comp.N(r, c2) = Complex(0.0);
        comp.d = 0;
        CMat Np = comp.N;
        while (comp.d < comp.multiplicity - 1 && Np.cwiseAbs().maxCoeff() >= kEpsSpec) {
            ++comp.d;
            Np = Np * comp.N;
        }
        if (comp.simple) {
            // pi is rank one: pick its largest column as u, recover v from pi = u v.
            Eigen::Index best = 0;
            double best_norm = -1.0;
            for (Eigen::Index c2 = 0; c2 < comp.pi.cols(); ++c2) {
                const double cn = comp.pi.col(c2).norm();
                if (cn > best_norm) {
                    best_norm = cn;
                    best = c2;
                }
            }
            CVec uc = comp.pi.col(best);
            // Deterministic phase: largest-modulus entry real positive, unit norm.
            Eigen::Index arg = 0;
            uc.cwiseAbs().maxCoeff(&arg);
            const Complex ph = uc(arg) / std::abs(uc(arg));
            uc /= ph * uc.norm();
            comp.u = uc;
            comp.v = (uc.adjoint() * comp.pi) / uc.squaredNorm();
        }
        sd.comps.push_back(std::move(comp));
    }

    // Partition-of-identity sanity.
    CMat sum = CMat::Zero(n, n);
    for (const auto& c : sd.comps) sum += c.pi;
    sum.diagonal().array() -= Complex(1.0);
    if (sum.cwiseAbs().maxCoeff() > kEpsSpec * n * 100)
        throw SpectralError("NumericalFailure: projections do not sum to identity");

    // Perron vectors with the contract normalization.  A defective Perron root
    // (impossible for primitive matrices) leaves u/v unset with a warning so the
    // purely spectral quantities remain available.
    {
        const EigenComponent& pc = sd.comps[static_cast<std::size_t>(perron_idx)];
        if (!pc.simple) {
            sd.warnings.push_back("Degenerate: Perron root not simple; u/v unavailable");
        } else {
            CVec uc = pc.u;
            CRowVec vc = pc.v;
            Vec u = uc.real();
            if (u.sum() < 0.0) u = -u;
            const double s = u.sum();
            if (std::abs(s) < kEpsSpec) throw SpectralError("Degenerate: Perron eigenvector sums to zero");
            sd.u = u / s;
            sd.v = vc.real();
            const double vu = (sd.v * sd.u)(0);  // fixes scale and any sign flip at once
            if (std::abs(vu) < kEpsSpec) throw SpectralError("Degenerate: v*u nearly zero");
            sd.v /= vu;
        }
    }

    // --- classification ---------------------------------------------------------
    const double eps_class = 1e-9 * sd.sqrt_rho;
    for (std::size_t i = 0; i < sd.comps.size(); ++i) {
        EigenComponent& c = sd.comps[i];
        if (static_cast<int>(i) == perron_idx) {
            c.cls = SpectralClass::perron;
            continue;
        }
        const double m = std::abs(c.lambda);
        const double gap = m - sd.sqrt_rho;
        if (std::abs(gap) <= eps_class) {
            c.cls = SpectralClass::boundary;
        } else if (opts.assert_on_boundary && std::abs(m * m - sd.rho) < 1e-6) {
            c.cls = SpectralClass::boundary;
        } else {
            if (std::abs(m * m - sd.rho) < 1e-6)
                sd.warnings.push_back("OnSqrtRhoAmbiguity: |lambda| within 1e-6 of sqrt(rho) band for lambda index " +
                                      std::to_string(i) + "; pass assert_on_boundary to force class 2");
            c.cls = gap > 0.0 ? SpectralClass::above : SpectralClass::below;
        }
    }

    sd.gamma = 0.0;
    for (std::size_t i = 0; i < sd.comps.size(); ++i) {
        if (static_cast<int>(i) == perron_idx) continue;
        sd.gamma = std::max(sd.gamma, std::abs(sd.comps[i].lambda));
    }
    for (std::size_t i = 0; i < sd.comps.size(); ++i) {
        if (static_cast<int>(i) == perron_idx) continue;
        if (sd.gamma > 0.0 && std::abs(std::abs(sd.comps[i].lambda) - sd.gamma) <= eps_class) {
            sd.Gamma.push_back(static_cast<int>(i));
            if (!sd.comps[i].simple) sd.gamma_all_simple = false;
        }
    }

    // Class projections are real because each class is closed under conjugation.
    CMat p1 = CMat::Zero(n, n), p2 = CMat::Zero(n, n), p3 = CMat::Zero(n, n);
    for (const auto& c : sd.comps) {
        if (c.cls == SpectralClass::perron || c.cls == SpectralClass::above)
            p1 += c.pi;
        else if (c.cls == SpectralClass::boundary)
            p2 += c.pi;
        else
            p3 += c.pi;
    }
    sd.pi1 = p1.real();
    sd.pi2 = p2.real();
    sd.pi3 = p3.real();

    const Mat I = Mat::Identity(n, n);
    sd.A1 = A * sd.pi1 + (I - sd.pi1);
    sd.A2 = A * sd.pi2 + (I - sd.pi2);
    sd.A1_inv = sd.A1.partialPivLu().solve(I);
    sd.A2_inv = sd.A2.partialPivLu().solve(I);
    // Restricted resolvent: (A_i - I + (I - pi)) is invertible whenever no class-i
    // eigenvalue equals 1, which GW1 guarantees for classes 1 and 2.
    sd.R1 = (sd.A1 - I + (I - sd.pi1)).partialPivLu().solve(sd.pi1);
    sd.R2 = (sd.A2 - I + (I - sd.pi2)).partialPivLu().solve(sd.pi2);
    return sd;
}

// Trichotomy of the second-order behaviour: 1 = gamma > sqrt(rho), 2 = boundary,
// 3 = gamma < sqrt(rho).  Read off the stored class labels so a forced boundary
// classification carries through.
inline int regime(const SpectralData& sd) {
    bool any_boundary = false;
    for (const auto& c : sd.comps) {
        if (c.cls == SpectralClass::above) return 1;
        if (c.cls == SpectralClass::boundary) any_boundary = true;
    }
    return any_boundary ? 2 : 3;
}

// Integer powers of A restricted to one spectral component:
//   A^k pi_lambda = lambda^k sum_i C(k,i) lambda^{-i} N^i pi_lambda,
// valid for negative k as well (generalized binomial), provided lambda != 0.
inline CMat matrix_power_component(const SpectralData& sd, const EigenComponent& c, long k) {
    const int n = sd.J;
    if (std::abs(c.lambda) == 0.0) {
        if (k < 0) throw SpectralError("matrix_power_component: negative power of nilpotent component");
        CMat R = c.pi;
        for (long i = 0; i < k; ++i) R = sd.A.cast<Complex>() * R;
        return R;
    }
    CMat R = CMat::Zero(n, n);
    const Complex lk = std::pow(c.lambda, static_cast<double>(k));
    CMat Npow = c.pi;  // N^0 restricted to the component
    double binom = 1.0;
    for (int i = 0; i <= c.d; ++i) {
        R += lk * binom * std::pow(c.lambda, -static_cast<double>(i)) * Npow;
        Npow = c.N * Npow;
        binom *= static_cast<double>(k - i) / static_cast<double>(i + 1);
    }
    return R;
}

}  // namespace urnflow

#endif
