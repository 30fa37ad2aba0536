#ifndef URNFLOW_LIMITS_HPP
#define URNFLOW_LIMITS_HPP

// Closed-form evaluation of the limit-theory quantities attached to a law:
// the centered mean row w_j, the vectors x_i(Phi), the deterministic leading
// term F^Phi_n and its piecewise-linear extension curly-F, the boundary
// variances sigma_l^2(Phi), the full variance sigma^2(Phi) built from the
// centered characteristic Psi^Phi, the 1-periodic scaling functions l_lambda,
// h, h^{-1}, Uppsi and f_lambda, the regime trichotomy with its nondegeneracy
// hypotheses, and the case-i oscillatory expansion.
//
// The only truncated series here is the k-sum in sigma^2.  Everything else is
// exact: the l-sums inside Psi^Phi are geometric on the class-1/class-2 side
// and collapse to the restricted resolvents R_i = (A_i - I)^{-1} pi^(i)
// (sum_{s>=1} A^{-s} pi^(i) = R_i), while the class-3 side is a finite sum.
// Variances are computed by exact enumeration over the finite column supports
// with the column-independence factorization, never by Monte Carlo, so the
// acceptance comparisons carry no sampling noise of their own.
//
// Characteristics are the families Phi = a Phi^t + b Phi^j with threshold
// x in [0,1): Phi_x(k) = (a 1 + b e_j^T L)(1{k >= 1} + 1{k = 0} 1{U <= x}),
// so E[Phi_x(k)] is 0 for k < 0, x*m at k = 0 and m = a 1 + b e_j^T A for
// k >= 1.  The mark U is independent of the offspring column L, but Phi(k)
// and Psi^Phi(k) share the same L, which the per-column enumeration respects.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "urnflow/embedding.hpp"
#include "urnflow/model.hpp"
#include "urnflow/spectral.hpp"

namespace urnflow {

inline constexpr double kEpsTailDefault = 1e-12;  // relative k-sum tail target
inline constexpr double kSigmaPositiveTol = 1e-10;  // sigma_l^2 > tol counts as positive

struct LimitsError : std::runtime_error {
    explicit LimitsError(const std::string& what) : std::runtime_error(what) {}
};

// A class-i eigenvalue sits at 1, so (A_i - I) is not invertible on range(pi).
struct SingularResolvent : LimitsError {
    int klass;
    explicit SingularResolvent(int i)
        : LimitsError("SingularResolvent: class-" + std::to_string(i) +
                      " eigenvalue within tolerance of 1"),
          klass(i) {}
};

// The geometric bound on the k-sum tail has ratio >= 1.  Cannot happen once
// the spectrum is classified under GW1; kept as a defensive check.
struct TailNotConvergent : LimitsError {
    double ratio;
    explicit TailNotConvergent(double r)
        : LimitsError("TailNotConvergent: tail ratio " + std::to_string(r) + " >= 1"), ratio(r) {}
};

// Var[G^Phi(y)] <= 0 at a grid point: the nondegeneracy hypothesis of the
// limit theorem fails for this law and characteristic.
struct DegenerateVariance : LimitsError {
    double y;
    explicit DegenerateVariance(double y_)
        : LimitsError("DegenerateVariance: Var[G(y)] <= 0 at y = " + std::to_string(y_)), y(y_) {}
};

struct GammaNotSimple : LimitsError {
    GammaNotSimple() : LimitsError("GammaNotSimple: a gamma-circle eigenvalue is not simple") {}
};

// --- elementary rows -----------------------------------------------------------

// w_j = e_j^T A - rho u_j 1; always orthogonal to u since A u = rho u.
inline RowVec w_vector(const SpectralData& sd, int j) {
    if (j < 0 || j >= sd.J) throw LimitsError("w_vector: type index out of range");
    return sd.A.row(j) - sd.rho * sd.u(j) * RowVec::Ones(sd.J);
}

// E[Phi(k)] for k >= 1: m = a 1 + b e_j^T A.  (E[Phi(0)] = x m, zero below.)
inline RowVec mean_row(const SpectralData& sd, const CharacteristicSpec& spec) {
    RowVec m = spec.a * RowVec::Ones(sd.J);
    if (spec.b != 0.0) {
        if (spec.j < 0 || spec.j >= sd.J) throw LimitsError("mean_row: type index out of range");
        m += spec.b * sd.A.row(spec.j);
    }
    return m;
}

namespace detail {

inline bool in_class(const EigenComponent& c, int i) {
    if (i == 1) return c.cls == SpectralClass::perron || c.cls == SpectralClass::above;
    if (i == 2) return c.cls == SpectralClass::boundary;
    return c.cls == SpectralClass::below;
}

inline void check_resolvent(const SpectralData& sd, int i) {
    for (const auto& c : sd.comps)
        if (in_class(c, i) && std::abs(c.lambda - Complex(1.0)) < kEpsSpec)
            throw SingularResolvent(i);
}

// A^k pi^(i) as a real matrix, any integer k (classes 1 and 2 only for k < 0,
// where every eigenvalue is nonzero).  Conjugate pairs make the class sum real.
inline Mat class_power(const SpectralData& sd, int i, long k) {
    CMat acc = CMat::Zero(sd.J, sd.J);
    for (const auto& c : sd.comps)
        if (in_class(c, i)) acc += matrix_power_component(sd, c, k);
    return acc.real();
}

inline Mat mat_power(Mat base, long n) {
    Mat r = Mat::Identity(base.rows(), base.cols());
    for (; n > 0; n >>= 1) {
        if (n & 1) r = (r * base).eval();
        base = (base * base).eval();
    }
    return r;
}

inline const Mat& restricted_resolvent(const SpectralData& sd, int i) {
    return i == 1 ? sd.R1 : sd.R2;
}

inline const Mat& class_projection(const SpectralData& sd, int i) {
    return i == 1 ? sd.pi1 : (i == 2 ? sd.pi2 : sd.pi3);
}

}  // namespace detail

// x_i(Phi) = sum_{k in N} E[Phi(k)] pi^(i) A_i^{-k} = m (x I + R_i) pi^(i):
// the k = 0 term contributes x m pi^(i), the geometric rest m R_i.
inline CRowVec x_vectors(const SpectralData& sd, const CharacteristicSpec& spec, int i) {
    if (i != 1 && i != 2) throw LimitsError("x_vectors: class index must be 1 or 2");
    if (spec.x < 0.0 || spec.x >= 1.0)
        throw LimitsError("x_vectors: threshold must lie in [0,1)");
    detail::check_resolvent(sd, i);
    const RowVec m = mean_row(sd, spec);
    const RowVec r = spec.x * (m * detail::class_projection(sd, i)) +
                     m * detail::restricted_resolvent(sd, i);
    return r.cast<Complex>();
}

// F^Phi_n = x_1(Phi) A_1^n W^(1) + x_2(Phi) A_2^n Z_0 with A_i^n = A^n pi^(i)
// + (I - pi^(i)) (the two summands commute and annihilate each other).
inline double F_n(const SpectralData& sd, const CharacteristicSpec& spec, long n, const Vec& W1,
                  const Vec& Z0) {
    if (n < 0) throw LimitsError("F_n: generation index must be nonnegative");
    const Mat I = Mat::Identity(sd.J, sd.J);
    const Mat An = detail::mat_power(sd.A, n);
    const RowVec x1 = x_vectors(sd, spec, 1).real();
    const RowVec x2 = x_vectors(sd, spec, 2).real();
    const double f1 = x1 * (An * sd.pi1 + (I - sd.pi1)) * W1;
    const double f2 = x2 * (An * sd.pi2 + (I - sd.pi2)) * Z0;
    return f1 + f2;
}

// curly-F(x): the piecewise-linear extension, interpolating the integer values
// of the threshold-0 family.  This equals F_{floor(x)} of the family with
// threshold {x} exactly, because x_i(Phi_s) is affine in s and R_i A_i =
// pi^(i) + R_i stitches consecutive integers together.  spec.x is ignored.
inline double curly_F(const SpectralData& sd, const CharacteristicSpec& spec, double x,
                      const Vec& W1, const Vec& Z0) {
    if (x < 0.0) throw LimitsError("curly_F: argument must be nonnegative");
    CharacteristicSpec base = spec;
    base.x = 0.0;
    const long n = static_cast<long>(std::floor(x));
    const double s = x - static_cast<double>(n);
    const double lo = F_n(sd, base, n, W1, Z0);
    if (s == 0.0) return lo;
    const double hi = F_n(sd, base, n + 1, W1, Z0);
    return (1.0 - s) * lo + s * hi;
}

// Inverse of curly-F for the total-count family (or any strictly increasing
// one): bracket on consecutive integers, then solve the linear piece.
inline double curly_F_inverse(const SpectralData& sd, const CharacteristicSpec& spec, double target,
                              const Vec& W1, const Vec& Z0) {
    CharacteristicSpec base = spec;
    base.x = 0.0;
    double lo = F_n(sd, base, 0, W1, Z0);
    if (target < lo) throw LimitsError("curly_F_inverse: target below curly_F(0)");
    long n = 0;
    double hi = F_n(sd, base, 1, W1, Z0);
    while (hi < target) {
        lo = hi;
        ++n;
        if (n > 4096) throw LimitsError("curly_F_inverse: target not bracketed");
        hi = F_n(sd, base, n + 1, W1, Z0);
    }
    const double denom = hi - lo;
    if (!(denom > 0.0)) throw LimitsError("curly_F_inverse: flat segment, cannot invert");
    return static_cast<double>(n) + (target - lo) / denom;
}

// --- boundary variances sigma_l^2 ----------------------------------------------

namespace detail {

// Entrywise variance row of r L: entry i is E|r L^(i) - r A e_i|^2, by exact
// enumeration of column i's outcomes.  Columns are independent, so the cost is
// the sum of the support sizes.
inline RowVec column_variances(const ReplacementLaw& law, const Mat& A, const CRowVec& r) {
    const int J = law.J;
    RowVec var(J);
    for (int i = 0; i < J; ++i) {
        const Complex mean = (r * A.col(i).cast<Complex>()).value();
        double acc = 0.0;
        for (const auto& out : law.columns[static_cast<std::size_t>(i)]) {
            Complex z(0.0);
            for (int t = 0; t < J; ++t)
                z += r(t) * static_cast<double>(out.offspring[static_cast<std::size_t>(t)]);
            acc += out.prob * std::norm(z - mean);
        }
        var(i) = acc;
    }
    return var;
}

}  // namespace detail

// sigma_l^2(Phi) = rho^{-l-1} / ((2l+1)(l!)^2) sum_{lambda in sigma^2}
//                  Var[x_2(Phi) pi_lambda (A - lambda I)^l L] u,
// where (A - lambda I)^l pi_lambda = N_lambda^l, so components with nilpotency
// index below l contribute nothing and the sum is exactly zero when the
// boundary class is empty.
//
// The rho exponent is -(l+1), not -l: summing the per-generation innovation
// variances, generation t contributes |lambda|^{2(m-t)} rho^{t-1} Var[.] u to
// Var[X(m)] on the boundary (|lambda|^2 = rho), i.e. m rho^{m-1} Var[.] u in
// total, and dividing by the normalization m rho^m leaves rho^{-1} at l = 0.
// Each extra nilpotent order contributes another (m-t)^l / m^l rho^{-l} pair
// through the (2l+1)(l!)^2 integral.  Checked against direct simulation: both
// Var[B_j(n)] / (n log_rho n) in the urn and the fixed-generation fluctuation
// variance of Z^Phi(m) - rho Z^Phi(m-1) match this constant and are exactly a
// factor rho below the -l reading.
inline double sigma_l_sq(const SpectralData& sd, const ReplacementLaw& law,
                         const CharacteristicSpec& spec, int ell) {
    if (ell < 0) throw LimitsError("sigma_l_sq: ell must be nonnegative");
    const CRowVec x2 = x_vectors(sd, spec, 2);
    double acc = 0.0;
    for (const auto& c : sd.comps) {
        if (c.cls != SpectralClass::boundary) continue;
        CMat Nl = c.pi;
        for (int t = 0; t < ell; ++t) Nl = (c.N * Nl).eval();
        if (Nl.cwiseAbs().maxCoeff() < kEpsSpec) continue;  // N^l vanished
        const CRowVec r = x2 * Nl;
        acc += detail::column_variances(law, sd.A, r) * sd.u;
    }
    double fact = 1.0;
    for (int t = 2; t <= ell; ++t) fact *= static_cast<double>(t);
    return std::pow(sd.rho, -(static_cast<double>(ell) + 1.0)) /
           (static_cast<double>(2 * ell + 1) * fact * fact) * acc;
}

// --- full variance sigma^2 -------------------------------------------------------

struct TruncationDiagnostics {
    int k_lo = 0, k_hi = 0;            // k-range actually summed
    double ratio_low = 0.0;            // geometric ratio toward k -> -inf
    double ratio_high = 0.0;           // geometric ratio toward k -> +inf
    double bound_low = 0.0;            // final tail bounds at the cut
    double bound_high = 0.0;
};

namespace detail {

// The deterministic row of Psi^Phi(k): Psi^Phi(k) = row_k (L - A) with
//   row_k = sum_l E[Phi(k-l-1)] A^l P(k,l).
// Substituting m = k-l-1 and using E[Phi(m)] = 0 (m<0), x*mrow (m=0), mrow
// (m>=1) together with sum_{s>=1} A^{-s} pi^(i) = R_i gives closed forms:
//   k <= 0:  only the l<0 branch, P = -pi^(1):
//            row_k = -mrow A^{k-1} pi^(1) (x I + R_1)
//   k >= 1:  l>=0 branch +pi^(3) is the finite sum x mrow A^{k-1} pi^(3)
//            + mrow sum_{t=0}^{k-2} A^t pi^(3); the l<0 branch -(pi^(1)+pi^(2))
//            sums to -mrow (R_1 + R_2), independent of k.
struct PsiRows {
    const SpectralData* sd = nullptr;
    RowVec mrow;
    double x = 0.0;
    RowVec const_tail;  // -mrow (R_1 + R_2), the k >= 1 resolvent part
    // incremental class-3 state for ascending k >= 1
    Mat P3;  // A^{k-1} pi^(3) for the current k
    Mat S3;  // sum_{t=0}^{k-2} A^t pi^(3) for the current k
    long k_pos = 0;

    PsiRows(const SpectralData& s, const RowVec& m, double x_) : sd(&s), mrow(m), x(x_) {
        const_tail = -(mrow * (s.R1 + s.R2));
        P3 = s.pi3;
        S3 = Mat::Zero(s.J, s.J);
        k_pos = 1;
    }

    RowVec row_nonpositive(long k) const {
        const Mat P1 = class_power(*sd, 1, k - 1);
        return -(x * (mrow * P1) + mrow * (P1 * sd->R1));
    }

    // Rows for k = 1, 2, ... must be requested in ascending order.
    RowVec row_positive_next() {
        const RowVec r = x * (mrow * P3) + mrow * S3 + const_tail;
        S3 += P3;
        P3 = (sd->A * P3).eval();
        ++k_pos;
        return r;
    }
};

// Var[Phi(k) e_i + row (L - A) e_i] u summed over columns i, enumerating the
// shared randomness: the same column outcome feeds both Phi(k) and L - A, and
// the mark U (only relevant at k = 0) is independent of it.
inline double variance_term(const ReplacementLaw& law, const SpectralData& sd,
                            const CharacteristicSpec& spec, const RowVec& row, long k) {
    const int J = law.J;
    double total = 0.0;
    for (int i = 0; i < J; ++i) {
        const auto& col = law.columns[static_cast<std::size_t>(i)];
        double var_i = 0.0;
        if (k < 0) {
            for (const auto& out : col) {
                double t = 0.0;
                for (int s = 0; s < J; ++s)
                    t += row(s) *
                         (static_cast<double>(out.offspring[static_cast<std::size_t>(s)]) - sd.A(s, i));
                var_i += out.prob * t * t;
            }
        } else if (k >= 1) {
            // Phi(k) e_i = a + b L_{ji}: the constant a cancels in the variance.
            const double mean_b = spec.b != 0.0 ? spec.b * sd.A(spec.j, i) : 0.0;
            for (const auto& out : col) {
                double t = 0.0;
                for (int s = 0; s < J; ++s)
                    t += row(s) *
                         (static_cast<double>(out.offspring[static_cast<std::size_t>(s)]) - sd.A(s, i));
                if (spec.b != 0.0)
                    t += spec.b * static_cast<double>(out.offspring[static_cast<std::size_t>(spec.j)]) -
                         mean_b;
                var_i += out.prob * t * t;
            }
        } else {
            // k = 0: Phi(0) e_i = (a + b L_{ji}) 1{U <= x} with U independent of L.
            const double p_on = spec.x;
            double e1 = 0.0, e2 = 0.0;
            for (const auto& out : col) {
                double t = 0.0;
                for (int s = 0; s < J; ++s)
                    t += row(s) *
                         (static_cast<double>(out.offspring[static_cast<std::size_t>(s)]) - sd.A(s, i));
                double phi = spec.a;
                if (spec.b != 0.0)
                    phi += spec.b * static_cast<double>(out.offspring[static_cast<std::size_t>(spec.j)]);
                e1 += out.prob * (p_on * (phi + t) + (1.0 - p_on) * t);
                e2 += out.prob * (p_on * (phi + t) * (phi + t) + (1.0 - p_on) * t * t);
            }
            var_i = e2 - e1 * e1;
        }
        total += var_i * sd.u(i);
    }
    return total;
}

}  // namespace detail

// sigma^2(Phi) = sum_{k in Z} rho^{-k} Var[Phi(k) + Psi^Phi(k)] u, truncated
// in both directions when the geometric tail bound term * r/(1-r) falls below
// eps_tail times the partial sum (twice in a row, past a small floor).
inline double sigma_sq(const SpectralData& sd, const ReplacementLaw& law,
                       const CharacteristicSpec& spec, double eps_tail = kEpsTailDefault,
                       TruncationDiagnostics* diag = nullptr) {
    if (spec.x < 0.0 || spec.x >= 1.0) throw LimitsError("sigma_sq: threshold must lie in [0,1)");
    detail::check_resolvent(sd, 1);
    detail::check_resolvent(sd, 2);

    // Tail ratios from the class moduli.  Downward: rho^{-k} grows by rho per
    // step while the row shrinks by |lambda|^{-2}, lambda in class 1.  Upward:
    // 1/rho for the constant parts, |lambda|^2/rho for the class-3 growth.
    double ratio_low = 0.0, ratio_high = 1.0 / sd.rho;
    for (const auto& c : sd.comps) {
        const double m2 = std::norm(c.lambda);
        if (detail::in_class(c, 1)) ratio_low = std::max(ratio_low, sd.rho / m2);
        if (detail::in_class(c, 3)) ratio_high = std::max(ratio_high, m2 / sd.rho);
    }
    if (ratio_low >= 1.0) throw TailNotConvergent(ratio_low);
    if (ratio_high >= 1.0) throw TailNotConvergent(ratio_high);

    const RowVec mrow = mean_row(sd, spec);
    detail::PsiRows rows(sd, mrow, spec.x);

    double sum = 0.0;
    TruncationDiagnostics d;
    d.ratio_low = ratio_low;
    d.ratio_high = ratio_high;

    // k = 0 first, then ascend; nilpotent parts add polynomial factors on top
    // of the geometry, so require the bound to pass twice past a floor of 4.
    const long k_cap = 100000;
    {
        const RowVec r0 = rows.row_nonpositive(0);
        sum += detail::variance_term(law, sd, spec, r0, 0);
    }
    int passes = 0;
    for (long k = 1; k <= k_cap; ++k) {
        const RowVec r = rows.row_positive_next();
        const double term = std::pow(sd.rho, -static_cast<double>(k)) *
                            detail::variance_term(law, sd, spec, r, k);
        sum += term;
        const double bound = term * ratio_high / (1.0 - ratio_high);
        d.k_hi = static_cast<int>(k);
        d.bound_high = bound;
        if (k >= 4 && bound <= eps_tail * sum) {
            if (++passes >= 2) break;
        } else {
            passes = 0;
        }
        if (k == k_cap) throw LimitsError("sigma_sq: upward tail failed to settle");
    }
    passes = 0;
    for (long k = -1; k >= -k_cap; --k) {
        const RowVec r = rows.row_nonpositive(k);
        const double var = detail::variance_term(law, sd, spec, r, k);
        const double term = var == 0.0 ? 0.0 : std::pow(sd.rho, -static_cast<double>(k)) * var;
        sum += term;
        const double bound = term * ratio_low / (1.0 - ratio_low);
        d.k_lo = static_cast<int>(k);
        d.bound_low = bound;
        if (k <= -4 && bound <= eps_tail * sum) {
            if (++passes >= 2) break;
        } else {
            passes = 0;
        }
        if (k == -k_cap) throw LimitsError("sigma_sq: downward tail failed to settle");
    }
    if (diag) *diag = d;
    return sum;
}

// --- regime and nondegeneracy hypotheses ----------------------------------------

enum class Regime { case_i_above = 1, case_ii_boundary = 2, case_iii_below = 3 };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::case_i_above: return "case_i_above";
        case Regime::case_ii_boundary: return "case_ii_boundary";
        default: return "case_iii_below";
    }
}

struct RegimeReport {
    Regime regime = Regime::case_iii_below;
    // Existence, over the class the trichotomy case demands (Gamma for case i,
    // sigma^2 for case ii, sigma^3 for case iii), of a simple lambda with
    // w_j u^lambda != 0, and of a lambda and column i with Var[v^lambda L e_i] > 0.
    bool wj_ulambda_nonzero = false;
    bool var_vlambda_L_positive = false;
    // sum_{lambda in sigma_A} sum_{l=0}^{J-1} ||Var(w_j N^l pi_lambda L)|| > 0.
    bool prop44_condition = false;
    // A real eigenvalue on the sqrt(rho) circle: the positivity argument for
    // sigma_l is only stated for non-real boundary eigenvalues, so flag it.
    bool real_boundary_eigenvalue = false;
};

inline RegimeReport regime_report(const SpectralData& sd, const ReplacementLaw& law, int j) {
    RegimeReport rep;
    rep.regime = static_cast<Regime>(regime(sd));
    const RowVec wj = w_vector(sd, j);
    const CRowVec wc = wj.cast<Complex>();

    auto demanded = [&](const EigenComponent& c, std::size_t idx) {
        if (rep.regime == Regime::case_i_above)
            return std::find(sd.Gamma.begin(), sd.Gamma.end(), static_cast<int>(idx)) !=
                   sd.Gamma.end();
        if (rep.regime == Regime::case_ii_boundary) return c.cls == SpectralClass::boundary;
        return c.cls == SpectralClass::below;
    };
    for (std::size_t idx = 0; idx < sd.comps.size(); ++idx) {
        const auto& c = sd.comps[idx];
        if (c.cls == SpectralClass::boundary && std::abs(c.lambda.imag()) < kEpsSpec)
            rep.real_boundary_eigenvalue = true;
        if (!demanded(c, idx) || !c.simple) continue;
        if (std::abs((wc * c.u).value()) > kEpsSpec) rep.wj_ulambda_nonzero = true;
        const RowVec var = detail::column_variances(law, sd.A, c.v);
        if (var.maxCoeff() > kEpsSpec) rep.var_vlambda_L_positive = true;
    }
    double cond = 0.0;
    for (const auto& c : sd.comps) {
        CMat Nl = c.pi;
        for (int ell = 0; ell < sd.J; ++ell) {
            if (ell > 0) Nl = (c.N * Nl).eval();
            if (Nl.cwiseAbs().maxCoeff() < kEpsSpec) break;
            cond += detail::column_variances(law, sd.A, wc * Nl).norm();
        }
    }
    rep.prop44_condition = cond > kEpsSpec;
    return rep;
}

// Eq. (definition of l): the largest l with sum_{lambda in sigma^2}
// ||Var(m N^l pi_lambda L)|| > 0, for m the mean row of the family.  Matches
// the maximal l with sigma_l^2 > 0 whenever the boundary condition holds.
inline std::optional<int> ell_star_from_condition(const SpectralData& sd,
                                                  const ReplacementLaw& law,
                                                  const CharacteristicSpec& spec) {
    const CRowVec m = mean_row(sd, spec).cast<Complex>();
    std::optional<int> best;
    for (const auto& c : sd.comps) {
        if (c.cls != SpectralClass::boundary) continue;
        CMat Nl = c.pi;
        for (int ell = 0; ell < sd.J; ++ell) {
            if (ell > 0) Nl = (c.N * Nl).eval();
            if (Nl.cwiseAbs().maxCoeff() < kEpsSpec) break;
            if (detail::column_variances(law, sd.A, m * Nl).norm() > kEpsSpec)
                if (!best || ell > *best) best = ell;
        }
    }
    return best;
}

// --- variance profile ------------------------------------------------------------

struct VarianceProfile {
    CharacteristicSpec spec;  // threshold-free family: the x field is ignored
    int J = 0;
    std::vector<double> x_grid;
    std::vector<std::vector<double>> sigma_l;  // [ell][grid point]
    std::vector<double> sigma;                 // sigma^2(Phi_x) per grid point
    std::optional<int> ell_star;               // nullopt encodes the -1/2 sentinel
    std::optional<int> ell_star_condition;     // independent value from Eq. (definition of l)
    TruncationDiagnostics trunc;               // worst case over the grid
    RegimeReport report;
    std::vector<std::string> warnings;
};

inline VarianceProfile variance_profile(const SpectralData& sd, const ReplacementLaw& law,
                                        const CharacteristicSpec& spec, int grid_points = 16,
                                        double eps_tail = kEpsTailDefault) {
    if (grid_points < 2) throw LimitsError("variance_profile: need at least 2 grid points");
    VarianceProfile p;
    p.spec = spec;
    p.J = sd.J;
    p.sigma_l.assign(static_cast<std::size_t>(sd.J), {});
    p.report = regime_report(sd, law, spec.b != 0.0 ? spec.j : 0);
    p.ell_star_condition = ell_star_from_condition(sd, law, spec);

    std::optional<int> common;
    bool first = true;
    for (int g = 0; g < grid_points; ++g) {
        const double x = static_cast<double>(g) / static_cast<double>(grid_points);
        CharacteristicSpec s = spec;
        s.x = x;
        p.x_grid.push_back(x);
        std::optional<int> here;
        for (int ell = 0; ell < sd.J; ++ell) {
            const double v = sigma_l_sq(sd, law, s, ell);
            p.sigma_l[static_cast<std::size_t>(ell)].push_back(v);
            if (v > kSigmaPositiveTol) here = ell;
        }
        TruncationDiagnostics d;
        p.sigma.push_back(sigma_sq(sd, law, s, eps_tail, &d));
        p.trunc.k_lo = std::min(p.trunc.k_lo, d.k_lo);
        p.trunc.k_hi = std::max(p.trunc.k_hi, d.k_hi);
        p.trunc.ratio_low = d.ratio_low;
        p.trunc.ratio_high = d.ratio_high;
        p.trunc.bound_low = std::max(p.trunc.bound_low, d.bound_low);
        p.trunc.bound_high = std::max(p.trunc.bound_high, d.bound_high);
        if (first) {
            common = here;
            first = false;
        } else if (common != here) {
            p.warnings.push_back("ell_star differs across the threshold grid");
            if (here && (!common || *here > *common)) common = here;
        }
    }
    p.ell_star = common;
    return p;
}

// --- scaling functions -------------------------------------------------------------

// l_lambda(x) = (1 + (lambda - 1){x}) lambda^{-{x}} (principal branch), the
// 1-periodic interpolation factor: lambda^x l_lambda(x) is linear between
// integers and equals lambda^x at them.
inline Complex l_lambda(Complex lambda, double x) {
    const double frac = x - std::floor(x);
    return (Complex(1.0) + (lambda - Complex(1.0)) * frac) * std::pow(lambda, -frac);
}

// h(x) = floor(x) + (rho^{x} - 1)/(rho - 1) on the fractional part; strictly
// increasing with h(n) = n, inverse floor(x) + log_rho(1 + (rho-1){x}).
inline double h_function(double rho, double x) {
    const double frac = x - std::floor(x);
    return std::floor(x) + (std::pow(rho, frac) - 1.0) / (rho - 1.0);
}

inline double h_inverse(double rho, double x) {
    const double frac = x - std::floor(x);
    return std::floor(x) + std::log(1.0 + (rho - 1.0) * frac) / std::log(rho);
}

// f_lambda(x) = l_lambda(h(x)) / l_rho(h(x))^{log_rho lambda}; 1-periodic.
inline Complex f_lambda(double rho, Complex lambda, double x) {
    const double hx = h_function(rho, x);
    const Complex num = l_lambda(lambda, hx);
    const double den = l_lambda(Complex(rho), hx).real();  // real and positive
    const Complex expo = std::log(lambda) / std::log(rho);
    return num * std::exp(-expo * std::log(den));
}

struct ScalingFunctions {
    double rho = 0.0;
    std::optional<int> ell_star;
    std::vector<double> y_grid;  // thresholds in [0,1)
    std::vector<double> var_g;   // Var[G(y)] on the grid

    // Var[G(y)] for y in [0,1) by linear interpolation; the wrap value at
    // y = 1 is rho * var_g[0] from G(y+1) =d sqrt(rho) G(y), which extends
    // the lookup to all y >= 0.
    double var_G(double y) const {
        const double scale = std::pow(rho, std::floor(y));
        const double frac = y - std::floor(y);
        const std::size_t n = y_grid.size();
        const double pos = frac * static_cast<double>(n);
        const std::size_t cell = std::min(static_cast<std::size_t>(pos), n - 1);
        const double t = pos - static_cast<double>(cell);
        const double lo = var_g[cell];
        const double hi = cell + 1 < n ? var_g[cell + 1] : rho * var_g[0];
        return scale * ((1.0 - t) * lo + t * hi);
    }

    // Uppsi(x) = ((rho - 1) rho^{-{x}} Var[G(h({x}))])^{1/2}, 1-periodic.
    double Uppsi(double x) const {
        const double frac = x - std::floor(x);
        const double v = (rho - 1.0) * std::pow(rho, -frac) * var_G(h_function(rho, frac));
        return std::sqrt(v);
    }

    double h(double x) const { return h_function(rho, x); }
    double h_inv(double x) const { return h_inverse(rho, x); }
    Complex l(Complex lambda, double x) const { return l_lambda(lambda, x); }
    Complex f(Complex lambda, double x) const { return f_lambda(rho, lambda, x); }
};

// Bind the profile's grid into callable scaling functions.  Var[G(y)] is
// sigma_{ell*}^2(Phi_y) when ell* >= 0 and sigma^2(Phi_y) at the sentinel.
inline ScalingFunctions scaling_functions(const SpectralData& sd, const VarianceProfile& profile) {
    ScalingFunctions sf;
    sf.rho = sd.rho;
    sf.ell_star = profile.ell_star;
    sf.y_grid = profile.x_grid;
    const std::vector<double>& v =
        profile.ell_star ? profile.sigma_l[static_cast<std::size_t>(*profile.ell_star)]
                         : profile.sigma;
    for (std::size_t g = 0; g < v.size(); ++g) {
        if (!(v[g] > 0.0)) throw DegenerateVariance(profile.x_grid[g]);
        sf.var_g.push_back(v[g]);
    }
    return sf;
}

// --- LLN limit and case-i expansion ---------------------------------------------

inline double lln_limit(const SpectralData& sd, int j) {
    if (j < 0 || j >= sd.J) throw LimitsError("lln_limit: type index out of range");
    return sd.rho * sd.u(j);
}

inline double T_n(double rho, double n, double W) {
    if (!(W > 0.0)) throw LimitsError("T_n: requires a positive W estimate");
    return std::log(n * (rho - 1.0) / W) / std::log(rho);
}

// Case-i oscillatory expansion: sum over the gamma circle of
// n^{log_rho lambda} f_lambda(T_n) X_lambda with
// X_lambda = (lambda u_j^lambda - rho u_j sum_i u_i^lambda)
//            ((rho-1)/W)^{log_rho lambda} W_lambda / (lambda - 1).
// Gamma is conjugation-closed and conjugate estimates pair up, so the sum is
// real; the imaginary residue is discarded.
inline double case_i_expansion(const SpectralData& sd, int j, double n, double W_hat,
                               const std::map<int, Complex>& W_lambda_hats) {
    if (!sd.gamma_all_simple) throw GammaNotSimple();
    if (j < 0 || j >= sd.J) throw LimitsError("case_i_expansion: type index out of range");
    if (!(n > 0.0)) throw LimitsError("case_i_expansion: n must be positive");
    if (!(W_hat > 0.0)) throw LimitsError("case_i_expansion: requires a positive W estimate");
    const double t = T_n(sd.rho, n, W_hat);
    const double log_rho = std::log(sd.rho);
    Complex total(0.0);
    for (const int idx : sd.Gamma) {
        const EigenComponent& c = sd.comps[static_cast<std::size_t>(idx)];
        const auto it = W_lambda_hats.find(idx);
        if (it == W_lambda_hats.end())
            throw LimitsError("case_i_expansion: missing W_lambda estimate for component " +
                              std::to_string(idx));
        const Complex expo = std::log(c.lambda) / log_rho;
        const Complex coeff = c.lambda * c.u(j) - sd.rho * sd.u(j) * c.u.sum();
        const Complex x_lambda = coeff * std::exp(expo * std::log((sd.rho - 1.0) / W_hat)) *
                                 it->second / (c.lambda - Complex(1.0));
        total += std::exp(expo * std::log(n)) * f_lambda(sd.rho, c.lambda, t) * x_lambda;
    }
    return total.real();
}

// --- external interfaces -----------------------------------------------------------

inline nlohmann::json profile_to_json(const VarianceProfile& p) {
    nlohmann::json js;
    js["x_grid"] = p.x_grid;
    js["sigma_l"] = p.sigma_l;
    js["sigma"] = p.sigma;
    if (p.ell_star)
        js["ell_star"] = *p.ell_star;
    else
        js["ell_star"] = -0.5;
    js["regime"] = regime_name(p.report.regime);
    js["hypotheses"] = {{"wj_ulambda_nonzero", p.report.wj_ulambda_nonzero},
                        {"var_vlambda_L_positive", p.report.var_vlambda_L_positive},
                        {"prop44_condition", p.report.prop44_condition}};
    js["truncation"] = {{"k_lo", p.trunc.k_lo},
                        {"k_hi", p.trunc.k_hi},
                        {"ratio_low", p.trunc.ratio_low},
                        {"ratio_high", p.trunc.ratio_high},
                        {"bound_low", p.trunc.bound_low},
                        {"bound_high", p.trunc.bound_high}};
    if (p.report.real_boundary_eigenvalue) js["real_boundary_eigenvalue"] = true;
    if (!p.warnings.empty()) js["warnings"] = p.warnings;
    return js;
}

// Plot data over one period: x, Uppsi(x), and Re/Im of f_lambda for every
// gamma-circle eigenvalue.
inline void write_scaling_csv(std::ostream& os, const SpectralData& sd, const ScalingFunctions& sf,
                              int points = 256) {
    os << "x,uppsi";
    for (const int idx : sd.Gamma) os << ",f_" << idx << "_re,f_" << idx << "_im";
    os << "\n";
    for (int g = 0; g < points; ++g) {
        const double x = static_cast<double>(g) / static_cast<double>(points);
        os << x << "," << sf.Uppsi(x);
        for (const int idx : sd.Gamma) {
            const Complex f = sf.f(sd.comps[static_cast<std::size_t>(idx)].lambda, x);
            os << "," << f.real() << "," << f.imag();
        }
        os << "\n";
    }
}

}  // namespace urnflow

#endif
