#ifndef URNFLOW_MODEL_HPP
#define URNFLOW_MODEL_HPP

// The model input: a finite discrete law for the random replacement matrix L
// with independent columns.  Column j is the law of the offspring vector
// deposited when a type-j ball is drawn, so A = E[L] has a_{ij} = E[L^(j,i)]
// (columns of A are the column means of L).
//
// exact_distribution is the brute-force oracle: it enumerates every draw
// order and offspring realization of the urn process for small n, merging
// states as it goes.  When all input probabilities are rational (denominator
// up to 2^32, recovered by continued fractions) the enumeration runs on exact
// rationals so golden values like 1/2 and 1/6 match exactly; otherwise it
// falls back to double precision.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"
#include "urnflow/rng.hpp"
#include "urnflow/spectral.hpp"

namespace urnflow {

using Rational = boost::multiprecision::cpp_rational;

struct LawError : std::runtime_error {
    explicit LawError(const std::string& what) : std::runtime_error(what) {}
};

struct BudgetExceeded : std::runtime_error {
    std::uint64_t leaves;
    explicit BudgetExceeded(std::uint64_t n)
        : std::runtime_error("BudgetExceeded: enumeration reached " + std::to_string(n) + " states"),
          leaves(n) {}
};

struct ColumnOutcome {
    std::vector<std::int64_t> offspring;  // length J, entries >= 0
    double prob = 0.0;
};

struct ReplacementLaw {
    int J = 0;
    std::vector<std::vector<ColumnOutcome>> columns;  // columns[j] = law of L^(j)
    std::string name;                                 // optional label from the file
};

struct AssumptionReport {
    bool gw1 = false;  // rho > 1
    bool gw2 = false;  // A primitive (some power entrywise positive)
    bool gw3 = false;  // sum_j Cov[L^(j)] != 0
    bool gw4 = true;   // E[L log L] finite: automatic for finite support
    bool moment_2_plus_delta = true;  // automatic for finite support
    std::vector<std::string> notes;
};

inline void validate_law(const ReplacementLaw& law) {
    if (law.J < 1) throw LawError("law: J must be >= 1");
    if (static_cast<int>(law.columns.size()) != law.J)
        throw LawError("law: need exactly J column laws");
    for (int j = 0; j < law.J; ++j) {
        const auto& col = law.columns[static_cast<std::size_t>(j)];
        if (col.empty()) throw LawError("law: column " + std::to_string(j + 1) + " has no outcomes");
        double sum = 0.0;
        for (const auto& out : col) {
            if (static_cast<int>(out.offspring.size()) != law.J)
                throw LawError("law: offspring vector length mismatch in column " + std::to_string(j + 1));
            for (const std::int64_t e : out.offspring)
                if (e < 0) throw LawError("law: negative offspring entry in column " + std::to_string(j + 1));
            if (!(out.prob > 0.0) || out.prob > 1.0)
                throw LawError("law: outcome probability outside (0,1] in column " + std::to_string(j + 1));
            sum += out.prob;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw LawError("law: column " + std::to_string(j + 1) + " probabilities sum to " +
                           std::to_string(sum) + ", not 1");
    }
}

inline Mat mean_matrix(const ReplacementLaw& law) {
    Mat A = Mat::Zero(law.J, law.J);
    for (int j = 0; j < law.J; ++j)
        for (const auto& out : law.columns[static_cast<std::size_t>(j)])
            for (int i = 0; i < law.J; ++i)
                A(i, j) += out.prob * static_cast<double>(out.offspring[static_cast<std::size_t>(i)]);
    return A;
}

// Covariance of the column-j offspring vector, computed from centered sums so
// deterministic columns give an exactly zero matrix.
inline Mat covariance(const ReplacementLaw& law, int j) {
    const auto& col = law.columns.at(static_cast<std::size_t>(j));
    Vec mean = Vec::Zero(law.J);
    for (const auto& out : col)
        for (int i = 0; i < law.J; ++i)
            mean(i) += out.prob * static_cast<double>(out.offspring[static_cast<std::size_t>(i)]);
    Mat C = Mat::Zero(law.J, law.J);
    for (const auto& out : col) {
        Vec d(law.J);
        for (int i = 0; i < law.J; ++i)
            d(i) = static_cast<double>(out.offspring[static_cast<std::size_t>(i)]) - mean(i);
        C += out.prob * (d * d.transpose());
    }
    return C;
}

inline AssumptionReport check_assumptions(const ReplacementLaw& law) {
    validate_law(law);
    AssumptionReport rep;
    const Mat A = mean_matrix(law);
    try {
        const PerronData p = perron(A);
        rep.gw1 = p.rho > 1.0;
        if (!rep.gw1) rep.notes.push_back("GW1 fails: rho = " + std::to_string(p.rho) + " <= 1");
    } catch (const SpectralError& e) {
        rep.gw1 = false;
        rep.notes.push_back(std::string("GW1 fails: ") + e.what());
    }
    rep.gw2 = is_primitive(A);
    if (!rep.gw2) rep.notes.push_back("GW2 fails: A is not primitive");
    Mat cov_sum = Mat::Zero(law.J, law.J);
    for (int j = 0; j < law.J; ++j) cov_sum += covariance(law, j);
    rep.gw3 = cov_sum.cwiseAbs().maxCoeff() > 0.0;
    if (!rep.gw3) rep.notes.push_back("GW3 fails: all columns deterministic (sum of covariances is zero)");
    rep.notes.push_back("finite support: GW4 and the 2+delta moment condition hold automatically");
    return rep;
}

// Draw one offspring vector from column j.  Linear scan over the (small)
// outcome list; the final outcome absorbs roundoff in the probability sum.
inline const std::vector<std::int64_t>& sample_column(const ReplacementLaw& law, int j, Rng& rng) {
    const auto& col = law.columns[static_cast<std::size_t>(j)];
    double r = rng.uniform01();
    for (const auto& out : col) {
        r -= out.prob;
        if (r < 0.0) return out.offspring;
    }
    return col.back().offspring;
}

// --- law JSON I/O ------------------------------------------------------------

inline ReplacementLaw law_from_json(const nlohmann::json& js) {
    ReplacementLaw law;
    law.J = js.at("J").get<int>();
    if (js.contains("name")) law.name = js.at("name").get<std::string>();
    for (const auto& col : js.at("columns")) {
        std::vector<ColumnOutcome> outs;
        for (const auto& o : col) {
            ColumnOutcome out;
            out.offspring = o.at("offspring").get<std::vector<std::int64_t>>();
            out.prob = o.at("prob").get<double>();
            outs.push_back(std::move(out));
        }
        law.columns.push_back(std::move(outs));
    }
    validate_law(law);
    return law;
}

inline nlohmann::json law_to_json(const ReplacementLaw& law) {
    nlohmann::json js;
    js["J"] = law.J;
    if (!law.name.empty()) js["name"] = law.name;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : law.columns) {
        nlohmann::json jcol = nlohmann::json::array();
        for (const auto& out : col) jcol.push_back({{"offspring", out.offspring}, {"prob", out.prob}});
        cols.push_back(jcol);
    }
    js["columns"] = cols;
    return js;
}

inline ReplacementLaw load_law(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LawError("cannot open law file: " + path);
    nlohmann::json js;
    in >> js;
    return law_from_json(js);
}

// --- exact enumeration oracle --------------------------------------------------

struct ExactEntry {
    std::vector<std::int64_t> B;
    double prob = 0.0;
    Rational prob_exact;  // meaningful only when the distribution is exact
};

struct ExactDistribution {
    bool exact = false;  // true when enumeration ran on rationals
    std::vector<ExactEntry> entries;
    std::uint64_t leaves = 0;  // enumeration work (outcome-tree leaves expanded)
};

// Full urn states with probabilities after n steps; used by self-consistency
// tests that need draw probabilities, not just the law of B.
struct ExactState {
    std::vector<std::int64_t> active, passive, B;
    double prob = 0.0;
};

namespace detail {

// Best rational approximation p/q of x with q <= qmax, by continued fractions.
// Returns false when no approximant within 1e-12 exists.
inline bool rationalize(double x, std::uint64_t qmax, Rational& out) {
    if (x < 0.0) return false;
    double r = x;
    std::uint64_t p0 = 1, q0 = 0, p1 = 0, q1 = 1;  // convergents
    for (int it = 0; it < 64; ++it) {
        const double fl = std::floor(r);
        if (fl > static_cast<double>(qmax)) break;
        const std::uint64_t a = static_cast<std::uint64_t>(fl);
        if (q0 != 0 && a > (qmax - q1) / q0) break;  // next denominator would overflow qmax
        const std::uint64_t p2 = a * p0 + p1;
        const std::uint64_t q2 = a * q0 + q1;
        p1 = p0; q1 = q0; p0 = p2; q0 = q2;
        const double approx = static_cast<double>(p0) / static_cast<double>(q0);
        if (std::abs(approx - x) <= 1e-12 * std::max(1.0, x)) {
            out = Rational(p0, q0);
            return true;
        }
        const double frac = r - fl;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    return false;
}

// One enumeration level on either exact or floating probabilities.
template <class P>
struct EnumState {
    // key: active | passive | B concatenated; value: probability
    using Map = std::map<std::vector<std::int64_t>, P>;
};

template <class P>
void enumerate_steps(const ReplacementLaw& law,
                     const std::vector<std::vector<P>>& atom_probs, int j0, int n,
                     std::uint64_t budget, typename EnumState<P>::Map& states,
                     std::uint64_t& work) {
    const int J = law.J;
    auto key = [J](const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& p,
                   const std::vector<std::int64_t>& B) {
        std::vector<std::int64_t> k;
        k.reserve(static_cast<std::size_t>(3 * J));
        k.insert(k.end(), a.begin(), a.end());
        k.insert(k.end(), p.begin(), p.end());
        k.insert(k.end(), B.begin(), B.end());
        return k;
    };
    std::vector<std::int64_t> a0(static_cast<std::size_t>(J), 0), p0(static_cast<std::size_t>(J), 0),
        B0(static_cast<std::size_t>(J), 0);
    a0[static_cast<std::size_t>(j0)] = 1;
    B0[static_cast<std::size_t>(j0)] = 1;
    states.clear();
    states[key(a0, p0, B0)] = P(1);
    work = 1;

    for (int step = 0; step < n; ++step) {
        typename EnumState<P>::Map next;
        for (const auto& [k, prob] : states) {
            std::vector<std::int64_t> active(k.begin(), k.begin() + J);
            std::vector<std::int64_t> passive(k.begin() + J, k.begin() + 2 * J);
            std::vector<std::int64_t> B(k.begin() + 2 * J, k.end());
            std::int64_t total = 0;
            for (const std::int64_t c : active) total += c;
            if (total == 0) {
                // extinct: B frozen, state carries through unchanged
                next[k] += prob;
                continue;
            }
            for (int i = 0; i < J; ++i) {
                const std::int64_t ci = active[static_cast<std::size_t>(i)];
                if (ci == 0) continue;
                const P p_draw = prob * P(ci) / P(total);
                const auto& col = law.columns[static_cast<std::size_t>(i)];
                for (std::size_t a = 0; a < col.size(); ++a) {
                    std::vector<std::int64_t> na = active, np = passive, nB = B;
                    --na[static_cast<std::size_t>(i)];
                    for (int t = 0; t < J; ++t) {
                        np[static_cast<std::size_t>(t)] += col[a].offspring[static_cast<std::size_t>(t)];
                        nB[static_cast<std::size_t>(t)] += col[a].offspring[static_cast<std::size_t>(t)];
                    }
                    std::int64_t rem = 0;
                    for (const std::int64_t c : na) rem += c;
                    if (rem == 0) std::swap(na, np);  // both-empty stays empty: extinction
                    next[key(na, np, nB)] += p_draw * atom_probs[static_cast<std::size_t>(i)][a];
                    if (++work > budget) throw BudgetExceeded(work);
                }
            }
        }
        states = std::move(next);
    }
}

}  // namespace detail

// Exact law of B(n) from one initial type-j0 ball (j0 is 0-based).
inline ExactDistribution exact_distribution(const ReplacementLaw& law, int j0, int n,
                                            std::uint64_t budget = 1000000) {
    validate_law(law);
    if (j0 < 0 || j0 >= law.J) throw LawError("exact_distribution: j0 out of range");
    ExactDistribution dist;

    // Try exact rational mode first.
    bool exact = true;
    std::vector<std::vector<Rational>> ratios(static_cast<std::size_t>(law.J));
    for (int j = 0; j < law.J && exact; ++j) {
        Rational sum = 0;
        for (const auto& out : law.columns[static_cast<std::size_t>(j)]) {
            Rational r;
            if (!detail::rationalize(out.prob, (std::uint64_t{1} << 32), r)) {
                exact = false;
                break;
            }
            ratios[static_cast<std::size_t>(j)].push_back(r);
            sum += r;
        }
        if (exact && sum != 1) exact = false;
    }

    const int J = law.J;
    auto unpack_B = [J](const std::vector<std::int64_t>& k) {
        return std::vector<std::int64_t>(k.begin() + 2 * J, k.end());
    };

    if (exact) {
        typename detail::EnumState<Rational>::Map states;
        detail::enumerate_steps<Rational>(law, ratios, j0, n, budget, states, dist.leaves);
        std::map<std::vector<std::int64_t>, Rational> by_B;
        for (const auto& [k, p] : states) by_B[unpack_B(k)] += p;
        Rational total = 0;
        for (const auto& [B, p] : by_B) {
            ExactEntry e;
            e.B = B;
            e.prob_exact = p;
            e.prob = static_cast<double>(p);
            dist.entries.push_back(std::move(e));
            total += p;
        }
        if (total != 1) throw LawError("exact_distribution: rational probabilities do not sum to 1");
        dist.exact = true;
    } else {
        std::vector<std::vector<double>> probs(static_cast<std::size_t>(law.J));
        for (int j = 0; j < law.J; ++j)
            for (const auto& out : law.columns[static_cast<std::size_t>(j)])
                probs[static_cast<std::size_t>(j)].push_back(out.prob);
        typename detail::EnumState<double>::Map states;
        detail::enumerate_steps<double>(law, probs, j0, n, budget, states, dist.leaves);
        std::map<std::vector<std::int64_t>, double> by_B;
        for (const auto& [k, p] : states) by_B[unpack_B(k)] += p;
        double total = 0.0;
        for (const auto& [B, p] : by_B) {
            ExactEntry e;
            e.B = B;
            e.prob = p;
            dist.entries.push_back(std::move(e));
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw LawError("exact_distribution: probabilities sum to " + std::to_string(total));
    }
    return dist;
}

// Full state law after n steps (double precision), for self-consistency tests.
inline std::vector<ExactState> exact_state_distribution(const ReplacementLaw& law, int j0, int n,
                                                        std::uint64_t budget = 1000000) {
    validate_law(law);
    std::vector<std::vector<double>> probs(static_cast<std::size_t>(law.J));
    for (int j = 0; j < law.J; ++j)
        for (const auto& out : law.columns[static_cast<std::size_t>(j)])
            probs[static_cast<std::size_t>(j)].push_back(out.prob);
    typename detail::EnumState<double>::Map states;
    std::uint64_t peak = 0;
    detail::enumerate_steps<double>(law, probs, j0, n, budget, states, peak);
    std::vector<ExactState> out;
    const int J = law.J;
    for (const auto& [k, p] : states) {
        ExactState s;
        s.active.assign(k.begin(), k.begin() + J);
        s.passive.assign(k.begin() + J, k.begin() + 2 * J);
        s.B.assign(k.begin() + 2 * J, k.end());
        s.prob = p;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace urnflow

#endif
