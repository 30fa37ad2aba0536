// Acceptance gate: eight go/no-go criteria for the toolkit, each printed as a
// single [PASS]/[FAIL] line with its measured runtime against a pinned budget.
//
//   1. exact enumeration reproduces the worked three-type example, as exact
//      rationals, through n = 4;
//   2. both simulators agree with the exact law of B(k), k <= 4, under a
//      chi-square at alpha = 0.01 in >= 95 of 100 seeds per law and k;
//   3. the spectral decomposition satisfies the projection/nilpotent algebra
//      to 1e-9 on a 25-matrix corpus that includes a defective matrix;
//   4. the strong law: median max_j |B_j(n)/n - rho u_j| over 200 replicates
//      sits below 0.05 rho at n = 1e4 and halves at n = 1e5;
//   5. the CLT trichotomy at n = 1e4, R = 2000: the below-circle law under
//      sqrt(n) Uppsi scaling and the boundary law under sqrt(n log_rho n)
//      Uppsi scaling each pass KS at alpha = 0.01 in >= 95 of 100 seeds,
//      while the boundary law under the wrong (below-circle) scaling rejects;
//   6. the above-circle oscillatory expansion halves the normalized residual
//      of B_j(n) from n = 256 to n = 4096 over 500 replicates;
//   7. closed-form x-vectors match their defining series, sigma^2 is stable
//      under re-truncation, and the mark-noise lower bound holds;
//   8. the scaling-function identities (periodicity, h o h^{-1} = id, the
//      piecewise-linear interpolation identity) hold to 1e-12.
//
// Run with no arguments for the full gate, or pass criterion numbers for a
// subset, e.g. `urnflow_acceptance 1 3 8`.  Exits 0 only when every selected
// criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "urnflow/embedding.hpp"
#include "urnflow/harness.hpp"
#include "urnflow/limits.hpp"
#include "urnflow/model.hpp"
#include "urnflow/spectral.hpp"
#include "urnflow/stats.hpp"
#include "urnflow/urn_sim.hpp"

using namespace urnflow;

namespace {

std::string data_path(const std::string& file) { return std::string(URNFLOW_DATA_DIR "/") + file; }

ReplacementLaw load(const std::string& file) {
    ReplacementLaw law = load_law(data_path(file));
    validate_law(law);
    return law;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- criterion 1: exact enumeration golden values --------------------------------

const ExactEntry* find_entry(const ExactDistribution& d, const std::vector<std::int64_t>& B) {
    for (const auto& e : d.entries)
        if (e.B == B) return &e;
    return nullptr;
}

bool criterion_1(std::string& detail) {
    const ReplacementLaw law = load("appendix_a.json");
    bool ok = true;
    auto expect = [&](int n, const std::vector<std::int64_t>& B, const Rational& p,
                      std::size_t support) {
        const ExactDistribution d = exact_distribution(law, 0, n);
        const ExactEntry* e = find_entry(d, B);
        if (!d.exact || d.entries.size() != support || e == nullptr || e->prob_exact != p) {
            detail += "B(" + std::to_string(n) + ") mismatch; ";
            ok = false;
        }
    };
    expect(1, {2, 0, 1}, Rational(1), 1);
    expect(2, {4, 1, 2}, Rational(1) / 2, 2);
    expect(2, {3, 0, 2}, Rational(1) / 2, 2);
    expect(3, {5, 1, 3}, Rational(1), 1);
    // n = 4 has wider support; only the pinned atom is checked exactly.
    {
        const ExactDistribution d = exact_distribution(law, 0, 4);
        const ExactEntry* e = find_entry(d, {5, 3, 4});
        if (!d.exact || e == nullptr || e->prob_exact != Rational(1) / 6) {
            detail += "P(B(4) = (5,3,4)) != 1/6; ";
            ok = false;
        }
    }
    if (ok) detail = "B(1)..B(4) atoms exact as pinned";
    return ok;
}

// --- criterion 2: simulator vs exact oracle --------------------------------------

bool criterion_2(std::string& detail) {
    const char* files[] = {"appendix_a.json", "case_i.json", "case_ii.json", "case_iii.json"};
    const int kmax = 4, n_seeds = 100;
    const std::int64_t R = 10000;
    const double alpha = 0.01;
    int worst = n_seeds;
    std::string worst_name;

    for (int li = 0; li < 4; ++li) {
        const ReplacementLaw law = load(files[li]);
        const double rho = decompose(mean_matrix(law)).rho;

        // Exact law of B(k) once per k, with an index for counting.
        std::vector<std::map<std::vector<std::int64_t>, std::size_t>> index(kmax + 1);
        std::vector<std::vector<double>> expected(kmax + 1);
        for (int k = 1; k <= kmax; ++k) {
            const ExactDistribution d = exact_distribution(law, 0, k);
            for (const auto& e : d.entries) {
                index[k][e.B] = expected[k].size();
                expected[k].push_back(e.prob * static_cast<double>(R));
            }
        }

        for (int source = 0; source < 2; ++source) {  // 0 = urn, 1 = embedding
            std::vector<std::array<int, 5>> passes(1);  // [k] pass counts
            std::array<int, 5> pass_k{};
            for (int s = 0; s < n_seeds; ++s) {
                const std::uint64_t master =
                    (source == 0 ? 210000u : 220000u) + 1000u * static_cast<unsigned>(li) +
                    static_cast<unsigned>(s);
                std::vector<std::vector<double>> counts(kmax + 1);
                for (int k = 1; k <= kmax; ++k) counts[k].assign(expected[k].size(), 0.0);
                bool support_ok = true;
                for (std::int64_t r = 0; r < R && support_ok; ++r) {
                    Rng rng = Rng::for_replicate(master, static_cast<std::uint64_t>(r));
                    if (source == 0) {
                        const Trajectory t = run(law, 0, kmax, {1, 2, 3, 4}, rng);
                        for (const auto& rec : t.records) {
                            const auto it = index[rec.first].find(rec.second);
                            if (it == index[rec.first].end()) { support_ok = false; break; }
                            counts[rec.first][it->second] += 1.0;
                        }
                    } else {
                        const Tree t = simulate_until(law, 0, kmax + 2, rho, rng);
                        for (int k = 1; k <= kmax; ++k) {
                            const auto it = index[k].find(B_vector_via_embedding(t, k));
                            if (it == index[k].end()) { support_ok = false; break; }
                            counts[k][it->second] += 1.0;
                        }
                    }
                }
                for (int k = 1; k <= kmax; ++k) {
                    if (!support_ok) continue;  // off-support outcome: an automatic reject
                    const TestResult tr = chi_square_gof(counts[k], expected[k]);
                    if (tr.p_value >= alpha) ++pass_k[static_cast<std::size_t>(k)];
                }
            }
            for (int k = 1; k <= kmax; ++k) {
                if (pass_k[static_cast<std::size_t>(k)] < worst) {
                    worst = pass_k[static_cast<std::size_t>(k)];
                    worst_name = std::string(law.name) + "/k=" + std::to_string(k) +
                                 (source == 0 ? "/urn" : "/embedding");
                }
            }
        }
    }
    detail = "worst cell " + worst_name + " passed " + std::to_string(worst) + "/100 seeds";
    return worst >= 95;
}

// --- criterion 3: spectral identity suite ----------------------------------------

Mat pseudo_random_primitive(int J, std::uint64_t which) {
    Rng rng = Rng::for_replicate(330000, which);
    Mat A(J, J);
    for (int i = 0; i < J; ++i)
        for (int j = 0; j < J; ++j)
            A(i, j) = static_cast<double>(rng.below(5));
    for (int i = 0; i < J; ++i) {
        A(i, i) += 1.0;                 // aperiodicity
        A((i + 1) % J, i) += 1.0;       // a full cycle: irreducibility
    }
    return A;
}

bool spectral_identities_hold(const Mat& A, double eps, std::string& why) {
    const SpectralData sd = decompose(A);
    const int J = sd.J;
    const CMat I = CMat::Identity(J, J);
    auto close = [&](const CMat& M, const char* what) {
        if (M.cwiseAbs().maxCoeff() > eps) {
            why = what;
            return false;
        }
        return true;
    };

    CMat sum_pi = CMat::Zero(J, J), recon = CMat::Zero(J, J);
    for (const auto& c : sd.comps) {
        sum_pi += c.pi;
        recon += c.lambda * c.pi + c.N;
    }
    if (!close(sum_pi - I, "partition of identity")) return false;
    if (!close(recon - A.cast<Complex>(), "reconstruction")) return false;

    for (std::size_t a = 0; a < sd.comps.size(); ++a) {
        const auto& ca = sd.comps[a];
        if (!close(ca.pi * ca.pi - ca.pi, "idempotence")) return false;
        if (!close(ca.pi * ca.N - ca.N, "pi N = N")) return false;
        if (!close(ca.N * ca.pi - ca.N, "N pi = N")) return false;
        CMat Np = ca.pi;  // N^0 restricted to the eigenspace
        for (int p = 0; p < ca.d; ++p) Np = (ca.N * Np).eval();
        if (ca.d > 0 && Np.cwiseAbs().maxCoeff() <= eps) {
            why = "N^d vanished below its index";
            return false;
        }
        if (!close(ca.N * Np, "nilpotency N^{d+1} = 0")) return false;
        for (std::size_t b = 0; b < sd.comps.size(); ++b)
            if (a != b && !close(ca.pi * sd.comps[b].pi, "orthogonality")) return false;
    }

    const auto& perron = sd.comps[static_cast<std::size_t>(sd.perron_index)];
    const Mat uv = sd.u * sd.v;
    if (!close(perron.pi - uv.cast<Complex>(), "pi_rho = u v")) return false;
    if (std::abs(sd.v * sd.u - 1.0) > eps) {
        why = "v u != 1";
        return false;
    }
    const Mat Ieye = Mat::Identity(J, J);
    if ((sd.A1 * sd.A1_inv - Ieye).cwiseAbs().maxCoeff() > eps ||
        (sd.A2 * sd.A2_inv - Ieye).cwiseAbs().maxCoeff() > eps) {
        why = "A_i inverse";
        return false;
    }
    return true;
}

bool criterion_3(std::string& detail) {
    std::vector<Mat> corpus;
    corpus.push_back((Mat(1, 1) << 2.0).finished());
    for (const char* f : {"appendix_a.json", "case_i.json", "case_i_strong.json",
                          "case_ii.json", "case_iii.json"})
        corpus.push_back(mean_matrix(load(f)));
    Mat defective(3, 3);
    defective << 9, 0, 0, 0, 4, 1, 0, 0, 4;  // Jordan block at 4
    corpus.push_back(defective);
    Mat circulant(3, 3);
    circulant << 3, 1, 0, 0, 3, 1, 1, 0, 3;  // complex conjugate pair
    corpus.push_back(circulant);
    for (std::uint64_t i = 0; corpus.size() < 25; ++i)
        corpus.push_back(pseudo_random_primitive(2 + static_cast<int>(i % 3), i));

    // The corpus must actually contain the defective case.
    const SpectralData dsd = decompose(defective);
    bool has_defective = false;
    for (const auto& c : dsd.comps) has_defective = has_defective || c.d >= 1;
    if (!has_defective || dsd.gamma_all_simple) {
        detail = "defective matrix not recognized as defective";
        return false;
    }

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::string why;
        if (!spectral_identities_hold(corpus[i], 1e-9, why)) {
            detail = "matrix " + std::to_string(i) + " failed: " + why;
            return false;
        }
    }
    detail = "all identities within 1e-9 on 25 matrices (one defective)";
    return true;
}

// --- criterion 4: strong law of large numbers ------------------------------------

bool criterion_4(std::string& detail) {
    const char* files[] = {"appendix_a.json", "case_i.json", "case_ii.json", "case_iii.json"};
    bool ok = true;
    for (int li = 0; li < 4; ++li) {
        const ReplacementLaw law = load(files[li]);
        const SpectralData sd = decompose(mean_matrix(law));
        ExperimentConfig cfg;
        cfg.j0 = 0;
        cfg.j = 0;
        cfg.replicates = 200;
        cfg.n = 10000;
        cfg.seed = 440000u + static_cast<unsigned>(li);
        const ExperimentReport at4 = run_lln(cfg, law);
        cfg.n = 100000;
        cfg.seed = 441000u + static_cast<unsigned>(li);
        const ExperimentReport at5 = run_lln(cfg, law);
        const bool below = at4.statistic < 0.05 * sd.rho;
        const bool shrinks = at5.statistic <= 0.5 * at4.statistic;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s med(1e4)=%.4f (cap %.4f) med(1e5)=%.4f;",
                      detail.empty() ? "" : " ", law.name.c_str(), at4.statistic,
                      0.05 * sd.rho, at5.statistic);
        detail += buf;
        ok = ok && below && shrinks;
    }
    return ok;
}

// --- criterion 5: CLT trichotomy --------------------------------------------------

int clt_pass_count(const ReplacementLaw& law, const std::string& centering,
                   std::uint64_t seed_base, int n_seeds) {
    int passes = 0;
    for (int s = 0; s < n_seeds; ++s) {
        ExperimentConfig cfg;
        cfg.j0 = 0;
        cfg.j = 0;
        cfg.replicates = 2000;
        cfg.n = 10000;
        cfg.alpha = 0.01;
        cfg.centering = centering;
        cfg.seed = seed_base + static_cast<unsigned>(s);
        if (run_clt(cfg, law).verdict) ++passes;
    }
    return passes;
}

bool criterion_5(std::string& detail) {
    const ReplacementLaw below = load("case_iii.json");
    const ReplacementLaw boundary = load("case_ii.json");

    // Below the circle the default centering rho u_j n applies; on the
    // boundary the full curly-F centering removes the deterministic
    // second-class term, which at reachable n is still comparable to the
    // fluctuation scale (it decays like 1/sqrt(log n)).
    const int pass_iii = clt_pass_count(below, "auto", 550000u, 100);
    const int pass_ii = clt_pass_count(boundary, "curly_f", 560000u, 100);

    // Negative control: boundary data under the below-circle scaling (no
    // log factor) must reject -- the variance is off by log_rho n.
    ExperimentConfig cfg;
    cfg.j0 = 0;
    cfg.j = 0;
    cfg.replicates = 2000;
    cfg.n = 10000;
    cfg.alpha = 0.01;
    cfg.centering = "curly_f";
    cfg.log_exponent = 0.0;
    cfg.seed = 570000u;
    const bool control_rejects = !run_clt(cfg, boundary).verdict;

    char buf[160];
    std::snprintf(buf, sizeof buf, "below %d/100, boundary %d/100, cross-scaled control %s",
                  pass_iii, pass_ii, control_rejects ? "rejects" : "ACCEPTED");
    detail = buf;
    return pass_iii >= 95 && pass_ii >= 95 && control_rejects;
}

// --- criterion 6: above-circle oscillatory expansion ------------------------------

std::vector<double> expansion_residuals(const ReplacementLaw& law, const SpectralData& sd,
                                        std::int64_t n, std::uint64_t master, int reps) {
    const double exponent = std::log(sd.gamma) / std::log(sd.rho);
    std::vector<double> out;
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::for_replicate(master, static_cast<std::uint64_t>(r));
        const Tree t = simulate_until(law, 0, n + 1, sd.rho, rng);
        const double What = W_hat(t, sd);
        if (!(What > 0.0)) continue;  // extinct tree: no expansion defined
        std::map<int, Complex> west;
        for (const int idx : sd.Gamma)
            west[idx] = W_lambda_hat(t, sd, static_cast<std::size_t>(idx));
        const double corr =
            case_i_expansion(sd, 0, static_cast<double>(n), What, west);
        const double B = static_cast<double>(B_via_embedding(t, n, 0));
        const double resid = B - sd.rho * sd.u(0) * static_cast<double>(n) - corr;
        out.push_back(std::abs(resid) / std::pow(static_cast<double>(n), exponent));
    }
    return out;
}

bool criterion_6(std::string& detail) {
    const ReplacementLaw law = load("case_i_strong.json");
    const SpectralData sd = decompose(mean_matrix(law));
    const std::vector<double> small = expansion_residuals(law, sd, 256, 660000u, 500);
    const std::vector<double> big = expansion_residuals(law, sd, 4096, 661000u, 500);
    const double med_small = median_of(small);
    const double med_big = median_of(big);
    char buf[160];
    std::snprintf(buf, sizeof buf, "median |resid|/n^theta: %.4f at n=256, %.4f at n=4096 (ratio %.3f)",
                  med_small, med_big, med_big / med_small);
    detail = buf;
    return med_big < 0.5 * med_small;
}

// --- criterion 7: closed forms vs series ------------------------------------------

// Defining series x_i = sum_{k >= 0} E[Phi(k)] pi^(i) A_i^{-k}, summed term by
// term with the full-matrix inverse rather than the resolvent closed form.
RowVec x_vector_series(const SpectralData& sd, const CharacteristicSpec& spec, int i) {
    const RowVec m = mean_row(sd, spec);
    const Mat& pi = i == 1 ? sd.pi1 : sd.pi2;
    const Mat& inv = i == 1 ? sd.A1_inv : sd.A2_inv;
    RowVec term = m * pi;          // k = 0 before the threshold weight
    RowVec acc = spec.x * term;
    for (int k = 1; k <= 600; ++k) {
        term = term * inv;
        acc += term;
        if (term.cwiseAbs().maxCoeff() < 1e-16) break;
    }
    return acc;
}

bool criterion_7(std::string& detail) {
    const char* files[] = {"appendix_a.json", "case_ii.json", "case_iii.json"};
    double worst_series = 0.0, worst_trunc = 0.0;
    for (const char* f : files) {
        const ReplacementLaw law = load(f);
        const SpectralData sd = decompose(mean_matrix(law));
        for (int g = 0; g < 16; ++g) {
            const double x = static_cast<double>(g) / 16.0;
            for (const CharacteristicSpec& spec :
                 {CharacteristicSpec::total(x), CharacteristicSpec::combo(-sd.rho * sd.u(0), 1.0, 0, x)}) {
                for (int i = 1; i <= 2; ++i) {
                    const RowVec closed = x_vectors(sd, spec, i).real();
                    const RowVec series = x_vector_series(sd, spec, i);
                    worst_series = std::max(worst_series, (closed - series).cwiseAbs().maxCoeff());
                }
                const double a = sigma_sq(sd, law, spec);
                const double b = sigma_sq(sd, law, spec, 1e-15);
                worst_trunc = std::max(worst_trunc, std::abs(a - b) / std::max(1.0, std::abs(a)));
            }
        }
    }
    if (worst_series > 1e-10) {
        detail = "x_vectors series gap " + std::to_string(worst_series);
        return false;
    }
    if (worst_trunc > 1e-8) {
        detail = "sigma^2 re-truncation gap " + std::to_string(worst_trunc);
        return false;
    }

    // Mark-noise lower bound for the centered family, where it applies.
    for (const char* f : {"case_ii.json", "case_iii.json"}) {
        const ReplacementLaw law = load(f);
        const SpectralData sd = decompose(mean_matrix(law));
        const RowVec w = w_vector(sd, 0);
        double wsq = 0.0;
        for (int i = 0; i < sd.J; ++i) wsq += w(i) * w(i) * sd.u(i);
        for (int g = 0; g < 16; ++g) {
            const double x = static_cast<double>(g) / 16.0;
            const double s =
                sigma_sq(sd, law, CharacteristicSpec::combo(-sd.rho * sd.u(0), 1.0, 0, x));
            if (s < x * (1.0 - x) * wsq - 1e-12) {
                detail = "lower bound violated at x = " + std::to_string(x) + " for " + law.name;
                return false;
            }
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "series gap %.2e, re-truncation gap %.2e, lower bound holds on both noisy laws",
                  worst_series, worst_trunc);
    detail = buf;
    return true;
}

// --- criterion 8: scaling-function identities --------------------------------------

bool criterion_8(std::string& detail) {
    const double eps = 1e-12;
    Rng rng = Rng::for_replicate(880000, 0);

    // Callable scaling bundles for a boundary law (ell* = 0) and a
    // below-circle law (the -1/2 sentinel, Var[G] = sigma^2).
    std::vector<ScalingFunctions> bundles;
    for (const char* f : {"case_ii.json", "case_iii.json"}) {
        const ReplacementLaw law = load(f);
        const SpectralData sd = decompose(mean_matrix(law));
        const CharacteristicSpec spec = CharacteristicSpec::combo(-sd.rho * sd.u(0), 1.0, 0, 0.0);
        bundles.push_back(scaling_functions(sd, variance_profile(sd, law, spec)));
    }

    double worst = 0.0;
    std::string what = "all identities";
    auto track = [&](double err, const char* name) {
        if (err > worst) {
            worst = err;
            what = name;
        }
    };

    for (int p = 0; p < 1000; ++p) {
        const double x = 6.0 * rng.uniform01();
        const double y = rng.uniform01();
        // A modulus away from 1 keeps l_lambda's logarithms on the principal
        // branch, as on the gamma circle where these functions are used.
        const double mod = 1.1 + 2.0 * rng.uniform01();
        const double arg = 6.283185307179586 * rng.uniform01();
        const Complex lambda = std::polar(mod, arg);

        for (const ScalingFunctions& sf : bundles) {
            track(std::abs(sf.Uppsi(x + 1.0) - sf.Uppsi(x)) / std::max(1.0, sf.Uppsi(x)),
                  "Uppsi periodicity");
            track(std::abs(sf.h(sf.h_inv(y)) - y), "h o h_inv");
            track(std::abs(sf.h_inv(sf.h(y)) - y), "h_inv o h");
            track(std::abs(f_lambda(sf.rho, lambda, x + 1.0) - f_lambda(sf.rho, lambda, x)) /
                      std::max(1.0, std::abs(f_lambda(sf.rho, lambda, x))),
                  "f_lambda periodicity");
        }
        track(std::abs(l_lambda(lambda, x + 1.0) - l_lambda(lambda, x)) /
                  std::max(1.0, std::abs(l_lambda(lambda, x))),
              "l_lambda periodicity");
        // lambda^x l_lambda(x) is the piecewise-linear interpolation of
        // k -> lambda^k between consecutive integers.
        const double fl = std::floor(x), t = x - fl;
        const Complex interp = (1.0 - t) * std::pow(lambda, fl) + t * std::pow(lambda, fl + 1.0);
        const Complex via_l = std::pow(lambda, x) * l_lambda(lambda, x);
        track(std::abs(via_l - interp) / std::max(1.0, std::abs(interp)), "interpolation identity");
    }

    char buf[120];
    std::snprintf(buf, sizeof buf, "worst relative error %.2e (%s)", worst, what.c_str());
    detail = buf;
    return worst <= eps;
}

// --- driver -----------------------------------------------------------------------

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    bool (*fn)(std::string&);
};

}  // namespace

int main(int argc, char** argv) {
    const Criterion table[] = {
        {1, "exact enumeration golden values", 1.0, criterion_1},
        {2, "simulator vs exact oracle", 120.0, criterion_2},
        {3, "spectral identity suite", 1.0, criterion_3},
        {4, "strong law of large numbers", 300.0, criterion_4},
        {5, "CLT trichotomy", 1800.0, criterion_5},
        {6, "above-circle expansion residual", 600.0, criterion_6},
        {7, "closed forms vs series", 10.0, criterion_7},
        {8, "scaling-function identities", 1.0, criterion_8},
    };

    std::set<int> selected;
    for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));

    int failures = 0, ran = 0;
    for (const Criterion& c : table) {
        if (!selected.empty() && selected.find(c.id) == selected.end()) continue;
        ++ran;
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool pass = false;
        try {
            pass = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = seconds_since(t0);
        if (dt > c.budget_s) pass = false;
        if (!pass) ++failures;
        std::printf("[%s] criterion %d: %s  (%.1f s, budget %.0f s)\n",
                    pass ? "PASS" : "FAIL", c.id, c.name, dt, c.budget_s);
        std::printf("       %s\n", detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
