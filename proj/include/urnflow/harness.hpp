// Monte Carlo experiment driver: seeded, replicate-parallel simulation of the
// urn process and its branching embedding, with statistical verdicts.
//
//   run_lln          median deviation max_j |B_j(n)/n - rho u_j| against the
//                    c (1 + ln n)/sqrt(n) envelope
//   run_clt          standardized fluctuations (B_j(n) - centering)/scale,
//                    KS or Anderson-Darling against the standard normal
//   run_equivalence  urn simulator vs exact enumeration (k <= 4) or vs the
//                    embedding, chi-square
//
// Replicates draw from replicate-indexed RNG streams and land in
// preallocated slots, so reports are byte-identical no matter how many
// workers run (URNFLOW_THREADS caps the pool).  Extinct replicates are
// rejected where the standardized statistic needs W > 0 (clt always; lln
// when reject_extinct is set) and kept with frozen counts where the compared
// law itself includes extinction (equivalence).  runtime_ms is measured
// always but serialized only when timing is requested, keeping default
// reports deterministic.

#ifndef URNFLOW_HARNESS_HPP
#define URNFLOW_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "urnflow/embedding.hpp"
#include "urnflow/limits.hpp"
#include "urnflow/model.hpp"
#include "urnflow/spectral.hpp"
#include "urnflow/stats.hpp"
#include "urnflow/urn_sim.hpp"

namespace urnflow {

struct HarnessError : std::runtime_error {
    explicit HarnessError(const std::string& what) : std::runtime_error(what) {}
};

// Fewer than half the replicates survived: the law is likely subcritical or
// near-critical and conditioning on survival would be mostly rejection.
struct TooFewSurvivors : HarnessError {
    std::int64_t survivors, total;
    TooFewSurvivors(std::int64_t s, std::int64_t t)
        : HarnessError("TooFewSurvivors: " + std::to_string(s) + " of " + std::to_string(t) +
                       " replicates survived"),
          survivors(s),
          total(t) {}
};

enum class TestKind { ks, ad };

struct ExperimentConfig {
    std::string law_path;  // echoed in reports; run_* overloads may take the law directly
    int j0 = 0;
    int j = 0;
    std::int64_t replicates = 200;
    std::int64_t n = 10000;
    std::uint64_t seed = 0;
    bool reject_extinct = true;
    TestKind test = TestKind::ks;
    double alpha = 0.01;
    std::string samples_path;  // when nonempty, per-replicate CSV is written here
    bool timing = false;       // include runtime_ms in the serialized report

    // lln: envelope constant c (0 means the calibrated default 0.49 rho) and
    // an offset added to the candidate limit for negative controls.
    double lln_c = 0.0;
    double limit_offset = 0.0;

    // clt: centering "auto" (curly-F in case i, rho u_j n otherwise), "mean",
    // or "curly_f"; log_exponent overrides ell* + 1/2 for cross-scale
    // controls.
    std::string centering = "auto";
    std::optional<double> log_exponent;

    // equivalence: compare the exact law against "urn" or "embedding", or the
    // two simulators against each other (two_sample; the default when the
    // exact oracle is out of reach at n > 4).
    std::string source = "urn";
    std::optional<bool> two_sample;
};

struct ReplicateRecord {
    std::int64_t replicate = 0;
    bool survived = false;
    double W_hat = std::numeric_limits<double>::quiet_NaN();
    double tau_n = std::numeric_limits<double>::quiet_NaN();
    std::int64_t B_j = 0;
    double standardized = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
    std::string mode;
    ExperimentConfig config;
    std::string law_name;
    Regime regime = Regime::case_iii_below;
    RegimeReport hypotheses;
    std::vector<ReplicateRecord> records;
    double survival_fraction = 0.0;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();  // NaN when no test applies (lln)
    double threshold = std::numeric_limits<double>::quiet_NaN();  // lln envelope
    bool verdict = false;
    double runtime_ms = 0.0;
    std::optional<TruncationDiagnostics> truncation;  // clt only
};

namespace detail {

inline void validate_config(const ExperimentConfig& cfg) {
    if (cfg.replicates < 1) throw HarnessError("config: replicates must be >= 1");
    if (cfg.n < 1) throw HarnessError("config: n must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw HarnessError("config: alpha must lie in (0,1)");
}

inline void validate_types(const ExperimentConfig& cfg, int J) {
    if (cfg.j0 < 0 || cfg.j0 >= J) throw HarnessError("config: j0 out of range");
    if (cfg.j < 0 || cfg.j >= J) throw HarnessError("config: j out of range");
}

inline int worker_count(std::int64_t items) {
    long want = static_cast<long>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("URNFLOW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) want = v;
    }
    if (want < 1) want = 1;
    return static_cast<int>(std::min<std::int64_t>(want, items));
}

// Run fn(0..R-1), possibly on a small pool.  fn writes only to its own
// replicate's slot, so the aggregate is order-independent; the first thrown
// exception is rethrown after the pool drains.
template <typename Fn>
inline void for_each_replicate(std::int64_t R, Fn&& fn) {
    const int workers = worker_count(R);
    if (workers <= 1) {
        for (std::int64_t r = 0; r < R; ++r) fn(r);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::exception_ptr first;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t r = next.fetch_add(1);
                if (r >= R || failed.load()) return;
                try {
                    fn(r);
                } catch (...) {
                    std::lock_guard<std::mutex> g(mu);
                    if (!first) first = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

inline double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline void require_assumptions(const ReplacementLaw& law, bool need_gw3) {
    const AssumptionReport rep = check_assumptions(law);
    if (!rep.gw1) throw HarnessError("law violates GW1 (needs rho > 1)");
    if (!rep.gw2) throw HarnessError("law violates GW2 (mean matrix not primitive)");
    if (need_gw3 && !rep.gw3) throw HarnessError("law violates GW3");
}

inline void finalize_survival(ExperimentReport& rep, const ExperimentConfig& cfg) {
    std::int64_t survivors = 0;
    for (const auto& r : rep.records) survivors += r.survived ? 1 : 0;
    rep.survival_fraction =
        static_cast<double>(survivors) / static_cast<double>(rep.records.size());
    if (cfg.reject_extinct && 2 * survivors < static_cast<std::int64_t>(rep.records.size()))
        throw TooFewSurvivors(survivors, static_cast<std::int64_t>(rep.records.size()));
}

}  // namespace detail

// --- serialization ---------------------------------------------------------------

inline nlohmann::json config_to_json(const ExperimentConfig& cfg, const std::string& mode) {
    nlohmann::json js;
    js["law"] = cfg.law_path;
    js["mode"] = mode;
    js["j0"] = cfg.j0 + 1;  // types are 1-based in files and reports
    js["j"] = cfg.j + 1;
    js["replicates"] = cfg.replicates;
    js["n"] = cfg.n;
    js["seed"] = cfg.seed;
    js["reject_extinct"] = cfg.reject_extinct;
    js["test"] = cfg.test == TestKind::ks ? "ks" : "ad";
    js["alpha"] = cfg.alpha;
    if (mode == "lln") {
        js["lln_c"] = cfg.lln_c;
        js["limit_offset"] = cfg.limit_offset;
    } else if (mode == "clt") {
        js["centering"] = cfg.centering;
        if (cfg.log_exponent)
            js["log_exponent"] = *cfg.log_exponent;
        else
            js["log_exponent"] = nullptr;
    } else if (mode == "equivalence") {
        js["source"] = cfg.source;
    }
    return js;
}

inline nlohmann::json report_to_json(const ExperimentReport& rep) {
    nlohmann::json js;
    js["config"] = config_to_json(rep.config, rep.mode);
    js["law_name"] = rep.law_name;
    js["regime"] = regime_name(rep.regime);
    js["hypotheses"] = {{"wj_ulambda_nonzero", rep.hypotheses.wj_ulambda_nonzero},
                        {"var_vlambda_L_positive", rep.hypotheses.var_vlambda_L_positive},
                        {"prop44_condition", rep.hypotheses.prop44_condition}};
    js["survival_fraction"] = rep.survival_fraction;
    js["samples_path"] = rep.config.samples_path;
    js["statistic"] = rep.statistic;
    if (std::isnan(rep.p_value))
        js["p_value"] = nullptr;
    else
        js["p_value"] = rep.p_value;
    if (!std::isnan(rep.threshold)) js["threshold"] = rep.threshold;
    js["verdict"] = rep.verdict ? "pass" : "fail";
    if (rep.truncation)
        js["truncation"] = {{"k_lo", rep.truncation->k_lo},
                            {"k_hi", rep.truncation->k_hi},
                            {"ratio_low", rep.truncation->ratio_low},
                            {"ratio_high", rep.truncation->ratio_high},
                            {"bound_low", rep.truncation->bound_low},
                            {"bound_high", rep.truncation->bound_high}};
    if (rep.config.timing) js["runtime_ms"] = rep.runtime_ms;
    return js;
}

inline void write_samples_csv(std::ostream& os, const ExperimentReport& rep) {
    os << "replicate,W_hat,tau_n,B_j,standardized\n";
    for (const auto& r : rep.records)
        os << r.replicate << "," << r.W_hat << "," << r.tau_n << "," << r.B_j << ","
           << r.standardized << "\n";
}

namespace detail {

inline void maybe_write_samples(const ExperimentReport& rep) {
    if (rep.config.samples_path.empty()) return;
    std::ofstream out(rep.config.samples_path);
    if (!out) throw HarnessError("cannot open samples path: " + rep.config.samples_path);
    write_samples_csv(out, rep);
}

}  // namespace detail

// --- LLN -------------------------------------------------------------------------

// Median over surviving replicates of max_j |B_j(n)/n - rho u_j| at the
// final step, against the envelope c (1 + ln n)/sqrt(n); c defaults to
// 0.49 rho.  limit_offset shifts the candidate limit for negative controls.
inline ExperimentReport run_lln(const ExperimentConfig& cfg, const ReplacementLaw& law) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::validate_config(cfg);
    detail::validate_types(cfg, law.J);
    detail::require_assumptions(law, /*need_gw3=*/false);
    const SpectralData sd = decompose(mean_matrix(law));

    ExperimentReport rep;
    rep.mode = "lln";
    rep.config = cfg;
    rep.law_name = law.name;
    rep.regime = static_cast<Regime>(regime(sd));
    rep.hypotheses = regime_report(sd, law, cfg.j);
    rep.records.assign(static_cast<std::size_t>(cfg.replicates), ReplicateRecord{});

    detail::for_each_replicate(cfg.replicates, [&](std::int64_t r) {
        Rng rng = Rng::for_replicate(cfg.seed, static_cast<std::uint64_t>(r));
        const Trajectory traj = run(law, cfg.j0, cfg.n, {cfg.n}, rng);
        ReplicateRecord& rec = rep.records[static_cast<std::size_t>(r)];
        rec.replicate = r;
        rec.survived = traj.survived;
        rec.B_j = traj.final_state.B[static_cast<std::size_t>(cfg.j)];
        if (traj.survived || !cfg.reject_extinct) {
            double dev = 0.0;
            for (int j = 0; j < law.J; ++j) {
                const double target = sd.rho * sd.u(j) + cfg.limit_offset;
                const double ratio = static_cast<double>(traj.final_state.B[static_cast<std::size_t>(j)]) /
                                     static_cast<double>(cfg.n);
                dev = std::max(dev, std::abs(ratio - target));
            }
            rec.standardized = dev;
        }
    });

    detail::finalize_survival(rep, cfg);
    std::vector<double> devs;
    for (const auto& r : rep.records)
        if (std::isfinite(r.standardized)) devs.push_back(r.standardized);
    if (devs.empty()) throw TooFewSurvivors(0, cfg.replicates);
    rep.statistic = median(devs);
    const double c = cfg.lln_c > 0.0 ? cfg.lln_c : 0.49 * sd.rho;
    rep.threshold = c * (1.0 + std::log(static_cast<double>(cfg.n))) /
                    std::sqrt(static_cast<double>(cfg.n));
    rep.verdict = rep.statistic < rep.threshold;
    rep.runtime_ms = detail::elapsed_ms(t0);
    detail::maybe_write_samples(rep);
    return rep;
}

// --- CLT -------------------------------------------------------------------------

// Standardize B_j(n) per surviving replicate via the branching embedding:
// centering is rho u_j n (cases ii/iii) or curly-F^j(curly-F^inv(n)) with the
// replicate's own W-hat^(1) (case i / on request), scale is
// sqrt(n) (log_rho n)^{ell* + 1/2} Uppsi(T-hat_n); then KS or AD against the
// standard normal.  Extinct replicates never contribute samples: W-hat = 0
// leaves T-hat_n undefined.
inline ExperimentReport run_clt(const ExperimentConfig& cfg, const ReplacementLaw& law) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::validate_config(cfg);
    detail::validate_types(cfg, law.J);
    if (cfg.centering != "auto" && cfg.centering != "mean" && cfg.centering != "curly_f")
        throw HarnessError("config: centering must be auto, mean, or curly_f");
    detail::require_assumptions(law, /*need_gw3=*/false);
    const SpectralData sd = decompose(mean_matrix(law));
    const CharacteristicSpec spec = CharacteristicSpec::combo(-sd.rho * sd.u(cfg.j), 1.0, cfg.j, 0.0);
    const VarianceProfile profile = variance_profile(sd, law, spec);
    const ScalingFunctions sf = scaling_functions(sd, profile);

    ExperimentReport rep;
    rep.mode = "clt";
    rep.config = cfg;
    rep.law_name = law.name;
    rep.regime = profile.report.regime;
    rep.hypotheses = profile.report;
    rep.truncation = profile.trunc;
    rep.records.assign(static_cast<std::size_t>(cfg.replicates), ReplicateRecord{});

    const double ell_exponent =
        cfg.log_exponent ? *cfg.log_exponent
                         : (profile.ell_star ? static_cast<double>(*profile.ell_star) + 0.5 : 0.0);
    const bool curly_center =
        cfg.centering == "curly_f" ||
        (cfg.centering == "auto" && rep.regime == Regime::case_i_above);
    const double n_real = static_cast<double>(cfg.n);
    const double log_n = std::log(n_real) / std::log(sd.rho);
    const double log_factor = std::pow(log_n, ell_exponent);
    if (!(log_factor > 0.0))
        throw HarnessError("clt: degenerate scale (log_rho n)^e; increase n");
    const Vec Z0 = [&] {
        Vec z = Vec::Zero(sd.J);
        z(cfg.j0) = 1.0;
        return z;
    }();

    detail::for_each_replicate(cfg.replicates, [&](std::int64_t r) {
        Rng rng = Rng::for_replicate(cfg.seed, static_cast<std::uint64_t>(r));
        const Tree t = simulate_until(law, cfg.j0, cfg.n + 1, sd.rho, rng);
        ReplicateRecord& rec = rep.records[static_cast<std::size_t>(r)];
        rec.replicate = r;
        const double what = W_hat(t, sd);
        rec.survived = t.survived() && what > 0.0;
        if (!rec.survived) return;
        rec.W_hat = what;
        rec.tau_n = tau(t, cfg.n);
        rec.B_j = B_via_embedding(t, cfg.n, cfg.j);
        const double t_hat = T_n(sd.rho, n_real, what);
        double center;
        if (curly_center) {
            const Vec W1 = W1_hat(t, sd);
            const double x_inv =
                curly_F_inverse(sd, CharacteristicSpec::total(0.0), n_real, W1, Z0);
            center = curly_F(sd, CharacteristicSpec::type(cfg.j, 0.0), x_inv, W1, Z0);
        } else {
            center = sd.rho * sd.u(cfg.j) * n_real;
        }
        const double scale = std::sqrt(n_real) * log_factor * sf.Uppsi(t_hat);
        rec.standardized = (static_cast<double>(rec.B_j) - center) / scale;
    });

    detail::finalize_survival(rep, cfg);
    std::vector<double> sample;
    for (const auto& r : rep.records)
        if (std::isfinite(r.standardized)) sample.push_back(r.standardized);
    const TestResult res = cfg.test == TestKind::ks ? ks_test(sample) : ad_test(sample);
    rep.statistic = res.statistic;
    rep.p_value = res.p_value;
    rep.verdict = rep.p_value >= cfg.alpha;
    rep.runtime_ms = detail::elapsed_ms(t0);
    detail::maybe_write_samples(rep);
    return rep;
}

// --- equivalence -----------------------------------------------------------------

namespace detail {

// B_j(n) through the embedding with the freeze convention: an extinct tree
// has exactly one draw per individual ever born, so counts freeze at
// k = individuals.
inline std::vector<std::int64_t> embedded_B(const Tree& t, std::int64_t n) {
    const std::int64_t k = std::min(n, t.individuals);
    return B_vector_via_embedding(t, k);
}

}  // namespace detail

// Exact mode (n small enough for the enumeration oracle): chi-square
// goodness of fit of simulated B(n) frequencies — from the urn simulator or
// the embedding, per config.source — against exact_distribution.  Two-sample
// mode: chi-square homogeneity between the two simulators' B(n) samples.
// Extinction is part of the compared law (frozen counts), so replicates are
// never rejected here.
inline ExperimentReport run_equivalence(const ExperimentConfig& cfg, const ReplacementLaw& law) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::validate_config(cfg);
    detail::validate_types(cfg, law.J);
    validate_law(law);
    if (cfg.source != "urn" && cfg.source != "embedding")
        throw HarnessError("config: source must be urn or embedding");
    const bool two_sample = cfg.two_sample ? *cfg.two_sample : cfg.n > 4;
    const SpectralData sd = decompose(mean_matrix(law));

    ExperimentReport rep;
    rep.mode = "equivalence";
    rep.config = cfg;
    rep.law_name = law.name;
    rep.regime = static_cast<Regime>(regime(sd));
    rep.hypotheses = regime_report(sd, law, cfg.j);
    rep.records.assign(static_cast<std::size_t>(cfg.replicates), ReplicateRecord{});

    std::vector<std::vector<std::int64_t>> urn_B(static_cast<std::size_t>(cfg.replicates));
    std::vector<std::vector<std::int64_t>> emb_B(static_cast<std::size_t>(cfg.replicates));
    const bool want_urn = two_sample || cfg.source == "urn";
    const bool want_emb = two_sample || cfg.source == "embedding";
    detail::for_each_replicate(cfg.replicates, [&](std::int64_t r) {
        ReplicateRecord& rec = rep.records[static_cast<std::size_t>(r)];
        rec.replicate = r;
        if (want_urn) {
            Rng rng = Rng::for_replicate(cfg.seed, static_cast<std::uint64_t>(r));
            const Trajectory traj = run(law, cfg.j0, cfg.n, {cfg.n}, rng);
            urn_B[static_cast<std::size_t>(r)] = traj.final_state.B;
            rec.survived = traj.survived;
        }
        if (want_emb) {
            // Distinct stream: the two simulators must be independent in the
            // two-sample comparison.
            Rng rng = Rng::for_replicate(cfg.seed ^ 0x9e3779b97f4a7c15ULL,
                                         static_cast<std::uint64_t>(r));
            const Tree t = simulate_until(law, cfg.j0, cfg.n + 1, sd.rho, rng);
            emb_B[static_cast<std::size_t>(r)] = detail::embedded_B(t, cfg.n);
            if (!want_urn) rec.survived = t.survived();
        }
        const auto& primary =
            cfg.source == "embedding" ? emb_B[static_cast<std::size_t>(r)] : urn_B[static_cast<std::size_t>(r)];
        rec.B_j = primary[static_cast<std::size_t>(cfg.j)];
    });

    std::int64_t survivors = 0;
    for (const auto& r : rep.records) survivors += r.survived ? 1 : 0;
    rep.survival_fraction =
        static_cast<double>(survivors) / static_cast<double>(rep.records.size());

    TestResult res;
    if (two_sample) {
        std::map<std::vector<std::int64_t>, std::pair<double, double>> bins;
        for (const auto& b : urn_B) bins[b].first += 1.0;
        for (const auto& b : emb_B) bins[b].second += 1.0;
        std::vector<double> a, b;
        for (const auto& [key, cnt] : bins) {
            (void)key;
            a.push_back(cnt.first);
            b.push_back(cnt.second);
        }
        res = chi_square_homogeneity(a, b);
    } else {
        const ExactDistribution oracle = exact_distribution(law, cfg.j0, cfg.n);
        std::map<std::vector<std::int64_t>, std::size_t> index;
        std::vector<double> expected;
        for (const auto& e : oracle.entries) {
            index[e.B] = expected.size();
            expected.push_back(e.prob * static_cast<double>(cfg.replicates));
        }
        std::vector<double> observed(expected.size(), 0.0);
        const auto& sample = cfg.source == "embedding" ? emb_B : urn_B;
        for (const auto& bvec : sample) {
            const auto it = index.find(bvec);
            if (it == index.end())
                throw HarnessError("equivalence: simulated B outside the exact support");
            observed[it->second] += 1.0;
        }
        res = chi_square_gof(observed, expected);
    }
    rep.statistic = res.statistic;
    rep.p_value = res.p_value;
    rep.verdict = rep.p_value >= cfg.alpha;
    rep.runtime_ms = detail::elapsed_ms(t0);
    detail::maybe_write_samples(rep);
    return rep;
}

// --- law-loading conveniences ------------------------------------------------------

inline ExperimentReport run_lln(const ExperimentConfig& cfg) {
    return run_lln(cfg, load_law(cfg.law_path));
}

inline ExperimentReport run_clt(const ExperimentConfig& cfg) {
    return run_clt(cfg, load_law(cfg.law_path));
}

inline ExperimentReport run_equivalence(const ExperimentConfig& cfg) {
    return run_equivalence(cfg, load_law(cfg.law_path));
}

}  // namespace urnflow

#endif
