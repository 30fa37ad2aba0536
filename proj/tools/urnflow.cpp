// Command-line front end: law analysis, urn and embedding simulation,
// variance/scaling profiles, the Appendix-A golden table, and the replicated
// statistical experiments (lln / clt / equivalence), sharing one option
// vocabulary.  Exit codes: 0 pass, 2 statistical rejection, 1 error (bad
// usage, bad files, degenerate inputs).  All randomness is controlled by
// --seed, and reports are byte-identical across repeat invocations with the
// same options — runtime is included only behind --timing for that reason.
// Type indices are 1-based on the command line (matching the law files);
// the C++ API underneath is 0-based.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "urnflow/harness.hpp"

namespace {

using nlohmann::json;
using namespace urnflow;

int to_index(int one_based, int J, const char* what) {
    if (one_based < 1 || one_based > J)
        throw HarnessError(std::string(what) + " must lie in 1.." + std::to_string(J));
    return one_based - 1;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw HarnessError("cannot open output file: " + path);
    return os;
}

// --- analyze ---------------------------------------------------------------------

int cmd_analyze(const std::string& law_path) {
    const ReplacementLaw law = load_law(law_path);
    validate_law(law);
    const AssumptionReport ar = check_assumptions(law);
    const SpectralData sd = decompose(mean_matrix(law));
    json js;
    js["law"] = law.name;
    js["J"] = law.J;
    js["rho"] = sd.rho;
    js["gamma"] = sd.gamma;
    const int reg = regime(sd);
    js["regime"] = reg == 1 ? "above" : (reg == 2 ? "boundary" : "below");
    js["primitive"] = sd.primitive;
    js["u"] = std::vector<double>(sd.u.data(), sd.u.data() + sd.J);
    js["v"] = std::vector<double>(sd.v.data(), sd.v.data() + sd.J);
    json eigs = json::array();
    for (const auto& c : sd.comps) {
        json e;
        e["re"] = c.lambda.real();
        e["im"] = c.lambda.imag();
        e["multiplicity"] = c.multiplicity;
        e["simple"] = c.simple;
        e["class"] = class_name(c.cls);
        eigs.push_back(std::move(e));
    }
    js["eigenvalues"] = std::move(eigs);
    js["assumptions"] = {{"gw1", ar.gw1},
                         {"gw2", ar.gw2},
                         {"gw3", ar.gw3},
                         {"gw4", ar.gw4},
                         {"moment_2_plus_delta", ar.moment_2_plus_delta},
                         {"notes", ar.notes}};
    if (!sd.warnings.empty()) js["warnings"] = sd.warnings;
    std::cout << js.dump(2) << "\n";
    return 0;
}

// --- simulate --------------------------------------------------------------------

std::vector<std::int64_t> parse_checkpoints(const std::string& scheme, double rho,
                                            std::int64_t steps) {
    if (scheme == "geom") return geometric_checkpoints(rho, steps);
    if (scheme == "all") {
        std::vector<std::int64_t> cps;
        for (std::int64_t n = 0; n <= steps; ++n) cps.push_back(n);
        return cps;
    }
    std::vector<std::int64_t> cps;
    std::stringstream ss(scheme);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        const long long v = std::stoll(tok, &pos);
        if (pos != tok.size() || v < 0 || v > steps)
            throw HarnessError("checkpoints: expected geom, all, or a comma list within 0..steps");
        cps.push_back(v);
    }
    if (cps.empty()) throw HarnessError("checkpoints: empty list");
    return cps;
}

int cmd_simulate(const std::string& law_path, int j0_1, std::int64_t steps, std::uint64_t seed,
                 const std::string& checkpoints, const std::string& out_path) {
    const ReplacementLaw law = load_law(law_path);
    validate_law(law);
    const int j0 = to_index(j0_1, law.J, "--j0");
    const SpectralData sd = decompose(mean_matrix(law));
    const std::vector<std::int64_t> cps = parse_checkpoints(checkpoints, sd.rho, steps);
    Rng rng = Rng::for_replicate(seed, 0);
    const Trajectory t = run(law, j0, steps, cps, rng);

    std::ofstream file;
    if (!out_path.empty()) file = open_out(out_path);
    std::ostream& os = out_path.empty() ? std::cout : file;
    os << "n";
    for (int j = 1; j <= law.J; ++j) os << ",B_" << j;
    os << ",survived\n";
    const auto alive_at = [&](std::int64_t n) {
        return !(t.final_state.extinct_at && *t.final_state.extinct_at <= n);
    };
    for (const auto& [n, B] : t.records) {
        os << n;
        for (const std::int64_t b : B) os << "," << b;
        os << "," << (alive_at(n) ? 1 : 0) << "\n";
    }
    return 0;
}

// --- embed -----------------------------------------------------------------------

int cmd_embed(const std::string& law_path, int j0_1, int depth, std::uint64_t seed,
              std::int64_t budget) {
    const ReplacementLaw law = load_law(law_path);
    validate_law(law);
    const int j0 = to_index(j0_1, law.J, "--j0");
    const SpectralData sd = decompose(mean_matrix(law));
    const Tree t = simulate_tree(law, j0, depth, seed, budget);
    std::cout << tree_summary(t, &sd).dump(2) << "\n";
    return 0;
}

// --- example: the Appendix-A golden table ------------------------------------------

int cmd_example() {
    ReplacementLaw law;
    law.J = 3;
    law.name = "appendix_a";
    law.columns = {{{{1, 0, 1}, 1.0}}, {{{0, 2, 1}, 1.0}}, {{{2, 1, 1}, 1.0}}};
    validate_law(law);

    const auto fmt = [](const std::vector<std::int64_t>& B) {
        std::string s = "(";
        for (std::size_t i = 0; i < B.size(); ++i)
            s += std::to_string(B[i]) + (i + 1 < B.size() ? "," : ")");
        return s;
    };
    std::cout << "Appendix-A law: three deterministic columns, one initial type-1 ball\n";
    std::cout << "  n  B(n)      probability\n";
    std::cout << "  0  (1,0,0)   1\n";
    bool ok = true;
    std::vector<std::map<std::vector<std::int64_t>, Rational>> dist(5);
    for (int n = 1; n <= 4; ++n) {
        const ExactDistribution ed = exact_distribution(law, 0, n);
        ok = ok && ed.exact;
        for (const auto& e : ed.entries) dist[static_cast<std::size_t>(n)][e.B] = e.prob_exact;
        for (const auto& [B, p] : dist[static_cast<std::size_t>(n)])
            std::cout << "  " << n << "  " << fmt(B) << "   " << p << "\n";
    }
    const auto check = [&](int n, std::vector<std::int64_t> B, const Rational& want,
                           std::size_t support) {
        const auto& d = dist[static_cast<std::size_t>(n)];
        const auto it = d.find(B);
        const bool good = it != d.end() && it->second == want &&
                          (support == 0 || d.size() == support);
        std::cout << (good ? "  [ok] " : "  [MISMATCH] ") << "P(B(" << n << ") = " << fmt(B)
                  << ") = " << want << "\n";
        return good;
    };
    ok = check(1, {2, 0, 1}, Rational(1), 1) && ok;
    ok = check(2, {4, 1, 2}, Rational(1) / 2, 2) && ok;
    ok = check(2, {3, 0, 2}, Rational(1) / 2, 2) && ok;
    ok = check(3, {5, 1, 3}, Rational(1), 1) && ok;
    ok = check(4, {5, 3, 4}, Rational(1) / 6, 0) && ok;
    return ok ? 0 : 1;
}

// --- profile ---------------------------------------------------------------------

int cmd_profile(const std::string& law_path, int j_1, int grid, int points,
                const std::string& profile_csv, const std::string& scaling_csv) {
    const ReplacementLaw law = load_law(law_path);
    validate_law(law);
    const SpectralData sd = decompose(mean_matrix(law));
    const int j = to_index(j_1, law.J, "--j");
    const CharacteristicSpec spec = CharacteristicSpec::combo(-sd.rho * sd.u(j), 1.0, j, 0.0);
    const VarianceProfile p = variance_profile(sd, law, spec, grid);
    if (!profile_csv.empty()) {
        std::ofstream os = open_out(profile_csv);
        os << "x";
        for (int ell = 0; ell < law.J; ++ell) os << ",sigma_" << ell << "_sq";
        os << ",sigma_sq\n";
        for (std::size_t g = 0; g < p.x_grid.size(); ++g) {
            os << p.x_grid[g];
            for (int ell = 0; ell < law.J; ++ell)
                os << "," << p.sigma_l[static_cast<std::size_t>(ell)][g];
            os << "," << p.sigma[g] << "\n";
        }
    }
    if (!scaling_csv.empty()) {
        const ScalingFunctions sf = scaling_functions(sd, p);
        std::ofstream os = open_out(scaling_csv);
        write_scaling_csv(os, sd, sf, points);
    }
    std::cout << profile_to_json(p).dump(2) << "\n";
    return 0;
}

// --- experiments -----------------------------------------------------------------

struct ExperimentCli {
    ExperimentConfig cfg;
    int j0_1 = 1;
    int j_1 = 1;
    std::string test = "ks";
    bool keep_extinct = false;

    void add_common(CLI::App* sub) {
        sub->add_option("--law", cfg.law_path, "Law JSON file")->required();
        sub->add_option("--j0", j0_1, "Initial type (1-based)")->capture_default_str();
        sub->add_option("--j", j_1, "Observed type (1-based)")->capture_default_str();
        sub->add_option("--replicates", cfg.replicates, "Monte Carlo replicates")
            ->capture_default_str();
        sub->add_option("--n", cfg.n, "Draws per replicate")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
        sub->add_option("--alpha", cfg.alpha, "Test level")->capture_default_str();
        sub->add_option("--test", test, "Normality test")
            ->check(CLI::IsMember({"ks", "ad"}))
            ->capture_default_str();
        sub->add_flag("--keep-extinct", keep_extinct,
                      "Keep extinct replicates instead of requiring survival");
        sub->add_option("--samples", cfg.samples_path, "Write per-replicate samples CSV here");
        sub->add_flag("--timing", cfg.timing, "Include runtime_ms in the report");
    }

    ExperimentConfig finalize(const ReplacementLaw& law) {
        cfg.j0 = to_index(j0_1, law.J, "--j0");
        cfg.j = to_index(j_1, law.J, "--j");
        cfg.test = test == "ad" ? TestKind::ad : TestKind::ks;
        cfg.reject_extinct = !keep_extinct;
        return cfg;
    }
};

int report_and_exit_code(const ExperimentReport& rep) {
    std::cout << report_to_json(rep).dump(2) << "\n";
    return rep.verdict ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"urnflow: two-alternating-urn branching toolkit"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Spectral decomposition and regime of a law");
    std::string analyze_law;
    analyze->add_option("--law", analyze_law, "Law JSON file")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the urn and emit a trajectory CSV");
    std::string sim_law, sim_checkpoints = "geom", sim_out;
    int sim_j0 = 1;
    std::int64_t sim_steps = 1000;
    std::uint64_t sim_seed = 0;
    simulate->add_option("--law", sim_law, "Law JSON file")->required();
    simulate->add_option("--j0", sim_j0, "Initial type (1-based)")->capture_default_str();
    simulate->add_option("--steps", sim_steps, "Number of draws")->capture_default_str();
    simulate->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    simulate->add_option("--checkpoints", sim_checkpoints, "geom, all, or comma list")
        ->capture_default_str();
    simulate->add_option("--out", sim_out, "CSV output path (default stdout)");

    // embed
    auto* embed = app.add_subcommand("embed", "Grow the branching tree and emit a summary JSON");
    std::string emb_law;
    int emb_j0 = 1, emb_depth = 8;
    std::uint64_t emb_seed = 0;
    std::int64_t emb_budget = kDefaultTreeBudget;
    embed->add_option("--law", emb_law, "Law JSON file")->required();
    embed->add_option("--j0", emb_j0, "Initial type (1-based)")->capture_default_str();
    embed->add_option("--depth", emb_depth, "Generations to grow")->capture_default_str();
    embed->add_option("--seed", emb_seed, "Seed")->capture_default_str();
    embed->add_option("--budget", emb_budget, "Population budget")->capture_default_str();

    // lln / clt / equivalence
    auto* lln = app.add_subcommand("lln", "Law-of-large-numbers deviation experiment");
    ExperimentCli lln_cli;
    lln_cli.add_common(lln);
    lln->add_option("--c", lln_cli.cfg.lln_c, "Envelope constant (default 0.49 rho)");
    lln->add_option("--limit-offset", lln_cli.cfg.limit_offset,
                    "Shift the candidate limit (negative control)");

    auto* clt = app.add_subcommand("clt", "Standardized-fluctuation normality experiment");
    ExperimentCli clt_cli;
    clt_cli.add_common(clt);
    clt->add_option("--centering", clt_cli.cfg.centering, "auto, mean, or curly_f")
        ->check(CLI::IsMember({"auto", "mean", "curly_f"}))
        ->capture_default_str();
    std::optional<double> clt_log_exponent;
    clt->add_option("--log-exponent", clt_log_exponent,
                    "Override the (log_rho n) exponent (cross-scale control)");

    auto* equiv = app.add_subcommand("equivalence", "Simulator-vs-oracle chi-square experiment");
    ExperimentCli eq_cli;
    eq_cli.add_common(equiv);
    equiv->add_option("--source", eq_cli.cfg.source, "Simulator under test: urn or embedding")
        ->check(CLI::IsMember({"urn", "embedding"}))
        ->capture_default_str();
    bool eq_exact = false, eq_two_sample = false;
    auto* exact_flag = equiv->add_flag("--exact", eq_exact, "Force exact-support mode (n <= 4)");
    equiv->add_flag("--two-sample", eq_two_sample, "Force two-sample urn-vs-embedding mode")
        ->excludes(exact_flag);

    // example / profile
    app.add_subcommand("example", "Print and verify the Appendix-A golden table");
    auto* profile = app.add_subcommand("profile", "Variance profile and scaling-function tables");
    std::string prof_law, prof_csv, prof_scaling;
    int prof_j = 1, prof_grid = 16, prof_points = 256;
    profile->add_option("--law", prof_law, "Law JSON file")->required();
    profile->add_option("--j", prof_j, "Observed type (1-based)")->capture_default_str();
    profile->add_option("--grid", prof_grid, "Threshold grid points")->capture_default_str();
    profile->add_option("--points", prof_points, "Scaling CSV resolution")->capture_default_str();
    profile->add_option("--profile-csv", prof_csv, "Write sigma_l/sigma grid CSV here");
    profile->add_option("--scaling-csv", prof_scaling, "Write Uppsi/f_lambda CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(analyze_law);
        if (simulate->parsed())
            return cmd_simulate(sim_law, sim_j0, sim_steps, sim_seed, sim_checkpoints, sim_out);
        if (embed->parsed()) return cmd_embed(emb_law, emb_j0, emb_depth, emb_seed, emb_budget);
        if (lln->parsed()) {
            const ReplacementLaw law = load_law(lln_cli.cfg.law_path);
            return report_and_exit_code(run_lln(lln_cli.finalize(law), law));
        }
        if (clt->parsed()) {
            const ReplacementLaw law = load_law(clt_cli.cfg.law_path);
            clt_cli.cfg.log_exponent = clt_log_exponent;
            return report_and_exit_code(run_clt(clt_cli.finalize(law), law));
        }
        if (equiv->parsed()) {
            const ReplacementLaw law = load_law(eq_cli.cfg.law_path);
            if (eq_exact) eq_cli.cfg.two_sample = false;
            if (eq_two_sample) eq_cli.cfg.two_sample = true;
            return report_and_exit_code(run_equivalence(eq_cli.finalize(law), law));
        }
        if (app.get_subcommand("example")->parsed()) return cmd_example();
        if (profile->parsed())
            return cmd_profile(prof_law, prof_j, prof_grid, prof_points, prof_csv, prof_scaling);
    } catch (const std::exception& e) {
        std::cerr << "urnflow: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
