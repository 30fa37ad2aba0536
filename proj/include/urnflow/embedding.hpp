#ifndef URNFLOW_EMBEDDING_HPP
#define URNFLOW_EMBEDDING_HPP

// Branching-process view of the urn.  A multitype Galton-Watson tree is grown
// generation by generation; each individual u carries a uniform mark U_u and
// an offspring vector drawn from the column law of its type.  An individual
// at depth m is "drawn" at real time m + U_u (the root's mark is pinned to 0,
// so the first draw happens at time 0), and at that instant its offspring
// enter the count of balls added.  The counting functions
//
//   Zt(x) = #{u : |u| + U_u <= x}                     (draws by time x)
//   Zj(x) = sum over drawn u of offspring_j(u)        (type-j balls added)
//
// are right-continuous step functions; tau_k is the time of the k-th draw,
// and B_j(k) = delta_{j,j0} + Zj(tau_k) reproduces the urn's ball counts in
// distribution.  Storage is generation-level (types, marks, flattened
// offspring rows), never an explicit genealogy: every quantity computed here
// depends only on per-generation aggregates and marks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urnflow/model.hpp"
#include "urnflow/rng.hpp"
#include "urnflow/spectral.hpp"

namespace urnflow {

struct EmbeddingError : std::runtime_error {
    explicit EmbeddingError(const std::string& msg) : std::runtime_error("embedding: " + msg) {}
};

// The tree does not extend far enough below floor(x) to evaluate a count.
struct InsufficientDepth : EmbeddingError {
    explicit InsufficientDepth(double x, int depth)
        : EmbeddingError("counting at x = " + std::to_string(x) + " needs depth >= " +
                         std::to_string(static_cast<int>(std::floor(x)) + 2) + ", tree has " +
                         std::to_string(depth)) {}
};

// The k-th draw does not exist among recorded generations (tree too shallow,
// or the population died out before k individuals were ever born).
struct NotReached : EmbeddingError {
    explicit NotReached(std::int64_t k, std::int64_t have)
        : EmbeddingError("draw " + std::to_string(k) + " not reached; tree contains " +
                         std::to_string(have) + " individuals") {}
};

// One complete generation: counts by type plus, per individual, its type, its
// uniform mark, and its offspring vector (row-major, J entries per row).  The
// offspring of generation k define Z_{k+1}.
struct GenerationRecord {
    int depth = 0;
    std::vector<std::int64_t> Z;
    std::vector<std::int32_t> types;
    std::vector<double> marks;
    std::vector<std::int64_t> offspring;  // size() == types.size() * J

    std::int64_t size() const { return static_cast<std::int64_t>(types.size()); }
};

struct Tree {
    int J = 0;
    int j0 = 0;
    std::uint64_t seed = 0;
    std::string law_name;
    std::vector<GenerationRecord> gens;
    std::int64_t individuals = 0;  // total across all recorded generations

    int depth() const { return static_cast<int>(gens.size()) - 1; }
    bool survived() const { return !gens.empty() && gens.back().size() > 0; }
};

constexpr std::int64_t kDefaultTreeBudget = 10'000'000;

namespace detail {

// Fill per-individual data for one generation whose type list is already
// known.  Per individual, in order: offspring outcome, then mark.  The root
// is the single exception: its mark is pinned to 0 without consuming a draw,
// so that the first urn draw happens at time exactly 0.
inline void populate_generation(GenerationRecord& g, const ReplacementLaw& law, Rng& rng,
                                bool is_root) {
    const int J = law.J;
    const std::size_t n = g.types.size();
    g.marks.resize(n);
    g.offspring.assign(n * static_cast<std::size_t>(J), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<std::int64_t>& out = sample_column(law, g.types[i], rng);
        for (int j = 0; j < J; ++j)
            g.offspring[i * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)] =
                out[static_cast<std::size_t>(j)];
        g.marks[i] = (is_root && i == 0) ? 0.0 : rng.uniform01();
    }
}

// Child types of a fully populated generation, grouped parent by parent and
// type by type within a parent.  The grouping is a determinism convention;
// no computed quantity depends on intra-generation order beyond mark ties.
inline GenerationRecord next_generation(const GenerationRecord& g, int J) {
    GenerationRecord h;
    h.depth = g.depth + 1;
    h.Z.assign(static_cast<std::size_t>(J), 0);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < g.types.size(); ++i)
        for (int j = 0; j < J; ++j) {
            const std::int64_t c = g.offspring[i * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
            h.Z[static_cast<std::size_t>(j)] += c;
            total += c;
        }
    h.types.reserve(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < g.types.size(); ++i)
        for (int j = 0; j < J; ++j) {
            const std::int64_t c = g.offspring[i * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
            for (std::int64_t r = 0; r < c; ++r) h.types.push_back(j);
        }
    return h;
}

}  // namespace detail

// Grow a tree with generation-complete records 0..depth.  Every recorded
// generation carries marks and offspring, so counts are evaluable on the
// whole recorded range.  Deterministic in (law, j0, depth, rng state).
inline Tree simulate_tree(const ReplacementLaw& law, int j0, int depth, Rng& rng,
                          std::int64_t budget = kDefaultTreeBudget) {
    if (j0 < 0 || j0 >= law.J) throw EmbeddingError("simulate_tree: j0 out of range");
    if (depth < 0) throw EmbeddingError("simulate_tree: negative depth");
    Tree t;
    t.J = law.J;
    t.j0 = j0;
    t.law_name = law.name;
    t.gens.reserve(static_cast<std::size_t>(depth) + 1);

    GenerationRecord root;
    root.depth = 0;
    root.Z.assign(static_cast<std::size_t>(law.J), 0);
    root.Z[static_cast<std::size_t>(j0)] = 1;
    root.types = {j0};
    detail::populate_generation(root, law, rng, /*is_root=*/true);
    t.individuals = 1;
    if (t.individuals > budget) throw BudgetExceeded(t.individuals);
    t.gens.push_back(std::move(root));

    for (int k = 0; k < depth; ++k) {
        GenerationRecord g = detail::next_generation(t.gens.back(), law.J);
        t.individuals += g.size();
        if (t.individuals > budget) throw BudgetExceeded(t.individuals);
        detail::populate_generation(g, law, rng, /*is_root=*/false);
        t.gens.push_back(std::move(g));
    }
    return t;
}

inline Tree simulate_tree(const ReplacementLaw& law, int j0, int depth, std::uint64_t seed,
                          std::int64_t budget = kDefaultTreeBudget) {
    Rng rng = Rng::for_replicate(seed, 0);
    Tree t = simulate_tree(law, j0, depth, rng, budget);
    t.seed = seed;
    return t;
}

// Grow until the recorded generations contain at least min_individuals (so
// tau_{min_individuals} exists), subject to a depth cap.  A supercritical
// surviving tree crosses n individuals within log_rho(n) + O(1) generations,
// so the cap only bites on extinct or freakishly slow trees; those surface
// as NotReached from the tau-based accessors.
inline Tree simulate_until(const ReplacementLaw& law, int j0, std::int64_t min_individuals,
                           double rho, Rng& rng, std::int64_t budget = kDefaultTreeBudget) {
    if (min_individuals < 1) throw EmbeddingError("simulate_until: need at least one individual");
    if (!(rho > 1.0)) throw EmbeddingError("simulate_until: requires rho > 1");
    const int cap = static_cast<int>(std::ceil(std::log(static_cast<double>(min_individuals)) /
                                               std::log(rho))) + 10;
    Tree t = simulate_tree(law, j0, 0, rng, budget);
    while (t.individuals < min_individuals && t.depth() < cap && t.gens.back().size() > 0) {
        GenerationRecord g = detail::next_generation(t.gens.back(), law.J);
        t.individuals += g.size();
        if (t.individuals > budget) throw BudgetExceeded(t.individuals);
        detail::populate_generation(g, law, rng, /*is_root=*/false);
        t.gens.push_back(std::move(g));
    }
    return t;
}

// Characteristic a*Phi^t_x + b*Phi^j_x.  The threshold x >= 0 selects the
// boundary generation floor(x) and the mark cutoff {x}.
struct CharacteristicSpec {
    double a = 0.0;
    double b = 0.0;
    int j = -1;  // type index, used iff b != 0
    double x = 0.0;

    static CharacteristicSpec total(double x) { return {1.0, 0.0, -1, x}; }
    static CharacteristicSpec type(int j, double x) { return {0.0, 1.0, j, x}; }
    static CharacteristicSpec combo(double a, double b, int j, double x) { return {a, b, j, x}; }
};

namespace detail {

inline void require_depth(const Tree& t, double x) {
    if (x < 0) throw EmbeddingError("count threshold must be nonnegative");
    const int need = static_cast<int>(std::floor(x)) + 2;
    if (t.depth() < need) throw InsufficientDepth(x, t.depth());
}

}  // namespace detail

// Zt(x): draws by time x — everything above the boundary generation, plus
// boundary individuals whose mark is <= {x}.
inline std::int64_t cmj_total(const Tree& t, double x) {
    detail::require_depth(t, x);
    const int n = static_cast<int>(std::floor(x));
    const double frac = x - n;
    std::int64_t count = 0;
    for (int k = 0; k < n; ++k) count += t.gens[static_cast<std::size_t>(k)].size();
    const GenerationRecord& g = t.gens[static_cast<std::size_t>(n)];
    for (double m : g.marks) count += (m <= frac) ? 1 : 0;
    return count;
}

// Zj(x): type-j balls added by time x — full offspring columns of
// generations 0..n-1 (these are Z_1..Z_n by type), plus the offspring of
// boundary individuals already drawn.
inline std::int64_t cmj_type(const Tree& t, int j, double x) {
    detail::require_depth(t, x);
    if (j < 0 || j >= t.J) throw EmbeddingError("cmj_type: type index out of range");
    const int n = static_cast<int>(std::floor(x));
    const double frac = x - n;
    std::int64_t count = 0;
    for (int k = 1; k <= n; ++k) count += t.gens[static_cast<std::size_t>(k)].Z[static_cast<std::size_t>(j)];
    const GenerationRecord& g = t.gens[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < g.marks.size(); ++i)
        if (g.marks[i] <= frac)
            count += g.offspring[i * static_cast<std::size_t>(t.J) + static_cast<std::size_t>(j)];
    return count;
}

inline double cmj_count(const Tree& t, const CharacteristicSpec& spec) {
    if (spec.a == 0.0 && spec.b == 0.0)
        throw EmbeddingError("cmj_count: degenerate characteristic (a, b) = (0, 0)");
    double value = 0.0;
    if (spec.a != 0.0) value += spec.a * static_cast<double>(cmj_total(t, spec.x));
    if (spec.b != 0.0) value += spec.b * static_cast<double>(cmj_type(t, spec.j, spec.x));
    return value;
}

namespace detail {

// Position of the k-th draw: its generation, its rank within that
// generation's marks (ties broken by individual index), the mark itself and
// the individual's index.  Throws NotReached when the recorded generations
// hold fewer than k individuals.
struct DrawPosition {
    int gen = 0;
    std::int64_t rank = 0;  // 1-based within the generation
    std::size_t index = 0;  // individual index within the generation
    double mark = 0.0;
};

inline DrawPosition locate_draw(const Tree& t, std::int64_t k) {
    if (k < 1) throw EmbeddingError("draw index must be >= 1");
    std::int64_t cum = 0;
    for (const GenerationRecord& g : t.gens) {
        if (cum + g.size() >= k) {
            DrawPosition p;
            p.gen = g.depth;
            p.rank = k - cum;
            std::vector<std::size_t> order(g.marks.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            auto cmp = [&g](std::size_t a, std::size_t b) {
                if (g.marks[a] != g.marks[b]) return g.marks[a] < g.marks[b];
                return a < b;
            };
            std::nth_element(order.begin(), order.begin() + (p.rank - 1), order.end(), cmp);
            p.index = order[static_cast<std::size_t>(p.rank - 1)];
            p.mark = g.marks[p.index];
            return p;
        }
        cum += g.size();
    }
    throw NotReached(k, cum);
}

}  // namespace detail

// tau_k: time of the k-th draw.  The root is drawn at time 0, so tau_1 = 0.
// gen + mark can round below the true jump location, which would break the
// generalized-inverse identity Zt(tau_k) = k when the count at tau_k then
// excludes the k-th mark itself; bump by one ulp whenever the recovered
// fractional part falls short of the mark.
inline double tau(const Tree& t, std::int64_t k) {
    const detail::DrawPosition p = detail::locate_draw(t, k);
    double s = static_cast<double>(p.gen) + p.mark;
    if (s - static_cast<double>(p.gen) < p.mark)
        s = std::nextafter(s, std::numeric_limits<double>::infinity());
    return s;
}

// All J ball counts after the k-th draw: delta_{j,j0} for the initial ball
// plus Zj(tau_k).  Computed from the draw position directly rather than
// through tau(), so the mark cutoff is exact (m + U rounds in floating
// point; the rank does not), and mark ties resolve by individual index
// exactly as in locate_draw.
inline std::vector<std::int64_t> B_vector_via_embedding(const Tree& t, std::int64_t k) {
    const detail::DrawPosition p = detail::locate_draw(t, k);
    std::vector<std::int64_t> B(static_cast<std::size_t>(t.J), 0);
    B[static_cast<std::size_t>(t.j0)] = 1;
    for (int g = 1; g <= p.gen; ++g)
        for (int j = 0; j < t.J; ++j)
            B[static_cast<std::size_t>(j)] += t.gens[static_cast<std::size_t>(g)].Z[static_cast<std::size_t>(j)];
    const GenerationRecord& g = t.gens[static_cast<std::size_t>(p.gen)];
    for (std::size_t i = 0; i < g.marks.size(); ++i) {
        const bool drawn = (g.marks[i] < p.mark) || (g.marks[i] == p.mark && i <= p.index);
        if (!drawn) continue;
        for (int j = 0; j < t.J; ++j)
            B[static_cast<std::size_t>(j)] += g.offspring[i * static_cast<std::size_t>(t.J) + static_cast<std::size_t>(j)];
    }
    return B;
}

inline std::int64_t B_via_embedding(const Tree& t, std::int64_t k, int j) {
    if (j < 0 || j >= t.J) throw EmbeddingError("B_via_embedding: type index out of range");
    return B_vector_via_embedding(t, k)[static_cast<std::size_t>(j)];
}

// --- martingale estimators at the deepest recorded generation -------------

namespace detail {

inline Vec deepest_Z(const Tree& t) {
    if (t.gens.empty()) throw EmbeddingError("estimator on an empty tree");
    const GenerationRecord& g = t.gens.back();
    Vec z(t.J);
    for (int j = 0; j < t.J; ++j) z(j) = static_cast<double>(g.Z[static_cast<std::size_t>(j)]);
    return z;
}

}  // namespace detail

// W-hat = rho^{-m} v . Z_m at the deepest generation m; nonnegative, and 0
// exactly on extinct trees.
inline double W_hat(const Tree& t, const SpectralData& sd) {
    const int m = t.depth();
    return std::pow(sd.rho, -m) * sd.v.dot(detail::deepest_Z(t));
}

// W^(1)-hat = A_1^{-m} pi^(1) Z_m.  A_1 acts as A on the sigma^1 eigenspace
// and as the identity elsewhere, so the inverse powers stay bounded.
inline Vec W1_hat(const Tree& t, const SpectralData& sd) {
    const int m = t.depth();
    Vec w = sd.pi1 * detail::deepest_Z(t);
    for (int i = 0; i < m; ++i) w = sd.A1_inv * w;
    return w;
}

// W_lambda-hat = v^lambda . lambda^{-m} pi_lambda Z_m for a simple eigenvalue.
inline Complex W_lambda_hat(const Tree& t, const SpectralData& sd, std::size_t comp_index) {
    if (comp_index >= sd.comps.size()) throw EmbeddingError("W_lambda_hat: component index out of range");
    const EigenComponent& c = sd.comps[comp_index];
    if (!c.simple) throw EmbeddingError("W_lambda_hat: estimator requires a simple eigenvalue");
    const int m = t.depth();
    const CVec proj = c.pi * detail::deepest_Z(t).cast<Complex>();
    // c.v is the algebraic left row vector (v * u = 1, no conjugation), so
    // apply it as a matrix product; dot() would conjugate it.
    return (c.v * (std::pow(c.lambda, -m) * proj)).value();
}

// Summary for file export: generation counts, survival, and W-hat when
// spectral data is supplied.  j0 is reported 1-based, matching file and CLI
// conventions.
inline nlohmann::json tree_summary(const Tree& t, const SpectralData* sd = nullptr) {
    nlohmann::json out;
    out["law"] = t.law_name;
    out["j0"] = t.j0 + 1;
    out["seed"] = t.seed;
    out["depth"] = t.depth();
    out["individuals"] = t.individuals;
    out["survived"] = t.survived();
    nlohmann::json zs = nlohmann::json::array();
    for (const GenerationRecord& g : t.gens) zs.push_back(g.Z);
    out["Z"] = zs;
    if (sd != nullptr) out["W_hat"] = W_hat(t, *sd);
    return out;
}

}  // namespace urnflow

#endif  // URNFLOW_EMBEDDING_HPP
