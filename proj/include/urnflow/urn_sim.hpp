#ifndef URNFLOW_URN_SIM_HPP
#define URNFLOW_URN_SIM_HPP

// Direct simulation of the two-alternating-urn process.  One step draws a
// ball uniformly from the active urn (categorical over per-type counts --
// within an urn balls of one type are exchangeable, so identity never
// matters), deposits an independent column sample into the other urn, and
// swaps the urns the moment the active one empties.  B tracks the total
// number of balls of each type ever added, including the initial ball, and
// freezes at extinction.

#include <cassert>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "urnflow/model.hpp"
#include "urnflow/rng.hpp"

namespace urnflow {

struct AlreadyExtinct : std::logic_error {
    AlreadyExtinct() : std::logic_error("step called on an extinct urn process") {}
};

struct UrnState {
    std::vector<std::int64_t> counts_active;
    std::vector<std::int64_t> counts_passive;
    bool active_is_u1 = true;
    std::vector<std::int64_t> B;
    std::int64_t draws = 0;
    std::optional<std::int64_t> extinct_at;
};

inline UrnState init(int J, int j0) {
    if (j0 < 0 || j0 >= J) throw std::invalid_argument("init: j0 out of range");
    UrnState s;
    s.counts_active.assign(static_cast<std::size_t>(J), 0);
    s.counts_passive.assign(static_cast<std::size_t>(J), 0);
    s.B.assign(static_cast<std::size_t>(J), 0);
    s.counts_active[static_cast<std::size_t>(j0)] = 1;
    s.B[static_cast<std::size_t>(j0)] = 1;
    return s;
}

// Balls remaining in both urns must equal balls added minus balls drawn.
inline bool conservation_holds(const UrnState& s) {
    std::int64_t remaining = 0, added = 0;
    for (std::size_t i = 0; i < s.B.size(); ++i) {
        remaining += s.counts_active[i] + s.counts_passive[i];
        added += s.B[i];
    }
    return remaining == added - s.draws;
}

inline void step(UrnState& s, const ReplacementLaw& law, Rng& rng) {
    if (s.extinct_at) throw AlreadyExtinct();
    std::int64_t total = 0;
    for (const std::int64_t c : s.counts_active) total += c;
    assert(total > 0);  // non-extinct state always has an active ball

    // integer-exact categorical draw proportional to counts
    std::int64_t pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
    int type = 0;
    for (;; ++type) {
        pick -= s.counts_active[static_cast<std::size_t>(type)];
        if (pick < 0) break;
    }

    --s.counts_active[static_cast<std::size_t>(type)];
    const auto& offspring = sample_column(law, type, rng);
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        s.counts_passive[i] += offspring[i];
        s.B[i] += offspring[i];
    }
    ++s.draws;

    std::int64_t active_left = 0, passive_left = 0;
    for (std::size_t i = 0; i < s.counts_active.size(); ++i) {
        active_left += s.counts_active[i];
        passive_left += s.counts_passive[i];
    }
    if (active_left == 0) {
        if (passive_left == 0) {
            s.extinct_at = s.draws;
        } else {
            std::swap(s.counts_active, s.counts_passive);
            s.active_is_u1 = !s.active_is_u1;
        }
    }
    assert(conservation_holds(s));
}

struct Trajectory {
    std::string law_name;
    int j0 = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> records;  // (n, B(n))
    UrnState final_state;
    bool survived = true;
};

// Geometric checkpoint grid n = ceil(rho^{k/2}), deduplicated, ending at n_steps.
inline std::vector<std::int64_t> geometric_checkpoints(double rho, std::int64_t n_steps) {
    std::vector<std::int64_t> pts = {0};
    for (int k = 0;; ++k) {
        const double v = std::pow(rho, static_cast<double>(k) / 2.0);
        if (v > static_cast<double>(n_steps)) break;
        const std::int64_t n = static_cast<std::int64_t>(std::ceil(v));
        if (n > 0 && (pts.empty() || n > pts.back())) pts.push_back(n);
        if (k > 4000) break;  // rho barely above 1: cap the grid
    }
    if (pts.empty() || pts.back() != n_steps) pts.push_back(n_steps);
    return pts;
}

inline Trajectory run(const ReplacementLaw& law, int j0, std::int64_t n_steps,
                      const std::vector<std::int64_t>& checkpoints, Rng& rng) {
    Trajectory t;
    t.law_name = law.name;
    t.j0 = j0;
    UrnState s = init(law.J, j0);
    std::vector<std::int64_t> marks = checkpoints;
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    std::size_t next_mark = 0;
    auto record_due = [&](std::int64_t n) {
        while (next_mark < marks.size() && marks[next_mark] <= n) {
            if (marks[next_mark] >= 0 && marks[next_mark] <= n_steps) t.records.emplace_back(marks[next_mark], s.B);
            ++next_mark;
        }
    };
    record_due(0);
    for (std::int64_t n = 1; n <= n_steps; ++n) {
        if (!s.extinct_at) step(s, law, rng);
        record_due(n);  // frozen B after extinction, per the freeze convention
    }
    t.final_state = s;
    t.survived = !s.extinct_at.has_value();
    return t;
}

inline Trajectory run(const ReplacementLaw& law, int j0, std::int64_t n_steps,
                      const std::vector<std::int64_t>& checkpoints, std::uint64_t seed) {
    Rng rng = Rng::for_replicate(seed, 0);
    Trajectory t = run(law, j0, n_steps, checkpoints, rng);
    t.seed = seed;
    return t;
}

}  // namespace urnflow

#endif
