#ifndef URNFLOW_STATS_HPP
#define URNFLOW_STATS_HPP

// Statistical tests used by the experiment harness: one-sample
// Kolmogorov-Smirnov and Anderson-Darling against a fully specified reference
// (standard normal by default), and chi-square goodness-of-fit/homogeneity
// with the usual small-expectation pooling.  Everything is self-contained so
// verdicts are identical across platforms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace urnflow {

struct StatsError : std::runtime_error {
    explicit StatsError(const std::string& what) : std::runtime_error(what) {}
};

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;  // chi-square only
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Survival function of the Kolmogorov distribution, P(K > t).  The alternating
// series converges fast for large t; the theta-series form is used below
// t = 1.18 where the alternating series needs many terms.
inline double kolmogorov_p(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 1.18) {
        const double f = std::exp(-3.14159265358979323846 * 3.14159265358979323846 / (8.0 * t * t));
        double sum = 0.0;
        for (int k = 1; k <= 19; k += 2) sum += std::pow(f, k * k);
        return 1.0 - std::sqrt(2.0 * 3.14159265358979323846) / t * sum;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::max(0.0, std::min(1.0, 2.0 * sum));
}

// One-sample KS test against a continuous reference CDF.
inline TestResult ks_test(std::vector<double> sample,
                          const std::function<double(double)>& cdf = normal_cdf) {
    const std::size_t n = sample.size();
    if (n < 20) throw StatsError("SampleTooSmall: KS test needs at least 20 observations");
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = cdf(sample[i]);
        d = std::max(d, static_cast<double>(i + 1) / n - F);
        d = std::max(d, F - static_cast<double>(i) / n);
    }
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;  // Stephens' finite-n adjustment
    TestResult r;
    r.statistic = d;
    r.p_value = kolmogorov_p(t);
    return r;
}

// Asymptotic CDF of the case-0 Anderson-Darling statistic (fully specified
// null), polynomial approximation good to a few units in the sixth digit.
inline double ad_cdf(double z) {
    if (z <= 0.0) return 0.0;
    if (z < 2.0)
        return std::exp(-1.2337141 / z) / std::sqrt(z) *
               (2.00012 +
                (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z);
    return std::exp(
        -std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z));
}

inline TestResult ad_test(std::vector<double> sample,
                          const std::function<double(double)>& cdf = normal_cdf) {
    const std::size_t n = sample.size();
    if (n < 20) throw StatsError("SampleTooSmall: AD test needs at least 20 observations");
    std::sort(sample.begin(), sample.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = cdf(sample[i]);
        double hi = cdf(sample[n - 1 - i]);
        lo = std::min(std::max(lo, 1e-300), 1.0 - 1e-16);
        hi = std::min(std::max(hi, 1e-300), 1.0 - 1e-16);
        acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
    }
    TestResult r;
    r.statistic = -static_cast<double>(n) - acc / static_cast<double>(n);
    r.p_value = 1.0 - ad_cdf(r.statistic);
    return r;
}

// Regularized upper incomplete gamma Q(a,x): series for x < a+1, continued
// fraction otherwise.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw StatsError("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        // P(a,x) by series, return 1 - P
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    // Lentz continued fraction for Q
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double chi_square_p(double stat, int df) {
    if (df < 1) throw StatsError("chi_square_p: df < 1");
    return gamma_q(static_cast<double>(df) / 2.0, stat / 2.0);
}

// Goodness of fit of observed counts against expected counts.  Cells with
// expectation below min_expected are pooled (smallest first) into a single
// bucket so the chi-square approximation stays honest.
inline TestResult chi_square_gof(const std::vector<double>& observed,
                                 const std::vector<double>& expected,
                                 double min_expected = 5.0) {
    if (observed.size() != expected.size() || observed.empty())
        throw StatsError("chi_square_gof: size mismatch");
    std::vector<std::size_t> order(observed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return expected[a] < expected[b]; });
    std::vector<double> obs, exp;
    double pool_o = 0.0, pool_e = 0.0;
    for (const std::size_t i : order) {
        if (pool_e < min_expected) {
            pool_o += observed[i];
            pool_e += expected[i];
        } else {
            obs.push_back(observed[i]);
            exp.push_back(expected[i]);
        }
    }
    obs.push_back(pool_o);
    exp.push_back(pool_e);
    if (obs.size() < 2) {
        // single-point support: nothing to compare, trivially consistent
        TestResult r;
        r.statistic = 0.0;
        r.df = 0;
        r.p_value = 1.0;
        return r;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double diff = obs[i] - exp[i];
        stat += diff * diff / exp[i];
    }
    TestResult r;
    r.statistic = stat;
    r.df = static_cast<int>(obs.size()) - 1;
    r.p_value = chi_square_p(stat, r.df);
    return r;
}

// Two-sample homogeneity over a common support (2 x k table).
inline TestResult chi_square_homogeneity(const std::vector<double>& a, const std::vector<double>& b,
                                         double min_expected = 5.0) {
    if (a.size() != b.size() || a.empty()) throw StatsError("chi_square_homogeneity: size mismatch");
    const double na = std::accumulate(a.begin(), a.end(), 0.0);
    const double nb = std::accumulate(b.begin(), b.end(), 0.0);
    if (na <= 0.0 || nb <= 0.0) throw StatsError("chi_square_homogeneity: empty sample");
    // pool columns whose total is too small for the expected-count rule
    std::vector<std::size_t> order(a.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x] + b[x] < a[y] + b[y]; });
    const double total = na + nb;
    const double min_col = min_expected * total / std::min(na, nb);  // column total making min expected >= rule
    std::vector<double> ca, cb;
    double pa = 0.0, pb = 0.0;
    for (const std::size_t i : order) {
        if (pa + pb < min_col) {
            pa += a[i];
            pb += b[i];
        } else {
            ca.push_back(a[i]);
            cb.push_back(b[i]);
        }
    }
    if (pa + pb > 0.0) {
        ca.push_back(pa);
        cb.push_back(pb);
    }
    if (ca.size() < 2) {
        // single column after pooling: no information to test against
        TestResult r;
        r.statistic = 0.0;
        r.df = 0;
        r.p_value = 1.0;
        return r;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const double col = ca[i] + cb[i];
        const double ea = col * na / total;
        const double eb = col * nb / total;
        stat += (ca[i] - ea) * (ca[i] - ea) / ea + (cb[i] - eb) * (cb[i] - eb) / eb;
    }
    TestResult r;
    r.statistic = stat;
    r.df = static_cast<int>(ca.size()) - 1;
    r.p_value = chi_square_p(stat, r.df);
    return r;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw StatsError("median of empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = (m + lo) / 2.0;
    }
    return m;
}

inline double sample_mean(const std::vector<double>& v) {
    if (v.empty()) throw StatsError("mean of empty sample");
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw StatsError("variance needs 2 observations");
    const double m = sample_mean(v);
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace urnflow

#endif
