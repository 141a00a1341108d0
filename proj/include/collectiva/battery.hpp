#pragma once

// A finite battery of recursive randomness tests. It stands in for
// Martin-Lof typicality; the universal test is not constructible and is not
// attempted. Tests are plugins: anything with a name, a minimum length and a
// p-value function can join the battery.

#include "collectiva/complexity.hpp"
#include "collectiva/core.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace collectiva::complexity {

struct TestResult {
    std::string name;
    bool skipped = false;
    double statistic = 0;
    std::optional<double> p_value;
    bool passed = false;
    std::string null_distribution;
};

struct RandomnessTest {
    std::string name;
    std::size_t min_length = 0;
    std::string null_distribution;
    std::function<std::pair<double, double>(BitView)> run;  // (statistic, p-value)
};

namespace detail {

inline double clamp01(double p) { return std::isnan(p) ? 0.0 : std::clamp(p, 0.0, 1.0); }

/// P(longest run of ones in m fair bits <= k) for k = 0..kmax, by dynamic
/// programming over the length of the trailing run.
inline std::vector<double> longest_run_cdf(std::size_t m, std::size_t kmax) {
    std::vector<double> cdf(kmax + 1);
    for (std::size_t k = 0; k <= kmax; ++k) {
        std::vector<double> p(k + 1, 0.0), q(k + 1);
        p[0] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            std::fill(q.begin(), q.end(), 0.0);
            for (std::size_t r = 0; r <= k; ++r) {
                q[0] += 0.5 * p[r];
                if (r + 1 <= k) q[r + 1] += 0.5 * p[r];
            }
            std::swap(p, q);
        }
        double s = 0;
        for (double v : p) s += v;
        cdf[k] = s;
    }
    return cdf;
}

}  // namespace detail

/// S = sum(2x - 1); p = erfc(|S| / sqrt(2n)).
inline RandomnessTest monobit_test() {
    return {"monobit", 100, "normal approximation to the binomial, p = erfc(|S|/sqrt(2n))", [](BitView x) {
                double s = 0;
                for (auto b : x) s += b ? 1.0 : -1.0;
                const double stat = std::abs(s) / std::sqrt(static_cast<double>(x.size()));
                return std::pair{stat, detail::clamp01(std::erfc(stat / std::sqrt(2.0)))};
            }};
}

/// chi2 = 4M sum (pi_i - 1/2)^2 over n/M blocks; p = Q(N/2, chi2/2).
inline RandomnessTest block_frequency_test(std::size_t m = 128) {
    if (m < 2) throw input_error("block size must be at least 2");
    return {"block_frequency", std::max<std::size_t>(100, m),
            "chi-square with N = floor(n/M) degrees of freedom, M = " + std::to_string(m), [m](BitView x) {
                const std::size_t blocks = x.size() / m;
                double chi2 = 0;
                for (std::size_t i = 0; i < blocks; ++i) {
                    std::size_t ones = 0;
                    for (std::size_t j = 0; j < m; ++j) ones += x[i * m + j];
                    const double d = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
                    chi2 += d * d;
                }
                chi2 *= 4.0 * static_cast<double>(m);
                return std::pair{chi2, detail::clamp01(boost::math::gamma_q(blocks / 2.0, chi2 / 2.0))};
            }};
}

/// Runs test with the frequency prerequisite |pi - 1/2| < 2/sqrt(n); a word
/// failing the prerequisite gets p = 0.
inline RandomnessTest runs_test() {
    return {"runs", 100, "normal approximation to the run count, p = erfc(|V - 2n pi(1-pi)| / (2 sqrt(2n) pi(1-pi)))",
            [](BitView x) {
                const double n = static_cast<double>(x.size());
                double ones = 0;
                for (auto b : x) ones += b;
                const double pi = ones / n;
                double v = 1;
                for (std::size_t i = 1; i < x.size(); ++i) v += x[i] != x[i - 1];
                if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return std::pair{v, 0.0};
                const double num = std::abs(v - 2.0 * n * pi * (1 - pi));
                const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1 - pi);
                return std::pair{v, detail::clamp01(std::erfc(num / den))};
            }};
}

/// Longest run of ones per block, binned into classes; block size and classes
/// follow the usual table (M = 8, 128 or 10^4 by word length). Class
/// probabilities are computed exactly rather than read from a table.
inline RandomnessTest longest_run_test() {
    return {"longest_run", 128, "chi-square over longest-run classes with exact class probabilities", [](BitView x) {
                std::size_t m, lo, hi;
                if (x.size() < 6272) m = 8, lo = 1, hi = 4;
                else if (x.size() < 750000) m = 128, lo = 4, hi = 9;
                else m = 10000, lo = 10, hi = 16;
                const std::size_t classes = hi - lo + 1;
                const auto cdf = detail::longest_run_cdf(m, hi);
                std::vector<double> pi(classes);
                pi[0] = cdf[lo];
                for (std::size_t c = 1; c + 1 < classes; ++c) pi[c] = cdf[lo + c] - cdf[lo + c - 1];
                pi[classes - 1] = 1.0 - cdf[hi - 1];

                const std::size_t blocks = x.size() / m;
                std::vector<double> counts(classes, 0);
                for (std::size_t i = 0; i < blocks; ++i) {
                    std::size_t run = 0, best = 0;
                    for (std::size_t j = 0; j < m; ++j) {
                        run = x[i * m + j] ? run + 1 : 0;
                        best = std::max(best, run);
                    }
                    counts[std::clamp(best, lo, hi) - lo] += 1;
                }
                double chi2 = 0;
                const double nb = static_cast<double>(blocks);
                for (std::size_t c = 0; c < classes; ++c) {
                    const double e = nb * pi[c];
                    chi2 += (counts[c] - e) * (counts[c] - e) / e;
                }
                return std::pair{chi2, detail::clamp01(boost::math::gamma_q((classes - 1) / 2.0, chi2 / 2.0))};
            }};
}

inline std::vector<RandomnessTest> default_battery(std::size_t block_size = 128) {
    return {monobit_test(), block_frequency_test(block_size), runs_test(), longest_run_test()};
}

struct BatteryReport {
    std::vector<TestResult> results;
    double significance = 0.01;
    bool passed = false;  // at least one test ran and none failed
};

inline BatteryReport run_battery(BitView x, const std::vector<RandomnessTest>& tests, double significance = 0.01) {
    if (!(significance > 0 && significance < 1)) throw input_error("significance must lie in (0,1)");
    BatteryReport rep;
    rep.significance = significance;
    bool any = false, failed = false;
    for (const auto& t : tests) {
        TestResult r;
        r.name = t.name;
        r.null_distribution = t.null_distribution;
        if (x.size() < t.min_length) {
            r.skipped = true;
        } else {
            auto [stat, p] = t.run(x);
            r.statistic = stat;
            r.p_value = p;
            r.passed = p >= significance;
            any = true;
            failed = failed || !r.passed;
        }
        rep.results.push_back(std::move(r));
    }
    rep.passed = any && !failed;
    return rep;
}

}  // namespace collectiva::complexity
