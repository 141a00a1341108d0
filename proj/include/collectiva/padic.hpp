#pragma once

// p-adic valuation, metric and digit expansion of rationals, and a finite
// stabilization test for rational sequences in Q_p next to the real one.

#include "collectiva/core.hpp"
#include "collectiva/number_theory.hpp"
#include "collectiva/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace collectiva::padic {

struct PAdicContext {
    explicit PAdicContext(std::uint64_t prime, std::size_t digits = 64) : p(prime), precision(digits) {
        if (!nt::is_prime(p)) throw input_error(std::to_string(p) + " is not prime");
        if (precision == 0) throw input_error("p-adic precision must be positive");
    }

    std::uint64_t p;
    std::size_t precision;  // digits kept in expansions
};

namespace detail {

inline long count_factor(BigInt& n, const BigInt& p) {
    long v = 0;
    while (n != 0 && n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

inline BigInt pow(const BigInt& base, std::size_t e) {
    BigInt r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= base;
    return r;
}

inline BigInt mod(const BigInt& a, const BigInt& m) {
    BigInt r = a % m;
    return r < 0 ? BigInt(r + m) : r;
}

/// Inverse of a modulo m by the extended Euclidean algorithm; gcd(a, m) = 1.
inline BigInt inverse_mod(const BigInt& a, const BigInt& m) {
    BigInt r0 = mod(a, m), r1 = m, s0 = 1, s1 = 0;
    while (r1 != 0) {
        const BigInt q = r0 / r1;
        r0 = std::exchange(r1, BigInt(r0 - q * r1));
        s0 = std::exchange(s1, BigInt(s0 - q * s1));
    }
    if (r0 != 1) throw integrity_error("no modular inverse");
    return mod(s0, m);
}

}  // namespace detail

/// v_p(q); nullopt stands for +infinity (q = 0).
inline std::optional<long> padic_valuation(const Rational& q, const PAdicContext& ctx) {
    if (q == 0) return std::nullopt;
    BigInt num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
    const BigInt p(ctx.p);
    return detail::count_factor(num, p) - detail::count_factor(den, p);
}

/// |q|_p = p^(-v_p(q)), exactly.
inline Rational padic_norm(const Rational& q, const PAdicContext& ctx) {
    auto v = padic_valuation(q, ctx);
    if (!v) return 0;
    const BigInt pk = detail::pow(BigInt(ctx.p), static_cast<std::size_t>(std::labs(*v)));
    return *v >= 0 ? Rational(BigInt(1), pk) : Rational(pk);
}

inline Rational padic_distance_exact(const Rational& a, const Rational& b, const PAdicContext& ctx) {
    return padic_norm(a - b, ctx);
}

inline double padic_distance(const Rational& a, const Rational& b, const PAdicContext& ctx) {
    auto v = padic_valuation(a - b, ctx);
    if (!v) return 0.0;
    return std::pow(static_cast<double>(ctx.p), -static_cast<double>(*v));
}

/// q = sum_{j >= k} a_j p^j, truncated to `digits.size()` digits starting at k.
struct PAdicExpansion {
    std::uint64_t p = 2;
    bool zero = false;
    long valuation = 0;                   // k
    std::vector<std::uint64_t> digits;    // a_k, a_{k+1}, ...

    /// sum_i digits[i] p^i, i.e. q p^(-k) reduced modulo p^digits.size().
    BigInt unit_residue() const {
        BigInt r = 0, pw = 1;
        for (auto d : digits) {
            r += pw * d;
            pw *= p;
        }
        return r;
    }
};

inline PAdicExpansion padic_expand(const Rational& q, const PAdicContext& ctx, std::optional<std::size_t> digits = {}) {
    const std::size_t n = digits.value_or(ctx.precision);
    PAdicExpansion e;
    e.p = ctx.p;
    if (q == 0) {
        e.zero = true;
        return e;
    }
    BigInt num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
    const BigInt p(ctx.p);
    e.valuation = detail::count_factor(num, p) - detail::count_factor(den, p);
    const BigInt m = detail::pow(p, n);
    BigInt x = detail::mod(num * detail::inverse_mod(den, m), m);
    e.digits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.digits.push_back(BigInt(x % p).convert_to<std::uint64_t>());
        x /= p;
    }
    return e;
}

/// True iff the expansion agrees with q modulo p^(k + digits).
inline bool expansion_matches(const PAdicExpansion& e, const Rational& q) {
    if (e.zero) return q == 0;
    const BigInt p(e.p);
    const BigInt m = detail::pow(p, e.digits.size());
    // q p^(-k) is a p-adic unit u / w; compare u * w^(-1) with the residue
    BigInt num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
    if (detail::count_factor(num, p) - detail::count_factor(den, p) != e.valuation) return false;
    return detail::mod(num - e.unit_residue() * den, m) == 0;
}

/// a / b with |a|, b <= sqrt(m / 2) and a = r b (mod m), if one exists.
inline std::optional<Rational> rational_reconstruction(const BigInt& r, const BigInt& m) {
    BigInt r0 = m, r1 = detail::mod(r, m), t0 = 0, t1 = 1;
    const BigInt bound = boost::multiprecision::sqrt(BigInt(m / 2));
    while (r1 > bound) {
        const BigInt q = r0 / r1;
        r0 = std::exchange(r1, BigInt(r0 - q * r1));
        t0 = std::exchange(t1, BigInt(t0 - q * t1));
    }
    if (t1 == 0 || boost::multiprecision::abs(t1) > bound) return std::nullopt;
    if (boost::multiprecision::gcd(r1, boost::multiprecision::abs(t1)) != 1) return std::nullopt;
    if (t1 < 0) {
        r1 = -r1;
        t1 = -t1;
    }
    return Rational(r1, t1);
}

// ---------------------------------------------------------------------------
// Stabilization in both metrics

struct RealVerdict {
    bool stabilized = false;
    Rational oscillation;  // max - min over the window
    Rational estimate;     // window mean
};

struct PAdicVerdict {
    bool stabilized = false;
    long precision_m = 0;                 // eps = p^(-m)
    std::optional<long> min_valuation;    // of differences to the last element; nullopt: all equal
    double diameter = 0;                  // p^(-min_valuation)
    std::optional<PAdicExpansion> estimate;       // last element, truncated mod p^m
    std::optional<Rational> reconstructed_limit;  // small rational with that residue, if any
};

enum class Outcome { both, real_only, padic_only, neither };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::both: return "both";
        case Outcome::real_only: return "real-only";
        case Outcome::padic_only: return "p-adic-only";
        default: return "neither";
    }
}

struct ConvergenceReport {
    std::size_t length = 0;
    std::size_t window = 0;
    RealVerdict real;
    PAdicVerdict padic;
    Outcome outcome = Outcome::neither;
};

/// m with p^(-m) <= eps, the coarsest p-adic precision meeting eps.
inline long precision_for(double eps, const PAdicContext& ctx) {
    if (!(eps > 0)) throw input_error("p-adic tolerance must be positive");
    return static_cast<long>(std::ceil(-std::log(eps) / std::log(static_cast<double>(ctx.p)) - 1e-9));
}

/// Stabilized iff the p-adic diameter of the last W elements is <= p^(-m).
/// In an ultrametric space the diameter equals the largest distance to any
/// one member, so only distances to the last element are computed.
inline PAdicVerdict detect_padic_stabilization(const std::vector<Rational>& seq, const PAdicContext& ctx,
                                               std::size_t window, long m) {
    if (window < 1 || seq.size() <= window) throw input_error("sequence must be longer than the window");
    PAdicVerdict v;
    v.precision_m = m;
    const Rational& last = seq.back();
    for (std::size_t i = seq.size() - window; i + 1 < seq.size(); ++i) {
        auto val = padic_valuation(seq[i] - last, ctx);
        if (val && (!v.min_valuation || *val < *v.min_valuation)) v.min_valuation = val;
    }
    v.diameter = v.min_valuation ? std::pow(static_cast<double>(ctx.p), -static_cast<double>(*v.min_valuation)) : 0.0;
    v.stabilized = !v.min_valuation || *v.min_valuation >= m;
    if (v.stabilized) {
        // digits a_k .. a_{m-1}: everything the window agrees on
        auto lv = padic_valuation(last, ctx);
        if (!lv) {
            v.estimate = padic_expand(last, ctx, 0);
        } else {
            const long count = std::max<long>(0, m - *lv);
            v.estimate = padic_expand(last, ctx, static_cast<std::size_t>(count));
            if (*lv >= 0 && m > 0) {
                const BigInt mod = detail::pow(BigInt(ctx.p), static_cast<std::size_t>(m));
                const BigInt num = boost::multiprecision::numerator(last), den = boost::multiprecision::denominator(last);
                v.reconstructed_limit =
                    rational_reconstruction(detail::mod(num * detail::inverse_mod(den, mod), mod), mod);
            }
        }
    }
    return v;
}

namespace detail {
// Pairwise summation: the denominators of long frequency runs grow like
// lcm(N..N+W), so a left fold would reduce huge fractions W times.
inline Rational exact_sum(const Rational* first, std::size_t count) {
    if (count == 0) return 0;
    if (count == 1) return *first;
    const std::size_t half = count / 2;
    return exact_sum(first, half) + exact_sum(first + half, count - half);
}
}  // namespace detail

inline RealVerdict detect_real_stabilization(const std::vector<Rational>& seq, std::size_t window, double eps) {
    if (window < 1 || seq.size() <= window) throw input_error("sequence must be longer than the window");
    RealVerdict v;
    const std::size_t start = seq.size() - window;
    const auto [lo, hi] = std::minmax_element(seq.begin() + static_cast<std::ptrdiff_t>(start), seq.end());
    v.oscillation = *hi - *lo;
    v.estimate = detail::exact_sum(seq.data() + start, window) / static_cast<long>(window);
    v.stabilized = v.oscillation <= Rational(eps);
    return v;
}

inline ConvergenceReport compare_convergence(const std::vector<Rational>& seq, const PAdicContext& ctx, std::size_t window,
                                             double eps_real, long m) {
    ConvergenceReport r;
    r.length = seq.size();
    r.window = window;
    r.real = detect_real_stabilization(seq, window, eps_real);
    r.padic = detect_padic_stabilization(seq, ctx, window, m);
    if (r.real.stabilized) r.outcome = r.padic.stabilized ? Outcome::both : Outcome::real_only;
    else r.outcome = r.padic.stabilized ? Outcome::padic_only : Outcome::neither;
    return r;
}

// ---------------------------------------------------------------------------
// Frequency paths

struct Checkpoint {
    std::uint64_t n_total;  // N_k
    std::uint64_t n_hits;   // n_k
};

/// A sequence over {A, not-A} whose A-count is exactly n_k after N_k trials.
/// Within each gap the A's come first.
inline TrialSequence frequency_path_realizer(const std::vector<Checkpoint>& cps, std::size_t max_length = 1ULL << 28) {
    std::vector<Label> out;
    std::uint64_t big_n = 0, small_n = 0;
    for (std::size_t k = 0; k < cps.size(); ++k) {
        const auto& c = cps[k];
        const std::string at = "checkpoint " + std::to_string(k + 1) + " (" + std::to_string(c.n_total) + ", " +
                               std::to_string(c.n_hits) + ")";
        if (c.n_total <= big_n) throw input_error(at + ": N must increase strictly");
        if (c.n_hits < small_n) throw input_error(at + ": n must not decrease");
        if (c.n_hits > c.n_total) throw input_error(at + ": n exceeds N");
        if (c.n_hits - small_n > c.n_total - big_n)
            throw input_error(at + ": needs " + std::to_string(c.n_hits - small_n) + " hits in a gap of " +
                              std::to_string(c.n_total - big_n));
        if (c.n_total > max_length) throw capacity_error(at + ": sequence longer than the configured limit");
        out.insert(out.end(), c.n_hits - small_n, 0);
        out.insert(out.end(), (c.n_total - big_n) - (c.n_hits - small_n), 1);
        big_n = c.n_total;
        small_n = c.n_hits;
    }
    return TrialSequence(LabelAlphabet({"A", "not-A"}), std::move(out));
}

/// nu_N(label) at each checkpoint N.
inline std::vector<Rational> frequency_trace(const TrialSequence& x, Label label, const std::vector<std::uint64_t>& at) {
    std::vector<Rational> out;
    std::uint64_t count = 0;
    std::size_t i = 0;
    for (auto n : at) {
        if (n == 0 || n > x.size()) throw input_error("checkpoint outside the sequence");
        if (n < i) throw input_error("checkpoints must be increasing");
        for (; i < n; ++i) count += x[i] == label;
        out.emplace_back(count, n);
    }
    return out;
}

/// nu_N for the last `count` values of N, ending at N = |x|.
inline std::vector<Rational> frequency_tail(const TrialSequence& x, Label label, std::size_t count) {
    if (count > x.size()) throw input_error("tail longer than the sequence");
    std::uint64_t hits = 0;
    const std::size_t start = x.size() - count;
    for (std::size_t i = 0; i < start; ++i) hits += x[i] == label;
    std::vector<Rational> out;
    for (std::size_t i = start; i < x.size(); ++i) {
        hits += x[i] == label;
        out.emplace_back(hits, i + 1);
    }
    return out;
}

}  // namespace collectiva::padic
