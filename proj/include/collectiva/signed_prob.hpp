#pragma once

// Finite signed probability spaces: weights of any sign summing to 1.
// There is no event algebra restriction; every subset is an event.

#include "collectiva/core.hpp"
#include "collectiva/finite_prob.hpp"
#include "collectiva/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace collectiva::signed_prob {

using finite::Event;
using finite::SampleSpace;

template <Scalar T>
struct JordanDecomposition {
    std::vector<T> positive;  // P+, nonnegative
    std::vector<T> negative;  // P-, nonnegative
};

template <Scalar T>
struct SignedDiagnostics {
    T total;
    T total_variation;  // sum |w|
    std::vector<std::size_t> negative_atoms;
};

template <Scalar T>
struct SignedConditional {
    T value;
    bool negative_condition = false;  // P(C) < 0: allowed, flagged
};

template <Scalar T>
class SignedProbabilitySpace {
public:
    SignedProbabilitySpace(SampleSpace space, std::vector<T> weights) : space_(std::move(space)), w_(std::move(weights)) {
        if (w_.size() != space_.size()) throw input_error("one weight per atom required");
        T s = 0;
        for (const auto& v : w_) s += v;
        if (!scalar_traits<T>::equal(s, T(1)))
            throw normalization_error("signed weights sum to " + show(s) + ", not 1");
        if constexpr (std::is_same_v<T, Rational>) {
            // integer numerators over a common denominator make event sums gcd-free
            denom_ = 1;
            for (const auto& v : w_) {
                const BigInt& d = boost::multiprecision::denominator(v);
                denom_ = denom_ / boost::multiprecision::gcd(denom_, d) * d;
            }
            for (const auto& v : w_) numer_.push_back(boost::multiprecision::numerator(Rational(v * Rational(denom_))));
        }
    }

    const SampleSpace& sample_space() const { return space_; }
    const std::vector<T>& weights() const { return w_; }
    std::size_t size() const { return w_.size(); }

    T probability(Event e) const {
        if (!space_.owns(e)) throw input_error("event outside the sample space");
        if constexpr (std::is_same_v<T, Rational>) {
            BigInt acc = 0;
            for (std::size_t i = 0; i < w_.size(); ++i)
                if (e.contains(i)) acc += numer_[i];
            return Rational(acc, denom_);
        }
        T s = 0;
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (e.contains(i)) s += w_[i];
        return s;
    }

    SignedDiagnostics<T> validate() const {
        SignedDiagnostics<T> d{T(0), T(0), {}};
        for (std::size_t i = 0; i < w_.size(); ++i) {
            d.total += w_[i];
            d.total_variation += w_[i] < 0 ? T(-w_[i]) : w_[i];
            if (w_[i] < 0 && !scalar_traits<T>::is_zero(w_[i])) d.negative_atoms.push_back(i);
        }
        return d;
    }

    JordanDecomposition<T> jordan() const {
        JordanDecomposition<T> j;
        for (const auto& v : w_) {
            j.positive.push_back(v > 0 ? v : T(0));
            j.negative.push_back(v < 0 ? T(-v) : T(0));
        }
        return j;
    }

    /// (P(A), P(complement of A)). A negative P(A) forces the complement above 1.
    std::pair<T, T> complement_excess(Event a) const {
        const T pa = probability(a);
        const T pc = probability(space_.complement(a));
        if (!scalar_traits<T>::equal(pa + pc, T(1))) throw integrity_error("P(A) + P(not A) != 1");
        if (pa < 0 && !(pc > 1)) throw integrity_error("negative P(A) without P(not A) > 1");
        return {pa, pc};
    }

    /// Bayes quotient P(B & C) / P(C). Negative P(C) is allowed and flagged.
    SignedConditional<T> conditional(Event b, Event c) const {
        const T pc = probability(c);
        if (scalar_traits<T>::is_zero(pc)) throw conditioning_error("conditioning on an event of signed probability 0");
        return {probability(b & c) / pc, pc < 0};
    }

    /// sum a(w) P(w), cross-checked against E_{P+}[a] - E_{P-}[a].
    T expectation(const std::vector<T>& a) const {
        if (a.size() != w_.size()) throw input_error("variable must assign a value to every atom");
        T direct = 0, pos = 0, neg = 0;
        const auto j = jordan();
        for (std::size_t i = 0; i < w_.size(); ++i) {
            direct += a[i] * w_[i];
            pos += a[i] * j.positive[i];
            neg += a[i] * j.negative[i];
        }
        if (!scalar_traits<T>::equal(direct, pos - neg)) throw integrity_error("Jordan expectation mismatch");
        return direct;
    }

    bool independent(Event a, Event b) const {
        return scalar_traits<T>::equal(probability(a & b), probability(a) * probability(b));
    }

    /// Product space; atom (i, j) is named "x*y" and sits at index i * other.size() + j.
    SignedProbabilitySpace product(const SignedProbabilitySpace& other) const {
        if (size() * other.size() > finite::max_atoms)
            throw capacity_error("product space exceeds the atom limit");
        std::vector<std::string> names;
        std::vector<T> w;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < other.size(); ++j) {
                names.push_back(space_.atoms()[i] + "*" + other.space_.atoms()[j]);
                w.push_back(w_[i] * other.w_[j]);
            }
        return SignedProbabilitySpace(SampleSpace(std::move(names)), std::move(w));
    }

    /// Cylinder {(x, y) : x in a} in this.product(other).
    Event left_cylinder(Event a, std::size_t other_size) const {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < size(); ++i)
            if (a.contains(i))
                for (std::size_t j = 0; j < other_size; ++j) m |= std::uint64_t{1} << (i * other_size + j);
        return Event(m);
    }

    Event right_cylinder(Event b, std::size_t other_size) const {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < other_size; ++j)
                if (b.contains(j)) m |= std::uint64_t{1} << (i * other_size + j);
        return Event(m);
    }

private:
    static std::string show(const T& v) {
        if constexpr (std::is_same_v<T, Rational>) return to_string(v);
        else return std::to_string(v);
    }

    SampleSpace space_;
    std::vector<T> w_;
    BigInt denom_;
    std::vector<BigInt> numer_;
};

// ---------------------------------------------------------------------------
// Exact distribution of the sample mean eta_N

inline constexpr std::size_t default_support_cap = 1'000'000;

/// Signed pmf of eta_N = (xi_1 + ... + xi_N) / N for iid xi with the law of a.
struct SumDistribution {
    std::size_t n = 0;
    std::vector<Rational> values;  // increasing
    std::vector<Rational> masses;

    Rational total_mass() const {
        Rational s = 0;
        for (const auto& m : masses) s += m;
        return s;
    }

    Rational total_variation() const {
        Rational s = 0;
        for (const auto& m : masses) s += abs(m);
        return s;
    }
};

namespace detail {

inline BigInt lcm(const BigInt& a, const BigInt& b) { return a / boost::multiprecision::gcd(a, b) * b; }

/// The law of a with values scaled by L and weights by D, both integral,
/// stored densely from the lowest scaled value.
struct IntegerLaw {
    BigInt lo;
    std::vector<BigInt> mass;  // mass[k] / D is the weight of value (lo + k) / L
    BigInt scale;              // L
    BigInt denom;              // D
};

inline IntegerLaw integer_law(const SignedProbabilitySpace<Rational>& space, const std::vector<Rational>& a,
                              std::size_t cap) {
    if (a.size() != space.size()) throw input_error("variable must assign a value to every atom");
    BigInt l = 1, d = 1;
    for (const auto& v : a) l = lcm(l, boost::multiprecision::denominator(v));
    for (const auto& w : space.weights()) d = lcm(d, boost::multiprecision::denominator(w));
    BigInt lo = 0, hi = 0;
    bool first = true;
    std::vector<BigInt> iv;
    for (const auto& v : a) {
        BigInt k = boost::multiprecision::numerator(Rational(v * Rational(l)));
        if (first || k < lo) lo = k;
        if (first || k > hi) hi = k;
        first = false;
        iv.push_back(k);
    }
    const BigInt width = hi - lo + 1;
    if (width > cap) throw capacity_error("variable range exceeds the support cap");
    IntegerLaw law{lo, std::vector<BigInt>(width.convert_to<std::size_t>(), 0), l, d};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto k = BigInt(iv[i] - lo).convert_to<std::size_t>();
        law.mass[k] += boost::multiprecision::numerator(Rational(space.weights()[i] * Rational(d)));
    }
    return law;
}

}  // namespace detail

/// Exact N-fold signed convolution. Intermediate masses are kept as integer
/// numerators over D^N so no gcd is taken until the end.
class SumConvolver {
public:
    SumConvolver(const SignedProbabilitySpace<Rational>& space, const std::vector<Rational>& a,
                 std::size_t cap = default_support_cap)
        : law_(detail::integer_law(space, a, cap)), cap_(cap), cur_{1}, denom_(1) {}

    std::size_t steps() const { return n_; }

    void step() {
        const std::size_t next_size = cur_.size() + law_.mass.size() - 1;
        if (next_size > cap_) throw capacity_error("sum distribution support exceeds " + std::to_string(cap_) + " points");
        std::vector<BigInt> next(next_size, 0);
        for (std::size_t i = 0; i < cur_.size(); ++i) {
            if (cur_[i] == 0) continue;
            for (std::size_t k = 0; k < law_.mass.size(); ++k)
                if (law_.mass[k] != 0) next[i + k] += cur_[i] * law_.mass[k];
        }
        cur_ = std::move(next);
        denom_ *= law_.denom;
        ++n_;
    }

    SumDistribution distribution() const {
        if (n_ == 0) throw input_error("sum distribution needs N >= 1");
        SumDistribution d;
        d.n = n_;
        const BigInt base = law_.lo * n_;
        const Rational value_den = Rational(law_.scale) * static_cast<long>(n_);
        for (std::size_t i = 0; i < cur_.size(); ++i) {
            if (cur_[i] == 0) continue;
            d.values.push_back(Rational(BigInt(base + i)) / value_den);
            d.masses.push_back(Rational(cur_[i], denom_));
        }
        return d;
    }

private:
    detail::IntegerLaw law_;
    std::size_t cap_;
    std::vector<BigInt> cur_;  // numerators over denom_, offset by lo * n
    BigInt denom_;
    std::size_t n_ = 0;
};

inline SumDistribution sum_distribution(const SignedProbabilitySpace<Rational>& space, const std::vector<Rational>& a,
                                        std::size_t n, std::size_t cap = default_support_cap) {
    if (n < 1) throw input_error("sum distribution needs N >= 1");
    SumConvolver conv(space, a, cap);
    for (std::size_t i = 0; i < n; ++i) conv.step();
    return conv.distribution();
}

// ---------------------------------------------------------------------------
// Weak law of large numbers

/// Supported test functions: polynomials (evaluated exactly) and bounded C2
/// functions (evaluated in double). Anything else is at the caller's risk.
struct TestFunction {
    std::string name;
    std::vector<Rational> coefficients;  // polynomial c0 + c1 x + ...; empty for C2
    std::function<double(double)> smooth;
    bool supported = true;

    bool polynomial() const { return !smooth; }

    Rational exact(const Rational& x) const {
        Rational r = 0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) r = r * x + *it;
        return r;
    }

    double operator()(double x) const {
        if (smooth) return smooth(x);
        double r = 0;
        for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) r = r * x + it->convert_to<double>();
        return r;
    }
};

inline TestFunction monomial(unsigned k) {
    std::vector<Rational> c(k + 1, 0);
    c[k] = 1;
    return {k == 1 ? "x" : "x^" + std::to_string(k), std::move(c), nullptr, true};
}

inline TestFunction polynomial(std::vector<Rational> coefficients, std::string name = "poly") {
    if (coefficients.empty()) throw input_error("polynomial needs at least one coefficient");
    return {std::move(name), std::move(coefficients), nullptr, true};
}

inline TestFunction gaussian_bump() {
    return {"gauss", {}, [](double x) { return std::exp(-x * x); }, true};
}

inline TestFunction logistic() {
    return {"logistic", {}, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, true};
}

/// 1{|x - center| < radius}: not smooth; used to show the strong law failing.
inline TestFunction neighbourhood_indicator(double center, double radius) {
    return {"indicator", {}, [center, radius](double x) { return std::abs(x - center) < radius ? 1.0 : 0.0; }, false};
}

inline TestFunction make_test_function(const std::string& spec) {
    if (spec == "x") return monomial(1);
    if (spec.size() == 3 && spec.rfind("x^", 0) == 0 && spec[2] >= '1' && spec[2] <= '4') return monomial(spec[2] - '0');
    if (spec == "gauss") return gaussian_bump();
    if (spec == "logistic") return logistic();
    if (spec.rfind("poly:", 0) == 0) {
        std::vector<Rational> c;
        std::string rest = spec.substr(5);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            auto comma = rest.find(',', pos);
            if (comma == std::string::npos) comma = rest.size();
            c.push_back(parse_rational(rest.substr(pos, comma - pos)));
            pos = comma + 1;
        }
        return polynomial(std::move(c), spec);
    }
    throw input_error("unknown test function '" + spec + "' (available: x, x^2, x^3, x^4, poly:c0,c1,..., gauss, logistic)");
}

struct ConvergenceRow {
    std::size_t n = 0;
    std::optional<Rational> expected_exact;  // E f(eta_N), polynomials only
    std::optional<Rational> error_exact;     // |E f(eta_N) - f(m)|
    double expected = 0;
    double error = 0;
    Rational total_variation;  // sum |mass| of eta_N
    Rational total_mass;       // sum mass of eta_N
};

struct ConvergenceTable {
    std::string function;
    Rational mean;  // m
    std::vector<ConvergenceRow> rows;
    bool decreasing = false;  // error non-increasing over the schedule
    std::vector<std::string> warnings;
};

/// E f(eta_N) against f(m) for each N of the schedule, by exact convolution.
inline ConvergenceTable weak_lln_check(const SignedProbabilitySpace<Rational>& space, const std::vector<Rational>& a,
                                       const TestFunction& f, std::vector<std::size_t> schedule,
                                       std::size_t cap = default_support_cap) {
    if (schedule.empty()) throw input_error("empty N schedule");
    std::sort(schedule.begin(), schedule.end());
    schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
    if (schedule.front() < 1) throw input_error("N must be at least 1");
    ConvergenceTable t;
    t.function = f.name;
    t.mean = space.expectation(a);
    if (!f.supported)
        t.warnings.push_back("test function '" + f.name + "' is outside the supported smooth class; convergence is not expected");
    const Rational fm_exact = f.polynomial() ? f.exact(t.mean) : Rational(0);
    const double fm = f(t.mean.convert_to<double>());

    SumConvolver conv(space, a, cap);
    for (auto n : schedule) {
        while (conv.steps() < n) conv.step();
        const auto d = conv.distribution();
        ConvergenceRow row;
        row.n = n;
        row.total_variation = d.total_variation();
        row.total_mass = d.total_mass();
        if (f.polynomial()) {
            Rational e = 0;
            for (std::size_t i = 0; i < d.values.size(); ++i) e += f.exact(d.values[i]) * d.masses[i];
            row.expected_exact = e;
            row.error_exact = abs(e - fm_exact);
            row.expected = e.convert_to<double>();
            row.error = row.error_exact->convert_to<double>();
        } else {
            double e = 0;
            for (std::size_t i = 0; i < d.values.size(); ++i)
                e += f(d.values[i].convert_to<double>()) * d.masses[i].convert_to<double>();
            row.expected = e;
            row.error = std::abs(e - fm);
        }
        t.rows.push_back(std::move(row));
    }
    t.decreasing = true;
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        const bool up = t.rows[i].error_exact ? *t.rows[i].error_exact > *t.rows[i - 1].error_exact
                                              : t.rows[i].error > t.rows[i - 1].error;
        if (up) t.decreasing = false;
    }
    return t;
}

/// Sign-carrying importance estimate of E f(eta_N): draw atoms from |w| / TV
/// and weight each sample by the product of signs times TV^N. This is an
/// estimator with variance growing like TV^(2N), offered for comparison only.
inline double jordan_importance_estimate(const SignedProbabilitySpace<Rational>& space, const std::vector<Rational>& a,
                                         const TestFunction& f, std::size_t n, std::size_t samples, std::uint64_t seed) {
    const auto diag = space.validate();
    const double tv = diag.total_variation.convert_to<double>();
    std::vector<double> cdf;
    double acc = 0;
    for (const auto& w : space.weights()) {
        acc += std::abs(w.convert_to<double>()) / tv;
        cdf.push_back(acc);
    }
    Rng rng(seed);
    const double scale = std::pow(tv, static_cast<double>(n));
    double total = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double sum = 0, sign = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform();
            const auto atom = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            const auto k = std::min(atom, cdf.size() - 1);
            sum += a[k].convert_to<double>();
            if (space.weights()[k] < 0) sign = -sign;
        }
        total += sign * scale * f(sum / static_cast<double>(n));
    }
    return total / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Bundled example spaces

struct BundledSignedSpace {
    std::string name;
    SignedProbabilitySpace<Rational> space;
    std::vector<Rational> variable;
};

inline std::vector<BundledSignedSpace> bundled_signed_spaces() {
    std::vector<BundledSignedSpace> out;
    auto add = [&](std::string name, std::vector<std::string> atoms, std::vector<Rational> w, std::vector<Rational> a) {
        out.push_back({std::move(name), SignedProbabilitySpace<Rational>(SampleSpace(std::move(atoms)), std::move(w)),
                       std::move(a)});
    };
    add("three-atom", {"w1", "w2", "w3"}, {Rational(-1, 2), Rational(3, 4), Rational(3, 4)}, {0, 1, 2});
    add("signed-coin", {"0", "1"}, {Rational(-1, 2), Rational(3, 2)}, {0, 1});
    add("fair-die", {"1", "2", "3", "4", "5", "6"}, std::vector<Rational>(6, Rational(1, 6)), {1, 2, 3, 4, 5, 6});
    add("four-atom", {"a", "b", "c", "d"}, {Rational(3, 8), Rational(3, 8), Rational(3, 8), Rational(-1, 8)}, {0, 1, 1, 2});
    {
        std::vector<std::string> atoms;
        std::vector<Rational> w, a;
        for (int i = 1; i <= 20; ++i) {
            atoms.push_back("w" + std::to_string(i));
            w.push_back(i % 2 ? Rational(-1, 20) : Rational(3, 20));
            a.push_back(i % 3);
        }
        add("twenty-atom", std::move(atoms), std::move(w), std::move(a));
    }
    {
        const auto& coin = out[1].space;
        auto prod = coin.product(coin);
        out.push_back({"signed-coin-pair", prod, {0, 1, 1, 2}});
    }
    return out;
}

inline const BundledSignedSpace& bundled_signed_space(const std::string& name) {
    static const auto all = bundled_signed_spaces();
    for (const auto& b : all)
        if (b.name == name) return b;
    std::string msg = "unknown bundled signed space '" + name + "'; available:";
    for (const auto& b : all) msg += " " + b.name;
    throw input_error(msg);
}

}  // namespace collectiva::signed_prob
