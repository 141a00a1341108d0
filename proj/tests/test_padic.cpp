#include "collectiva/padic.hpp"
#include "collectiva/rng.hpp"

#include <gtest/gtest.h>

using namespace collectiva;
using namespace collectiva::padic;

namespace {

Rational pow2(unsigned k) { return Rational(BigInt(1) << k); }

// Oracle: v_p of a nonzero integer by trial division on 64-bit values.
long naive_valuation(std::int64_t n, std::uint64_t p) {
    long v = 0;
    std::uint64_t m = n < 0 ? static_cast<std::uint64_t>(-n) : static_cast<std::uint64_t>(n);
    while (m % p == 0) {
        m /= p;
        ++v;
    }
    return v;
}

Rational random_rational(Rng& rng) {
    const auto num = static_cast<std::int64_t>(rng.below(2001)) - 1000;
    const auto den = static_cast<std::int64_t>(rng.below(999)) + 1;
    return Rational(num, den);
}

std::vector<Rational> partial_sums_of_powers_of_two(unsigned count) {
    std::vector<Rational> s;
    Rational acc = 0;
    for (unsigned j = 0; j < count; ++j) {
        acc += pow2(j);
        s.push_back(acc);
    }
    return s;
}

}  // namespace

TEST(Context, RejectsComposite) {
    EXPECT_THROW(PAdicContext(1), input_error);
    EXPECT_THROW(PAdicContext(15), input_error);
    EXPECT_NO_THROW(PAdicContext(2));
    EXPECT_NO_THROW(PAdicContext(1000000007));
}

TEST(Valuation, Examples) {
    PAdicContext two(2), five(5), seven(7);
    EXPECT_EQ(padic_valuation(12, two), 2);
    EXPECT_EQ(padic_valuation(1, seven), 0);
    EXPECT_EQ(padic_valuation(Rational(3, 8), two), -3);
    EXPECT_FALSE(padic_valuation(0, five).has_value());
    EXPECT_EQ(padic_norm(Rational(3, 8), two), 8);
    EXPECT_EQ(padic_norm(12, two), Rational(1, 4));
    EXPECT_EQ(padic_norm(0, two), 0);
}

TEST(Valuation, MatchesTrialDivision) {
    Rng rng(3);
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL}) {
        PAdicContext ctx(p);
        for (int i = 0; i < 500; ++i) {
            const auto a = static_cast<std::int64_t>(rng.below(1'000'000)) + 1;
            const auto b = static_cast<std::int64_t>(rng.below(1'000'000)) + 1;
            EXPECT_EQ(*padic_valuation(Rational(a, b), ctx), naive_valuation(a, p) - naive_valuation(b, p));
        }
    }
}

TEST(Valuation, ProductOverPrimesRecoversInteger) {
    Rng rng(4);
    for (int i = 0; i < 300; ++i) {
        std::uint64_t q = rng.below(1'000'000) + 1;
        std::uint64_t rest = q, product = 1;
        for (std::uint64_t p = 2; p <= q; ++p) {
            if (!nt::is_prime(p) || q % p != 0) continue;
            PAdicContext ctx(p);
            const auto v = *padic_valuation(Rational(q), ctx);
            for (long j = 0; j < v; ++j) product *= p;
            while (rest % p == 0) rest /= p;
            if (rest == 1) break;
        }
        EXPECT_EQ(product, q);
    }
}

TEST(Distance, Examples) {
    PAdicContext two(2), five(5);
    EXPECT_EQ(padic_distance(Rational(7, 3), Rational(7, 3), two), 0.0);
    EXPECT_EQ(padic_distance(1, 3, two), 0.5);
    EXPECT_EQ(padic_distance(0, Rational(1, 5), five), 5.0);
    EXPECT_EQ(padic_distance_exact(0, Rational(1, 5), five), 5);
}

TEST(Distance, UltrametricInequality) {
    Rng rng(5);
    for (std::uint64_t p : {2ULL, 3ULL, 5ULL}) {
        PAdicContext ctx(p);
        for (int i = 0; i < 2000; ++i) {
            auto a = random_rational(rng), b = random_rational(rng), c = random_rational(rng);
            const auto ab = padic_distance_exact(a, b, ctx), bc = padic_distance_exact(b, c, ctx);
            EXPECT_LE(padic_distance_exact(a, c, ctx), std::max(ab, bc));
            EXPECT_EQ(ab == 0, a == b);
        }
    }
}

TEST(Expansion, Examples) {
    PAdicContext two(2, 8);
    auto five = padic_expand(5, two);
    EXPECT_EQ(five.valuation, 0);
    EXPECT_EQ(five.digits, (std::vector<std::uint64_t>{1, 0, 1, 0, 0, 0, 0, 0}));
    auto minus_one = padic_expand(-1, PAdicContext(2, 64));
    EXPECT_EQ(minus_one.digits, std::vector<std::uint64_t>(64, 1));
    auto third = padic_expand(Rational(1, 3), PAdicContext(2, 10));
    EXPECT_EQ(third.digits, (std::vector<std::uint64_t>{1, 1, 0, 1, 0, 1, 0, 1, 0, 1}));
    EXPECT_EQ((3 * third.unit_residue()) % 1024, 1);
    auto eighth = padic_expand(Rational(3, 8), two);
    EXPECT_EQ(eighth.valuation, -3);
    EXPECT_EQ(eighth.digits.front(), 1U);
    EXPECT_TRUE(padic_expand(0, two).zero);
}

TEST(Expansion, RoundTripAndDigitRange) {
    Rng rng(6);
    for (std::uint64_t p : {2ULL, 3ULL, 7ULL, 101ULL}) {
        PAdicContext ctx(p, 40);
        for (int i = 0; i < 300; ++i) {
            auto q = random_rational(rng);
            auto e = padic_expand(q, ctx);
            EXPECT_TRUE(expansion_matches(e, q));
            if (q != 0) {
                EXPECT_NE(e.digits.front(), 0U);
                for (auto d : e.digits) EXPECT_LT(d, p);
                EXPECT_FALSE(expansion_matches(e, q + 1));
            }
        }
    }
}

TEST(Reconstruction, RecoversSmallRationals) {
    const BigInt m = BigInt(1) << 40;
    for (auto q : {Rational(-1), Rational(1, 3), Rational(-5, 7), Rational(12), Rational(0)}) {
        const BigInt num = boost::multiprecision::numerator(q), den = boost::multiprecision::denominator(q);
        const BigInt r = detail::mod(num * detail::inverse_mod(den, m), m);
        auto back = rational_reconstruction(r, m);
        ASSERT_TRUE(back.has_value());
        EXPECT_EQ(*back, q);
    }
}

TEST(Stabilization, PartialSumsConvergeToMinusOne) {
    PAdicContext two(2);
    auto s = partial_sums_of_powers_of_two(61);
    for (unsigned k = 0; k <= 60; ++k) EXPECT_EQ(padic_norm(s[k] + 1, two), Rational(1) / pow2(k + 1)) << k;
    auto r = compare_convergence(s, two, 2, 0.01, 20);
    EXPECT_EQ(r.outcome, Outcome::padic_only);
    ASSERT_TRUE(r.padic.reconstructed_limit.has_value());
    EXPECT_EQ(*r.padic.reconstructed_limit, -1);
    EXPECT_EQ(r.padic.estimate->digits, std::vector<std::uint64_t>(20, 1));
}

TEST(Stabilization, NegativeLimitOfGenuineFrequencies) {
    PAdicContext two(2);
    std::vector<Rational> nu;
    for (unsigned k = 1; k <= 20; ++k) {
        nu.push_back((pow2(k) - 1) / (pow2(k) + 1));
        EXPECT_EQ(padic_norm(nu.back() + 1, two), Rational(1) / pow2(k + 1));
        EXPECT_GE(nu.back(), 0);
        EXPECT_LE(nu.back(), 1);
    }
    auto v = detect_padic_stabilization(nu, two, 2, 20);
    EXPECT_TRUE(v.stabilized);
    EXPECT_EQ(*v.min_valuation, 20);
    EXPECT_EQ(*v.reconstructed_limit, -1);
    // one step earlier the window is still too wide at this precision
    std::vector<Rational> shorter(nu.begin(), nu.end() - 1);
    EXPECT_FALSE(detect_padic_stabilization(shorter, two, 2, 20).stabilized);
}

TEST(Stabilization, ConstantSequenceBoth) {
    std::vector<Rational> c(50, Rational(2, 7));
    auto r = compare_convergence(c, PAdicContext(3), 10, 0.01, 10);
    EXPECT_EQ(r.outcome, Outcome::both);
    EXPECT_EQ(r.real.estimate, Rational(2, 7));
    EXPECT_EQ(*r.padic.reconstructed_limit, Rational(2, 7));
}

TEST(Stabilization, FairCoinFrequenciesAreRealOnly) {
    auto bits = random_bits(200000, 12);
    TrialSequence x = TrialSequence::from_bits(bits);
    std::vector<std::uint64_t> at;
    for (std::uint64_t n = 180000; n <= 200000; n += 1000) at.push_back(n);
    auto seq = frequency_trace(x, 1, at);
    auto r = compare_convergence(seq, PAdicContext(2), 10, 0.01, 20);
    EXPECT_EQ(r.outcome, Outcome::real_only);
    EXPECT_LT(*r.padic.min_valuation, 20);
}

TEST(Stabilization, EventuallyConstantModuloPm) {
    // x_i = c + p^m * t_i for the tail: the detector agrees with c mod p^m
    const std::uint64_t p = 3;
    const long m = 6;
    PAdicContext ctx(p);
    Rng rng(8);
    const Rational c(5, 11);
    std::vector<Rational> seq;
    for (int i = 0; i < 10; ++i) seq.push_back(random_rational(rng));
    for (int i = 0; i < 20; ++i) seq.push_back(c + Rational(729) * Rational(static_cast<long>(rng.below(100)), 1 + static_cast<long>(rng.below(5)) * 2));
    auto v = detect_padic_stabilization(seq, ctx, 20, m);
    EXPECT_TRUE(v.stabilized);
    auto ce = padic_expand(c, ctx, 6);
    EXPECT_EQ(v.estimate->digits, ce.digits);
}

TEST(Stabilization, WindowPrecondition) {
    EXPECT_THROW(detect_padic_stabilization({1, 2}, PAdicContext(2), 2, 5), input_error);
    EXPECT_EQ(precision_for(std::pow(2.0, -20), PAdicContext(2)), 20);
    EXPECT_EQ(precision_for(0.01, PAdicContext(5)), 3);
}

TEST(Realizer, SmallExamples) {
    auto x = frequency_path_realizer({{2, 1}, {4, 2}});
    EXPECT_EQ(x.size(), 4U);
    EXPECT_EQ(frequency_trace(x, 0, {2, 4}), (std::vector<Rational>{Rational(1, 2), Rational(1, 2)}));
    try {
        frequency_path_realizer({{2, 1}, {3, 3}});
        FAIL();
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find("checkpoint 2"), std::string::npos);
    }
    EXPECT_THROW(frequency_path_realizer({{3, 1}, {3, 2}}), input_error);
    EXPECT_THROW(frequency_path_realizer({{3, 2}, {5, 1}}), input_error);
    EXPECT_THROW(frequency_path_realizer({{3, 4}}), input_error);
}

TEST(Realizer, NegativeLimitFamily) {
    std::vector<Checkpoint> cps;
    std::vector<std::uint64_t> at;
    for (unsigned k = 1; k <= 20; ++k) {
        cps.push_back({(1ULL << k) + 1, (1ULL << k) - 1});
        at.push_back((1ULL << k) + 1);
    }
    auto x = frequency_path_realizer(cps);
    EXPECT_EQ(x.size(), (1U << 20) + 1);
    auto trace = frequency_trace(x, 0, at);
    PAdicContext two(2);
    for (unsigned k = 1; k <= 20; ++k) {
        EXPECT_EQ(trace[k - 1], (pow2(k) - 1) / (pow2(k) + 1));
        EXPECT_EQ(padic_norm(trace[k - 1] + 1, two), Rational(1) / pow2(k + 1));
    }
    auto r = compare_convergence(trace, two, 2, 0.01, 20);
    EXPECT_TRUE(r.padic.stabilized);
    EXPECT_EQ(*r.padic.reconstructed_limit, -1);
    // the full sequence, read at every N, is a different object: reported separately
    auto tail = frequency_tail(x, 0, 3);
    EXPECT_EQ(tail.back(), trace.back());
    EXPECT_FALSE(detect_padic_stabilization(tail, two, 2, 20).stabilized);
}
