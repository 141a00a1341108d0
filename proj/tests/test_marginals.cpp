#include "collectiva/marginals.hpp"
#include "collectiva/rng.hpp"

#include <gtest/gtest.h>

using namespace collectiva;
using namespace collectiva::marginals;

namespace {

// Oracle independent of the simplex: a joint on {+-1}^3 is fixed by its
// means, pair correlations and the triple moment t via
//   q(s) = (1 + sum s_i m_i + s1s2 E12 + s2s3 E23 + s1s3 E13 + s1s2s3 t) / 8.
// Feasible iff some t makes all eight masses nonnegative.
bool eight_atom_oracle(const Rational& e12, const Rational& e23, const Rational& e13,
                       const std::array<Rational, 3>& m = {0, 0, 0}) {
    std::optional<Rational> lo, hi;
    for (int s1 : {-1, 1})
        for (int s2 : {-1, 1})
            for (int s3 : {-1, 1}) {
                Rational base = 1 + s1 * m[0] + s2 * m[1] + s3 * m[2] + s1 * s2 * e12 + s2 * s3 * e23 + s1 * s3 * e13;
                if (s1 * s2 * s3 == 1) {
                    Rational need = -base;  // t >= -base
                    if (!lo || need > *lo) lo = need;
                } else {
                    if (!hi || base < *hi) hi = base;  // t <= base
                }
            }
    return *lo <= *hi;
}

JointPMF<Rational> random_joint3(Rng& rng) {
    JointPMF<Rational> j({"a1", "a2", "a3"}, {{-1, 1}, {-1, 1}, {-1, 1}});
    Rational total = 0;
    std::vector<Rational> w;
    for (int i = 0; i < 8; ++i) {
        w.emplace_back(static_cast<long>(rng.below(20)));
        total += w.back();
    }
    if (total == 0) {
        w[0] = 1;
        total = 1;
    }
    for (std::size_t i = 0; i < 8; ++i) j.at_index(i) = w[i] / total;
    return j;
}

CorrelationTriple<Rational> triple_of(const JointPMF<Rational>& j, bool with_means) {
    auto corr = [&](std::size_t a, std::size_t b) {
        Rational e = 0;
        for (std::size_t i = 0; i < j.support_size(); ++i) {
            auto t = j.tuple_at(i);
            e += j.at_index(i) * t[a] * t[b];
        }
        return e;
    };
    CorrelationTriple<Rational> tr{corr(0, 1), corr(1, 2), corr(0, 2), std::nullopt};
    if (with_means) {
        std::array<Rational, 3> m{0, 0, 0};
        for (std::size_t i = 0; i < j.support_size(); ++i)
            for (std::size_t k = 0; k < 3; ++k) m[k] += j.at_index(i) * j.tuple_at(i)[k];
        tr.means = m;
    }
    return tr;
}

MarginalFamily<Rational> pairwise(const JointPMF<Rational>& j) {
    return {marginalize(j, {"a1", "a2"}), marginalize(j, {"a2", "a3"}), marginalize(j, {"a1", "a3"})};
}

}  // namespace

TEST(Marginalize, Examples) {
    JointPMF<Rational> coins({"a1", "a2"}, {{-1, 1}, {-1, 1}},
                             {{{-1, -1}, Rational(1, 4)}, {{-1, 1}, Rational(1, 4)}, {{1, -1}, Rational(1, 4)}, {{1, 1}, Rational(1, 4)}});
    auto m = marginalize(coins, {"a1"});
    EXPECT_EQ(m.at({1}), Rational(1, 2));
    EXPECT_EQ(m.at({-1}), Rational(1, 2));
    EXPECT_EQ(marginalize(coins, {"a1", "a2"}), coins);

    JointPMF<Rational> cube({"a1", "a2", "a3"}, {{-1, 1}, {-1, 1}, {-1, 1}});
    for (std::size_t i = 0; i < 8; ++i) cube.at_index(i) = Rational(1, 8);
    auto pair = marginalize(cube, {"a3", "a1"});
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(pair.at_index(i), Rational(1, 4));
    EXPECT_THROW(marginalize(cube, {"a9"}), input_error);
}

TEST(Marginalize, ReordersCoordinates) {
    JointPMF<Rational> j({"x", "y"}, {{0, 1}, {0, 1}}, {{{0, 1}, Rational(1)}});
    auto swapped = marginalize(j, {"y", "x"});
    EXPECT_EQ(swapped.at({1, 0}), 1);
    EXPECT_EQ(swapped.at({0, 1}), 0);
}

TEST(JointPmf, Validation) {
    EXPECT_THROW((JointPMF<Rational>({"a"}, {{0, 1}}, {{{0}, Rational(1, 2)}})), normalization_error);
    EXPECT_THROW((JointPMF<Rational>({"a"}, {{0, 1}}, {{{0}, Rational(3, 2)}, {{1}, Rational(-1, 2)}})), input_error);
    EXPECT_THROW((JointPMF<Rational>({"a", "a"}, {{0}, {0}})), input_error);
    EXPECT_THROW((JointPMF<Rational>({"a"}, {{0, 1}}, {{{2}, Rational(1)}})), input_error);
}

TEST(NoSignaling, MarginalsOfOneJointAreConsistent) {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        auto j = random_joint3(rng);
        MarginalFamily<Rational> fam{marginalize(j, {"a1", "a2"}), marginalize(j, {"a1"}), marginalize(j, {"a3", "a2"}),
                                     marginalize(j, {"a2"})};
        EXPECT_TRUE(check_no_signaling(fam).consistent);
    }
}

TEST(NoSignaling, DetectsInconsistentSingleMarginal) {
    JointPMF<Rational> p12({"a1", "a2"}, {{-1, 1}, {-1, 1}});
    for (std::size_t i = 0; i < 4; ++i) p12.at_index(i) = Rational(1, 4);
    JointPMF<Rational> p1({"a1"}, {{-1, 1}}, {{{1}, Rational(9, 10)}, {{-1}, Rational(1, 10)}});
    auto r = check_no_signaling(MarginalFamily<Rational>{p12, p1});
    EXPECT_FALSE(r.consistent);
    ASSERT_EQ(r.violations.size(), 1U);
    EXPECT_EQ(r.violations[0].observables, std::vector<std::string>{"a1"});
    EXPECT_EQ(r.violations[0].deviation, Rational(2, 5));

    auto verdict = joint_exists(MarginalFamily<Rational>{p12, p1});
    EXPECT_FALSE(verdict.feasible);
    ASSERT_TRUE(verdict.violated.has_value());
    EXPECT_NE(verdict.violated->name.find("no-signaling"), std::string::npos);
}

TEST(NoSignaling, DisjointFamilyVacuouslyConsistent) {
    JointPMF<Rational> a({"a"}, {{0, 1}}, {{{0}, Rational(1)}});
    JointPMF<Rational> b({"b"}, {{0, 1}}, {{{1}, Rational(1)}});
    EXPECT_TRUE(check_no_signaling(MarginalFamily<Rational>{a, b}).consistent);
}

TEST(JointExists, ProductJointIsWitnessed) {
    JointPMF<Rational> prod({"a1", "a2", "a3"}, {{-1, 1}, {-1, 1}, {-1, 1}});
    const Rational p[3] = {Rational(1, 3), Rational(1, 2), Rational(3, 4)};  // P(a_i = +1)
    for (std::size_t i = 0; i < 8; ++i) {
        auto t = prod.tuple_at(i);
        Rational m = 1;
        for (int k = 0; k < 3; ++k) m *= t[k] == 1 ? p[k] : 1 - p[k];
        prod.at_index(i) = m;
    }
    auto fam = pairwise(prod);
    auto v = joint_exists(fam);
    ASSERT_TRUE(v.feasible);
    ASSERT_TRUE(v.witness.has_value());
    for (const auto& m : fam) EXPECT_EQ(marginalize(*v.witness, m.observables()), m);
}

TEST(JointExists, TripleExamples) {
    CorrelationTriple<Rational> bad{1, 1, -1, std::nullopt};
    auto v = joint_exists(bad);
    EXPECT_FALSE(v.feasible);
    ASSERT_TRUE(v.violated.has_value());
    EXPECT_GT(v.violated->value, v.violated->bound);

    CorrelationTriple<Rational> zero{0, 0, 0, std::nullopt};
    auto z = joint_exists(zero);
    ASSERT_TRUE(z.feasible);
    for (const auto& m : zero.to_family()) EXPECT_EQ(marginalize(*z.witness, m.observables()), m);
}

TEST(JointExists, GridAgreesWithEightAtomOracle) {
    int feasible = 0;
    for (int i = -4; i <= 4; ++i)
        for (int j = -4; j <= 4; ++j)
            for (int k = -4; k <= 4; ++k) {
                CorrelationTriple<Rational> t{Rational(i, 4), Rational(j, 4), Rational(k, 4), std::nullopt};
                const bool oracle = eight_atom_oracle(t.e12, t.e23, t.e13);
                const auto v = joint_exists(t);
                EXPECT_EQ(v.feasible, oracle) << i << " " << j << " " << k;
                EXPECT_EQ(!boole_bell_value(t).violated, oracle);
                feasible += oracle;
            }
    EXPECT_GT(feasible, 0);
    EXPECT_LT(feasible, 729);
}

TEST(JointExists, WithMeansAgreesWithOracle) {
    Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        auto r = [&] { return Rational(static_cast<long>(rng.below(9)) - 4, 4); };
        CorrelationTriple<Rational> tr{r(), r(), r(), std::array<Rational, 3>{r(), r(), r()}};
        const bool oracle = eight_atom_oracle(tr.e12, tr.e23, tr.e13, *tr.means);
        EXPECT_EQ(joint_exists(tr).feasible, oracle);
        EXPECT_EQ(!boole_bell_value(tr).violated, oracle);
    }
}

TEST(JointExists, FloatModeWitnessWithinTolerance) {
    CorrelationTriple<double> t{0.5, -0.25, 0.0, std::nullopt};
    auto v = joint_exists(t);
    ASSERT_TRUE(v.feasible);
    for (const auto& m : t.to_family())
        EXPECT_LE(max_deviation(marginalize(*v.witness, m.observables()), m), 1e-9);
    EXPECT_FALSE(joint_exists(CorrelationTriple<double>{1, 1, -1, std::nullopt}).feasible);
}

TEST(JointExists, CapacityError) {
    MarginalFamily<Rational> fam;
    for (int i = 0; i < 21; ++i) fam.emplace_back(JointPMF<Rational>({"o" + std::to_string(i)}, {{0, 1}}, {{{0}, Rational(1)}}));
    EXPECT_THROW(joint_exists(fam), capacity_error);
}

TEST(JointExists, FourObservablesChshLike) {
    // Pairwise marginals (a1,b1),(a1,b2),(a2,b1),(a2,b2) with three perfect
    // correlations and one perfect anticorrelation admit no joint.
    auto pair = [](std::string x, std::string y, int sign) {
        JointPMF<Rational> p({x, y}, {{-1, 1}, {-1, 1}});
        p.at({1, sign}) = Rational(1, 2);
        p.at({-1, -sign}) = Rational(1, 2);
        return p;
    };
    EXPECT_FALSE(joint_exists(MarginalFamily<Rational>{pair("a1", "b1", 1), pair("a1", "b2", 1), pair("a2", "b1", 1),
                                                       pair("a2", "b2", -1)})
                     .feasible);
    auto ok = joint_exists(
        MarginalFamily<Rational>{pair("a1", "b1", 1), pair("a1", "b2", 1), pair("a2", "b1", 1), pair("a2", "b2", 1)});
    EXPECT_TRUE(ok.feasible);
}

TEST(BooleBell, Examples) {
    EXPECT_FALSE(boole_bell_value(CorrelationTriple<Rational>{0, 0, 0, std::nullopt}).violated);
    EXPECT_FALSE(boole_bell_value(CorrelationTriple<Rational>{1, 1, 1, std::nullopt}).violated);
    auto r = boole_bell_value(CorrelationTriple<Rational>{1, 1, -1, std::nullopt});
    EXPECT_TRUE(r.violated);
    EXPECT_EQ(r.value, 3);
    EXPECT_EQ(r.bound, 1);
    EXPECT_EQ(r.facets_checked, 4U);
}

TEST(BooleBell, CatalogueMatchesTriangleInequalities) {
    // Derived from the oracle: feasible iff 1 + u E12 + v E23 + uv E13 >= 0
    // for all signs u, v; each gives -uE12 - uvE13 - vE23 <= 1 in catalogue
    // coordinates (E12, E13, E23).
    const auto& cat = polytope::correlation_catalogue(3, false);
    ASSERT_EQ(cat.facets.size(), 4U);
    for (int u : {-1, 1})
        for (int v : {-1, 1}) {
            polytope::Facet f{{Rational(-u), Rational(-u * v), Rational(-v)}, Rational(1)};
            EXPECT_NE(std::find(cat.facets.begin(), cat.facets.end(), f), cat.facets.end());
        }
    const auto& cat4 = polytope::correlation_catalogue(4, false);
    EXPECT_EQ(cat4.facets.size(), 16U);
    for (const auto& f : cat4.facets) {
        int nonzero = 0;
        for (const auto& c : f.normal) nonzero += c != 0;
        EXPECT_EQ(nonzero, 3);
        EXPECT_EQ(f.bound, 1);
    }
}

TEST(BooleBell, RandomJointsNeverViolate) {
    Rng rng(17);
    for (int t = 0; t < 1000; ++t) {
        auto j = random_joint3(rng);
        EXPECT_FALSE(boole_bell_value(triple_of(j, false)).violated);
        EXPECT_FALSE(boole_bell_value(triple_of(j, true)).violated);
        if (t % 10 == 0) EXPECT_TRUE(joint_exists(pairwise(j)).feasible);
    }
}

TEST(KolmogorovConsistency, MarginalsOfJointAreConsistent) {
    Rng rng(2);
    auto j = random_joint3(rng);
    MarginalFamily<Rational> fam{j,
                                 marginalize(j, {"a2", "a1", "a3"}),
                                 marginalize(j, {"a1", "a2"}),
                                 marginalize(j, {"a2", "a1"}),
                                 marginalize(j, {"a3"}),
                                 marginalize(j, {"a1"})};
    auto r = kolmogorov_consistency(fam);
    EXPECT_TRUE(r.consistent);
    EXPECT_TRUE(r.violations.empty());
}

TEST(KolmogorovConsistency, PermutationViolation) {
    JointPMF<Rational> p12({"t1", "t2"}, {{0, 1}, {0, 1}}, {{{0, 1}, Rational(1)}});
    JointPMF<Rational> p21({"t2", "t1"}, {{0, 1}, {0, 1}}, {{{0, 1}, Rational(1)}});  // should be (1,0)
    auto r = kolmogorov_consistency(MarginalFamily<Rational>{p12, p21});
    EXPECT_FALSE(r.consistent);
    ASSERT_EQ(r.violations.size(), 1U);
    EXPECT_EQ(r.violations[0].kind, ConsistencyViolation::Kind::permutation);
    EXPECT_EQ(r.violations[0].deviation, 1.0);
}

TEST(KolmogorovConsistency, ProjectionViolation) {
    JointPMF<Rational> p12({"t1", "t2"}, {{0, 1}, {0, 1}}, {{{0, 0}, Rational(1, 2)}, {{1, 1}, Rational(1, 2)}});
    JointPMF<Rational> p1({"t1"}, {{0, 1}}, {{{0}, Rational(1)}});
    auto r = kolmogorov_consistency(MarginalFamily<Rational>{p12, p1});
    EXPECT_FALSE(r.consistent);
    ASSERT_EQ(r.violations.size(), 1U);
    EXPECT_EQ(r.violations[0].kind, ConsistencyViolation::Kind::projection);
    EXPECT_EQ(r.violations[0].larger, 0U);
    EXPECT_EQ(r.violations[0].smaller, 1U);
}
