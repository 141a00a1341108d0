// A short tour of the library: one small computation per module.

#include "collectiva/battery.hpp"
#include "collectiva/collectives.hpp"
#include "collectiva/complexity.hpp"
#include "collectiva/finite_prob.hpp"
#include "collectiva/marginals.hpp"
#include "collectiva/padic.hpp"
#include "collectiva/rng.hpp"
#include "collectiva/signed_prob.hpp"

#include <iostream>

using namespace collectiva;

namespace {

void heading(const char* title) { std::cout << "\n== " << title << " ==\n"; }

void finite_spaces() {
    heading("finite probability spaces");
    using namespace finite;
    // a die with exact weights and the total probability formula over parity
    auto omega = SampleSpace::numbered(6);
    FiniteProbabilitySpace<Rational> die(power_set(omega), std::vector<Rational>(6, Rational(1, 6)));
    const Event even = Event::of({1, 3, 5}), odd = Event::of({0, 2, 4}), low = Event::of({0, 1});
    auto tp = die.total_probability(Partition<Rational>::make(die, {even, odd}), low);
    std::cout << "P(low) via parity blocks = " << to_string(tp.total) << "\n";

    // a coarse algebra hides the elementary events
    SampleSpace three({"w1", "w2", "w3"});
    FiniteProbabilitySpace<Rational> coarse(build_algebra(three, {Event::of({0, 1})}), {Rational(1, 2), Rational(1, 2)});
    try {
        coarse.probability(Event::of({0}));
    } catch (const not_measurable& e) {
        std::cout << "P({w1}) on the coarse algebra: " << e.what() << "\n";
    }
}

void collectives_tour() {
    heading("collectives");
    Rng rng(42);
    std::vector<Label> d(20000);
    for (auto& l : d) l = static_cast<Label>(rng.below(3));
    TrialSequence x(LabelAlphabet({"a", "b", "c"}), std::move(d));
    auto verdict = collectives::detect_stabilization(
        collectives::frequencies(x, collectives::stabilization_checkpoints(x.size(), 1000)), 1000, 0.02);
    std::cout << "ternary sequence stabilized: " << (verdict.stabilized ? "yes" : "no") << "\n";
    auto f = collectives::final_frequencies(collectives::mix(x, {0, 2}));
    std::cout << "frequency of {a,c} after mixing: " << f[1].convert_to<double>() << "\n";

    auto bits = TrialSequence::from_bits(random_bits(50000, 7));
    auto kamke = collectives::select_positions(bits, collectives::kamke_adversary(bits, 1));
    std::cout << "hindsight selection keeps " << kamke.size() << " places, all ones: "
              << (collectives::final_frequencies(kamke)[1] == 1 ? "yes" : "no") << "\n";

    auto family = collectives::default_ville_family();
    auto ville = collectives::check_ville(collectives::ville_generator(family, 10000, 0.01), family);
    std::cout << "Ville sequence: running mean never below 1/2: " << (ville.floor_holds ? "yes" : "no") << "\n";
}

void marginals_tour() {
    heading("marginal problem");
    using namespace marginals;
    for (auto t : {CorrelationTriple<Rational>{0, 0, 0, std::nullopt}, CorrelationTriple<Rational>{1, 1, -1, std::nullopt}}) {
        auto r = joint_exists(t);
        std::cout << "E = (" << to_string(t.e12) << ", " << to_string(t.e23) << ", " << to_string(t.e13)
                  << "): joint " << (r.feasible ? "exists" : "does not exist") << "\n";
    }
}

void complexity_tour() {
    heading("compression complexity");
    auto codec = complexity::default_codec();
    auto zeros = complexity::estimate_K(complexity::BitWord(32768, 0), *codec);
    auto noise = complexity::estimate_K(random_bits(32768, 1), *codec);
    std::cout << "rate of 32768 zeros: " << zeros.rate() << ", of fair coin flips: " << noise.rate() << "\n";
    auto rep = complexity::run_battery(random_bits(100000, 1), complexity::default_battery());
    std::cout << "battery (significance 0.01) on fair coin flips passes: " << (rep.passed ? "yes" : "no") << "\n";
}

void signed_tour() {
    heading("signed probability");
    using namespace signed_prob;
    const auto& coin = bundled_signed_space("signed-coin");
    auto table = weak_lln_check(coin.space, coin.variable, monomial(2), {1, 16, 256});
    for (const auto& row : table.rows)
        std::cout << "N=" << row.n << ": error " << row.error_exact->convert_to<double>() << ", total mass "
                  << to_string(row.total_mass) << "\n";
}

void padic_tour() {
    heading("p-adic limits");
    using namespace padic;
    const PAdicContext two(2);
    std::vector<Rational> sums;
    BigInt s = 0;
    for (unsigned k = 0; k < 40; ++k) {
        s += BigInt(1) << k;
        sums.emplace_back(s);
    }
    auto v = detect_padic_stabilization(sums, two, 2, 20);
    std::cout << "partial sums of 2^j: 2-adically stabilized: " << (v.stabilized ? "yes" : "no");
    if (v.reconstructed_limit) std::cout << ", limit " << to_string(*v.reconstructed_limit);
    std::cout << "\n";
}

}  // namespace

int main() {
    try {
        finite_spaces();
        collectives_tour();
        marginals_tour();
        complexity_tour();
        signed_tour();
        padic_tour();
    } catch (const std::exception& e) {
        std::cerr << "demo failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
