#pragma once

// Frequency calculus over finite prefixes of collectives: relative-frequency
// traces, a finite-N stabilization criterion, causal place selections,
// mixing, Kamke's non-causal selection, and a Ville-style generator.

#include "collectiva/core.hpp"
#include "collectiva/number_theory.hpp"
#include "collectiva/rng.hpp"
#include "collectiva/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace collectiva::collectives {

// ---------------------------------------------------------------------------
// Frequencies

/// Label counts n_N(a; x) at increasing checkpoints N. Frequencies are
/// exact rationals n_N / N.
class FrequencyTrace {
public:
    FrequencyTrace(std::size_t labels, std::vector<std::uint64_t> checkpoints,
                   std::vector<std::vector<std::uint64_t>> counts)
        : labels_(labels), checkpoints_(std::move(checkpoints)), counts_(std::move(counts)) {}

    std::size_t labels() const { return labels_; }
    const std::vector<std::uint64_t>& checkpoints() const { return checkpoints_; }
    std::uint64_t count(std::size_t k, Label a) const { return counts_.at(k).at(a); }

    Rational frequency(std::size_t k, Label a) const {
        return Rational(count(k, a), checkpoints_.at(k));
    }

    Rational frequency_of(std::size_t k, const std::vector<Label>& set) const {
        std::uint64_t n = 0;
        for (auto a : set) n += count(k, a);
        return Rational(n, checkpoints_.at(k));
    }

private:
    std::size_t labels_;
    std::vector<std::uint64_t> checkpoints_;
    std::vector<std::vector<std::uint64_t>> counts_;
};

inline FrequencyTrace frequencies(const TrialSequence& x, std::vector<std::uint64_t> checkpoints) {
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (!checkpoints.empty() && checkpoints.front() == 0) throw input_error("checkpoint N must be at least 1");
    if (!checkpoints.empty() && checkpoints.back() > x.size())
        throw input_error("checkpoint " + std::to_string(checkpoints.back()) + " beyond sequence length " +
                          std::to_string(x.size()));
    const std::size_t m = x.alphabet().size();
    std::vector<std::uint64_t> running(m, 0);
    std::vector<std::vector<std::uint64_t>> counts;
    counts.reserve(checkpoints.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < x.size() && next < checkpoints.size(); ++i) {
        ++running[x[i]];
        while (next < checkpoints.size() && checkpoints[next] == i + 1) {
            counts.push_back(running);
            ++next;
        }
    }
    return FrequencyTrace(m, std::move(checkpoints), std::move(counts));
}

inline std::uint64_t default_window(std::uint64_t n) { return std::max<std::uint64_t>(1000, n / 10); }

/// Roughly eight log-spaced checkpoints per decade up to N, plus `dense`
/// evenly spaced checkpoints inside the final window of width W.
inline std::vector<std::uint64_t> stabilization_checkpoints(std::uint64_t n, std::uint64_t window, std::size_t dense = 64) {
    std::set<std::uint64_t> cps;
    if (n == 0) return {};
    for (int k = 0;; ++k) {
        const auto v = static_cast<std::uint64_t>(std::llround(std::pow(10.0, k / 8.0)));
        if (v >= n) break;
        cps.insert(v);
    }
    const std::uint64_t start = window >= n ? 1 : n - window;
    for (std::size_t i = 0; i <= dense; ++i) cps.insert(start + (n - start) * i / dense);
    cps.insert(n);
    cps.erase(0);
    return {cps.begin(), cps.end()};
}

struct LabelStability {
    bool stabilized = false;
    Rational estimate;     // mean of nu over the final window
    Rational oscillation;  // max - min of nu over the final window
};

struct StabilizationVerdict {
    std::vector<LabelStability> labels;
    bool stabilized = false;  // every label stabilized
    std::uint64_t window = 0;
    double epsilon = 0;
    std::size_t window_checkpoints = 0;
};

/// A label is stabilized iff its frequency oscillates by at most eps over
/// the checkpoints in the final window [N_last - W, N_last]. This is a
/// finite-N convention, not a limit statement.
inline StabilizationVerdict detect_stabilization(const FrequencyTrace& trace, std::uint64_t window, double eps) {
    const auto& cps = trace.checkpoints();
    if (cps.empty()) throw input_error("empty frequency trace");
    const std::uint64_t last = cps.back();
    const std::uint64_t from = window >= last ? 0 : last - window;
    std::size_t first = 0;
    while (first < cps.size() && cps[first] < from) ++first;
    StabilizationVerdict v;
    v.window = window;
    v.epsilon = eps;
    v.window_checkpoints = cps.size() - first;
    if (v.window_checkpoints < 2) throw input_error("need at least two checkpoints inside the stabilization window");
    const Rational tol(eps);
    v.stabilized = true;
    for (Label a = 0; a < trace.labels(); ++a) {
        Rational lo = trace.frequency(first, a), hi = lo, sum = 0;
        for (std::size_t k = first; k < cps.size(); ++k) {
            Rational f = trace.frequency(k, a);
            lo = std::min(lo, f);
            hi = std::max(hi, f);
            sum += f;
        }
        LabelStability s;
        s.oscillation = hi - lo;
        s.estimate = sum / static_cast<long>(v.window_checkpoints);
        s.stabilized = s.oscillation <= tol;
        v.stabilized = v.stabilized && s.stabilized;
        v.labels.push_back(std::move(s));
    }
    return v;
}

// ---------------------------------------------------------------------------
// Place selections

/// Read-only view of x_1..x_{n-1} handed to a selection when it decides on
/// position n. Reading past the prefix is a causality violation.
class PrefixView {
public:
    explicit PrefixView(std::span<const Label> prefix) : prefix_(prefix) {}

    std::size_t size() const { return prefix_.size(); }

    /// 0-based: element i is x_{i+1}.
    Label operator[](std::size_t i) const {
        if (i >= prefix_.size())
            throw causality_violation("place selection read x_" + std::to_string(i + 1) + " while deciding on position " +
                                      std::to_string(prefix_.size() + 1));
        return prefix_[i];
    }

    bool ends_with(std::span<const Label> word) const {
        if (word.size() > prefix_.size()) return false;
        return std::equal(word.begin(), word.end(), prefix_.end() - static_cast<std::ptrdiff_t>(word.size()));
    }

private:
    std::span<const Label> prefix_;
};

/// A place selection f_n(x_1..x_{n-1}) -> retain/reject. `decide` receives
/// the 1-based position n and the strict prefix.
struct PlaceSelectionRule {
    std::string name;
    std::function<bool(std::size_t n, const PrefixView& prefix)> decide;
    std::optional<std::uint64_t> seed;  // auxiliary randomness, if any
};

inline PlaceSelectionRule identity_rule() {
    return {"identity", [](std::size_t, const PrefixView&) { return true; }, std::nullopt};
}

inline PlaceSelectionRule primes_rule() {
    return {"primes", [](std::size_t n, const PrefixView&) { return nt::is_prime(n); }, std::nullopt};
}

inline PlaceSelectionRule every_rule(std::size_t k, std::size_t offset = 0) {
    if (k == 0) throw input_error("every:k needs k >= 1");
    std::string name = k == 2 && offset == 0 ? "evens" : (k == 2 && offset == 1 ? "odds" : "every:" + std::to_string(k));
    return {name, [k, offset](std::size_t n, const PrefixView&) { return n % k == offset % k; }, std::nullopt};
}

/// Retains x_n when x_{n-|w|}..x_{n-1} spells w.
inline PlaceSelectionRule after_word_rule(std::vector<Label> word, std::string shown) {
    return {"after:" + shown,
            [word = std::move(word)](std::size_t, const PrefixView& prefix) { return prefix.ends_with(word); },
            std::nullopt};
}

/// Retains x_n when an independent seeded coin for position n shows heads.
/// The coin for position n is splitmix64(seed ^ splitmix64(n)), so the
/// decision is reproducible and independent of x.
inline PlaceSelectionRule coin_rule(std::uint64_t seed, double p = 0.5) {
    if (!(p > 0 && p <= 1)) throw input_error("coin probability must lie in (0,1]");
    return {"coin", [seed, p](std::size_t n, const PrefixView&) {
                const std::uint64_t u = splitmix64(seed ^ splitmix64(n));
                return static_cast<double>(u >> 11) * 0x1.0p-53 < p;
            },
            seed};
}

inline const std::vector<std::string>& rule_catalogue() {
    static const std::vector<std::string> names{"identity", "evens",   "odds",     "primes",
                                                "every:<k>", "after:<word>", "coin[:<p>]"};
    return names;
}

/// Parses "name[:param]" from the catalogue. Words for after:<word> are
/// spelled with single-character labels or as comma-free label names
/// separated by '.'.
inline PlaceSelectionRule make_rule(const std::string& spec, const LabelAlphabet& alphabet, std::uint64_t seed) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string param = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto unknown = [&] {
        std::string msg = "unknown selection rule '" + spec + "'; catalogue:";
        for (const auto& n : rule_catalogue()) msg += " " + n;
        return input_error(msg);
    };
    if (name == "identity" && param.empty()) return identity_rule();
    if (name == "evens" && param.empty()) return every_rule(2, 0);
    if (name == "odds" && param.empty()) return every_rule(2, 1);
    if (name == "primes" && param.empty()) return primes_rule();
    if (name == "every") {
        if (param.empty() || param.find_first_not_of("0123456789") != std::string::npos) throw unknown();
        return every_rule(std::stoull(param));
    }
    if (name == "after") {
        if (param.empty()) throw unknown();
        std::vector<Label> word;
        if (param.find('.') != std::string::npos) {
            std::stringstream ss(param);
            std::string tok;
            while (std::getline(ss, tok, '.')) word.push_back(alphabet.index_of(tok));
        } else {
            for (char c : param) word.push_back(alphabet.index_of(std::string(1, c)));
        }
        return after_word_rule(std::move(word), param);
    }
    if (name == "coin") {
        double p = 0.5;
        if (!param.empty()) {
            try {
                p = std::stod(param);
            } catch (const std::exception&) {
                throw unknown();
            }
        }
        auto r = coin_rule(seed, p);
        if (!param.empty()) r.name = "coin:" + param;
        return r;
    }
    throw unknown();
}

/// identity, primes, after:10 over the binary alphabet.
inline std::vector<PlaceSelectionRule> default_ville_family() {
    return {identity_rule(), primes_rule(), after_word_rule({1, 0}, "10")};
}

/// 1-based positions retained by the rule.
inline std::vector<std::size_t> selected_positions(const PlaceSelectionRule& rule, const TrialSequence& x) {
    std::vector<std::size_t> out;
    const auto data = x.data();
    for (std::size_t n = 1; n <= x.size(); ++n)
        if (rule.decide(n, PrefixView(data.first(n - 1)))) out.push_back(n);
    return out;
}

inline TrialSequence select_positions(const TrialSequence& x, const std::vector<std::size_t>& positions) {
    std::vector<Label> out;
    out.reserve(positions.size());
    for (auto p : positions) {
        if (p == 0 || p > x.size()) throw input_error("selected position outside the sequence");
        out.push_back(x[p - 1]);
    }
    return TrialSequence(x.alphabet(), std::move(out));
}

inline TrialSequence apply_selection(const PlaceSelectionRule& rule, const TrialSequence& x) {
    return select_positions(x, selected_positions(rule, x));
}

// ---------------------------------------------------------------------------
// Randomness against a finite family of selections

enum class RuleStatus { pass, fail, inconclusive };

inline const char* to_string(RuleStatus s) {
    switch (s) {
        case RuleStatus::pass: return "pass";
        case RuleStatus::fail: return "fail";
        default: return "inconclusive";
    }
}

struct RuleReport {
    std::string name;
    std::optional<std::uint64_t> seed;
    std::size_t length = 0;
    std::vector<Rational> frequencies;  // per label, of the selected subsequence
    Rational max_deviation;             // vs the frequencies of x
    RuleStatus status = RuleStatus::inconclusive;
};

struct RandomnessReport {
    std::vector<Rational> base_frequencies;
    std::vector<RuleReport> rules;
    double epsilon = 0;
    std::size_t min_length = 0;
    bool passes = true;  // no rule failed; inconclusive rules do not fail
};

inline std::vector<Rational> final_frequencies(const TrialSequence& x) {
    std::vector<std::uint64_t> counts(x.alphabet().size(), 0);
    for (auto l : x.data()) ++counts[l];
    std::vector<Rational> f;
    for (auto c : counts) f.push_back(x.empty() ? Rational(0) : Rational(c, x.size()));
    return f;
}

inline RandomnessReport randomness_check(const TrialSequence& x, const std::vector<PlaceSelectionRule>& family, double eps,
                                         std::size_t min_length = 1000) {
    RandomnessReport r;
    r.base_frequencies = final_frequencies(x);
    r.epsilon = eps;
    r.min_length = min_length;
    const Rational tol(eps);
    for (const auto& rule : family) {
        auto sub = apply_selection(rule, x);
        RuleReport rr;
        rr.name = rule.name;
        rr.seed = rule.seed;
        rr.length = sub.size();
        rr.frequencies = final_frequencies(sub);
        rr.max_deviation = 0;
        for (std::size_t a = 0; a < rr.frequencies.size(); ++a)
            rr.max_deviation = std::max<Rational>(rr.max_deviation, abs(rr.frequencies[a] - r.base_frequencies[a]));
        if (sub.size() < min_length) rr.status = RuleStatus::inconclusive;
        else rr.status = rr.max_deviation <= tol ? RuleStatus::pass : RuleStatus::fail;
        if (rr.status == RuleStatus::fail) r.passes = false;
        r.rules.push_back(std::move(rr));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Mixing and frequency probability

/// x_E: 1 at positions holding a label of E, 0 elsewhere.
inline TrialSequence mix(const TrialSequence& x, const std::vector<Label>& subset) {
    std::vector<bool> in(x.alphabet().size(), false);
    for (auto a : subset) {
        if (a >= x.alphabet().size()) throw input_error("mixing subset contains a label outside the alphabet");
        in[a] = true;
    }
    std::vector<Label> out;
    out.reserve(x.size());
    for (auto l : x.data()) out.push_back(in[l] ? 1 : 0);
    return TrialSequence(LabelAlphabet::binary(), std::move(out));
}

struct FrequencyProbability {
    bool exists = false;        // false: "no frequency probability"
    Rational estimate;          // final-window mean of nu_N(1; x_E)
    Rational final_frequency;   // nu_N(1; x_E) at the full length
    Rational oscillation;
};

inline FrequencyProbability frequency_probability(const TrialSequence& x, const std::vector<Label>& subset,
                                                  std::uint64_t window, double eps) {
    if (x.empty()) throw input_error("empty sequence");
    auto xe = mix(x, subset);
    auto trace = frequencies(xe, stabilization_checkpoints(xe.size(), window));
    auto v = detect_stabilization(trace, window, eps);
    FrequencyProbability fp;
    fp.exists = v.labels[1].stabilized;
    fp.estimate = v.labels[1].estimate;
    fp.oscillation = v.labels[1].oscillation;
    fp.final_frequency = trace.frequency(trace.checkpoints().size() - 1, 1);
    return fp;
}

// ---------------------------------------------------------------------------
// Kamke and Ville

/// Positions {n : x_n = target}. This reads x_n itself, so it is not a
/// place selection; it exists to show what non-causal selection does.
inline std::vector<std::size_t> kamke_adversary(const TrialSequence& x, Label target) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] == target) pos.push_back(i + 1);
    return pos;
}

struct VilleOptions {
    std::size_t min_length = 1000;    // rules selecting fewer positions are not constrained
    std::size_t backtrack_depth = 32;
    std::size_t node_budget = 1U << 20;
};

namespace detail {

struct VilleState {
    std::vector<Label> x;
    std::uint64_t ones = 0;
    std::vector<std::uint64_t> len, ones_sel;
};

inline std::uint64_t imbalance(std::uint64_t ones, std::uint64_t len) {
    const std::uint64_t twice = 2 * ones;
    return twice > len ? twice - len : len - twice;
}

inline bool final_ok(const VilleState& s, std::size_t min_length, const Rational& tol) {
    for (std::size_t r = 0; r < s.len.size(); ++r) {
        if (s.len[r] < min_length || s.len[r] == 0) continue;
        if (abs(Rational(s.ones_sel[r], s.len[r]) - Rational(1, 2)) > tol) return false;
    }
    return true;
}

}  // namespace detail

/// Builds x_1..x_N over {0,1} with running mean >= 1/2 at every prefix and
/// every rule of the family (that selects at least min_length positions)
/// ending within eps of frequency 1/2. Greedy: at each position choose the
/// bit that minimizes the worst count imbalance among the rules selecting
/// that position, subject to the running-mean floor; if the final check
/// fails, depth-first search over the last `backtrack_depth` choices.
inline TrialSequence ville_generator(const std::vector<PlaceSelectionRule>& family, std::size_t n, double eps,
                                     const VilleOptions& opt = {}) {
    if (n < 1000) throw input_error("ville_generator needs N >= 1000");
    const Rational tol(eps);
    const std::size_t rules = family.size();
    detail::VilleState s;
    s.x.reserve(n);
    s.len.assign(rules, 0);
    s.ones_sel.assign(rules, 0);
    std::vector<std::vector<std::size_t>> selecting(n + 1);

    auto push = [&](std::size_t pos, Label b) {
        s.x.push_back(b);
        s.ones += b;
        for (auto r : selecting[pos]) {
            ++s.len[r];
            s.ones_sel[r] += b;
        }
    };
    auto pop = [&](std::size_t pos) {
        const Label b = s.x.back();
        s.x.pop_back();
        s.ones -= b;
        for (auto r : selecting[pos]) {
            --s.len[r];
            s.ones_sel[r] -= b;
        }
    };
    auto floor_ok = [&](std::size_t pos, Label b) { return 2 * (s.ones + b) >= pos; };
    auto compute_selecting = [&](std::size_t pos) {
        selecting[pos].clear();
        PrefixView view(std::span<const Label>(s.x.data(), pos - 1));
        for (std::size_t r = 0; r < rules; ++r)
            if (family[r].decide(pos, view)) selecting[pos].push_back(r);
    };
    // Rule imbalances within +-slack are free; beyond that the worst one
    // dominates. Among equals, keep the overall surplus of ones near slack so
    // that a 0 stays admissible under the floor at the next position.
    constexpr std::uint64_t slack = 2;
    auto greedy_bit = [&](std::size_t pos) -> Label {
        Label best = 1;
        std::uint64_t best_score = UINT64_MAX;
        for (Label b : {Label{0}, Label{1}}) {
            if (!floor_ok(pos, b)) continue;
            std::uint64_t worst = 0;
            for (auto r : selecting[pos]) {
                const auto imb = detail::imbalance(s.ones_sel[r] + b, s.len[r] + 1);
                worst = std::max(worst, imb > slack ? imb - slack : 0);
            }
            const std::uint64_t surplus = 2 * (s.ones + b) - pos;
            const std::uint64_t score = worst * 4 * (pos + 1) + (surplus > slack ? surplus - slack : slack - surplus);
            if (score < best_score) {
                best_score = score;
                best = b;
            }
        }
        return best;
    };

    for (std::size_t pos = 1; pos <= n; ++pos) {
        compute_selecting(pos);
        push(pos, greedy_bit(pos));
    }
    if (detail::final_ok(s, opt.min_length, tol)) return TrialSequence(LabelAlphabet::binary(), s.x);

    // Bounded backtracking over the tail.
    const std::size_t depth = std::min(opt.backtrack_depth, n);
    const std::size_t start = n - depth + 1;
    for (std::size_t pos = n; pos >= start; --pos) pop(pos);
    std::size_t nodes = 0;
    std::function<bool(std::size_t)> dfs = [&](std::size_t pos) -> bool {
        if (pos > n) return detail::final_ok(s, opt.min_length, tol);
        if (++nodes > opt.node_budget) return false;
        compute_selecting(pos);
        const Label first = greedy_bit(pos);
        for (Label b : {first, static_cast<Label>(1 - first)}) {
            if (!floor_ok(pos, b)) continue;
            push(pos, b);
            if (dfs(pos + 1)) return true;
            pop(pos);
        }
        return false;
    };
    if (dfs(start)) return TrialSequence(LabelAlphabet::binary(), s.x);
    throw construction_failure("Ville construction failed within the backtracking budget");
}

/// Properties of a Ville-type sequence, scanned rather than assumed.
struct VilleCheck {
    double min_running_mean = 0;
    bool floor_holds = false;                    // running mean >= 1/2 at every n
    std::vector<std::pair<std::string, double>> rule_deviation;  // |nu(1; phi x) - 1/2|
    std::vector<std::size_t> rule_length;
};

inline VilleCheck check_ville(const TrialSequence& x, const std::vector<PlaceSelectionRule>& family) {
    VilleCheck c;
    c.floor_holds = true;
    c.min_running_mean = 1.0;
    std::uint64_t ones = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ones += x[i];
        if (2 * ones < i + 1) c.floor_holds = false;
        c.min_running_mean = std::min(c.min_running_mean, static_cast<double>(ones) / static_cast<double>(i + 1));
    }
    for (const auto& rule : family) {
        auto sub = apply_selection(rule, x);
        double dev = 0;
        if (!sub.empty()) dev = std::abs(final_frequencies(sub)[1].convert_to<double>() - 0.5);
        c.rule_deviation.emplace_back(rule.name, dev);
        c.rule_length.push_back(sub.size());
    }
    return c;
}

/// r = sum_j x_j 2^-j over the first 64 trials, to double precision.
inline double seq_to_unit_interval(const TrialSequence& x) {
    if (x.alphabet().size() != 2) throw input_error("binary alphabet required");
    std::uint64_t mant = 0;
    const std::size_t n = std::min<std::size_t>(x.size(), 64);
    for (std::size_t i = 0; i < n; ++i) mant = (mant << 1) | x[i];
    if (n == 0) return 0.0;
    return std::ldexp(static_cast<double>(mant), -static_cast<int>(n));
}

}  // namespace collectiva::collectives
