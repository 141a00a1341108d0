#pragma once

// Joint distributions of finitely many discrete observables, their
// marginals, and the question of whether a family of marginals comes from a
// single joint distribution.

#include "collectiva/core.hpp"
#include "collectiva/lp.hpp"
#include "collectiva/polytope.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace collectiva::marginals {

using Tuple = std::vector<long>;

/// Largest permitted joint support; the CLI may lower it.
inline constexpr std::size_t default_support_cap = 1'000'000;

template <class T>
constexpr T consistency_tolerance() {
    if constexpr (scalar_traits<T>::exact) return T(0);
    else return T(1e-9);
}

template <class T>
bool within(const T& a, const T& b) {
    if constexpr (scalar_traits<T>::exact) return a == b;
    else return std::abs(a - b) <= consistency_tolerance<T>();
}

/// Probability mass over the product of finite observable ranges, stored
/// densely in mixed radix (first observable varies slowest).
template <class T>
class JointPMF {
public:
    JointPMF(std::vector<std::string> observables, std::vector<std::vector<long>> ranges)
        : observables_(std::move(observables)), ranges_(std::move(ranges)) {
        if (observables_.size() != ranges_.size()) throw input_error("one range per observable required");
        std::set<std::string> seen;
        for (const auto& o : observables_)
            if (!seen.insert(o).second) throw input_error("duplicate observable '" + o + "'");
        std::size_t size = 1;
        for (auto& r : ranges_) {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
            if (r.empty()) throw input_error("observable range must be nonempty");
            if (size > default_support_cap * 64 / r.size()) throw capacity_error("joint support too large");
            size *= r.size();
        }
        mass_.assign(size, T(0));
    }

    /// Builds and validates (nonnegative, normalized).
    JointPMF(std::vector<std::string> observables, std::vector<std::vector<long>> ranges,
             const std::map<Tuple, T>& masses)
        : JointPMF(std::move(observables), std::move(ranges)) {
        for (const auto& [tuple, m] : masses) at(tuple) += m;
        validate();
    }

    const std::vector<std::string>& observables() const { return observables_; }
    const std::vector<std::vector<long>>& ranges() const { return ranges_; }
    std::size_t support_size() const { return mass_.size(); }
    const std::vector<T>& dense() const { return mass_; }

    Tuple tuple_at(std::size_t index) const {
        Tuple t(ranges_.size());
        for (std::size_t i = ranges_.size(); i-- > 0;) {
            t[i] = ranges_[i][index % ranges_[i].size()];
            index /= ranges_[i].size();
        }
        return t;
    }

    std::size_t index_of(const Tuple& t) const {
        if (t.size() != ranges_.size()) throw input_error("value tuple has wrong arity");
        std::size_t idx = 0;
        for (std::size_t i = 0; i < ranges_.size(); ++i) {
            auto it = std::lower_bound(ranges_[i].begin(), ranges_[i].end(), t[i]);
            if (it == ranges_[i].end() || *it != t[i])
                throw input_error("value " + std::to_string(t[i]) + " outside the range of '" + observables_[i] + "'");
            idx = idx * ranges_[i].size() + static_cast<std::size_t>(it - ranges_[i].begin());
        }
        return idx;
    }

    T& at(const Tuple& t) { return mass_[index_of(t)]; }
    const T& at(const Tuple& t) const { return mass_[index_of(t)]; }
    const T& at_index(std::size_t i) const { return mass_[i]; }
    T& at_index(std::size_t i) { return mass_[i]; }

    std::size_t position(const std::string& name) const {
        auto it = std::find(observables_.begin(), observables_.end(), name);
        if (it == observables_.end()) throw input_error("unknown observable '" + name + "'");
        return static_cast<std::size_t>(it - observables_.begin());
    }

    bool has(const std::string& name) const {
        return std::find(observables_.begin(), observables_.end(), name) != observables_.end();
    }

    void validate() const {
        T sum{};
        for (const auto& m : mass_) {
            if (m < T(0) && !within(m, T(0))) throw input_error("negative probability mass");
            sum += m;
        }
        if (!within(sum, T(1))) throw normalization_error("probability masses do not sum to 1");
    }

    friend bool operator==(const JointPMF&, const JointPMF&) = default;

private:
    std::vector<std::string> observables_;
    std::vector<std::vector<long>> ranges_;
    std::vector<T> mass_;
};

/// Sums out every observable not in `subset`; the result follows the order
/// given in `subset`.
template <class T>
JointPMF<T> marginalize(const JointPMF<T>& joint, const std::vector<std::string>& subset) {
    std::vector<std::size_t> pos;
    std::vector<std::vector<long>> ranges;
    for (const auto& name : subset) {
        pos.push_back(joint.position(name));
        ranges.push_back(joint.ranges()[pos.back()]);
    }
    JointPMF<T> out(subset, ranges);
    Tuple sub(subset.size());
    for (std::size_t i = 0; i < joint.support_size(); ++i) {
        if (joint.at_index(i) == T(0)) continue;
        const Tuple full = joint.tuple_at(i);
        for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
        out.at(sub) += joint.at_index(i);
    }
    return out;
}

template <class T>
T max_deviation(const JointPMF<T>& a, const JointPMF<T>& b) {
    T worst{};
    for (std::size_t i = 0; i < a.support_size(); ++i) {
        T d = a.at_index(i) - b.at(a.tuple_at(i));
        if (d < T(0)) d = -d;
        if (d > worst) worst = d;
    }
    return worst;
}

/// Distributions over (ordered) subsets of observables.
template <class T>
using MarginalFamily = std::vector<JointPMF<T>>;

template <class T>
struct SignalingViolation {
    std::size_t first = 0, second = 0;  // family indices
    std::vector<std::string> observables;
    T deviation{};
};

template <class T>
struct NoSignalingReport {
    bool consistent = true;
    std::vector<SignalingViolation<T>> violations;
};

namespace detail {

template <class T>
void check_ranges_agree(const MarginalFamily<T>& family) {
    std::map<std::string, std::vector<long>> ranges;
    for (const auto& pmf : family)
        for (std::size_t i = 0; i < pmf.observables().size(); ++i) {
            auto [it, fresh] = ranges.emplace(pmf.observables()[i], pmf.ranges()[i]);
            if (!fresh && it->second != pmf.ranges()[i])
                throw input_error("observable '" + pmf.observables()[i] + "' has different ranges across the family");
        }
}

}  // namespace detail

/// Every pair of family members that share observables must induce the
/// same marginal on the shared set.
template <class T>
NoSignalingReport<T> check_no_signaling(const MarginalFamily<T>& family) {
    detail::check_ranges_agree(family);
    NoSignalingReport<T> report;
    for (std::size_t i = 0; i < family.size(); ++i) {
        for (std::size_t j = i + 1; j < family.size(); ++j) {
            std::vector<std::string> common;
            for (const auto& o : family[i].observables())
                if (family[j].has(o)) common.push_back(o);
            if (common.empty()) continue;
            auto mi = marginalize(family[i], common);
            auto mj = marginalize(family[j], common);
            T dev = max_deviation(mi, mj);
            if (!within(dev, T(0))) {
                report.consistent = false;
                report.violations.push_back({i, j, common, dev});
            }
        }
    }
    return report;
}

struct ViolatedFunctional {
    std::string name;
    double value = 0;
    double bound = 0;
};

template <class T>
struct FeasibilityVerdict {
    bool feasible = false;
    std::optional<JointPMF<T>> witness;
    std::optional<ViolatedFunctional> violated;
    std::vector<SignalingViolation<T>> signaling;
};

/// Decides whether some joint distribution over all observables of the
/// family reproduces every member as a marginal, by a phase-1 simplex over
/// the joint masses. A feasible verdict carries the witness joint.
template <class T>
FeasibilityVerdict<T> joint_exists(const MarginalFamily<T>& family, std::size_t support_cap = default_support_cap) {
    FeasibilityVerdict<T> verdict;
    if (family.empty()) throw input_error("empty marginal family");
    for (const auto& m : family) m.validate();
    auto ns = check_no_signaling(family);
    if (!ns.consistent) {
        verdict.signaling = ns.violations;
        const auto& v = ns.violations.front();
        std::string name = "no-signaling on {";
        for (std::size_t k = 0; k < v.observables.size(); ++k) name += (k ? "," : "") + v.observables[k];
        name += "} between members " + std::to_string(v.first) + " and " + std::to_string(v.second);
        verdict.violated = ViolatedFunctional{name, scalar_traits<T>::to_double(v.deviation), 0.0};
        return verdict;
    }

    std::vector<std::string> names;
    std::vector<std::vector<long>> ranges;
    std::size_t support = 1;
    for (const auto& m : family)
        for (std::size_t i = 0; i < m.observables().size(); ++i)
            if (std::find(names.begin(), names.end(), m.observables()[i]) == names.end()) {
                names.push_back(m.observables()[i]);
                ranges.push_back(m.ranges()[i]);
                if (support > support_cap / ranges.back().size())
                    throw capacity_error("joint support exceeds the cap of " + std::to_string(support_cap) + " atoms");
                support *= ranges.back().size();
            }
    JointPMF<T> joint(names, ranges);

    // One equality row per (member, value tuple).
    std::vector<std::vector<T>> a;
    std::vector<T> b;
    std::vector<std::vector<std::size_t>> positions;
    for (const auto& m : family) {
        std::vector<std::size_t> pos;
        for (const auto& o : m.observables()) pos.push_back(joint.position(o));
        positions.push_back(pos);
    }
    for (std::size_t f = 0; f < family.size(); ++f) {
        const auto& m = family[f];
        std::vector<std::vector<T>> rows(m.support_size(), std::vector<T>(support, T(0)));
        Tuple sub(positions[f].size());
        for (std::size_t atom = 0; atom < support; ++atom) {
            const Tuple full = joint.tuple_at(atom);
            for (std::size_t k = 0; k < sub.size(); ++k) sub[k] = full[positions[f][k]];
            rows[m.index_of(sub)][atom] = T(1);
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            a.push_back(std::move(rows[r]));
            b.push_back(m.at_index(r));
        }
    }
    auto res = lp::find_feasible_point(a, b);
    if (!res.feasible) {
        verdict.violated = ViolatedFunctional{"phase-1 residual (minimum unexplained marginal mass)",
                                              scalar_traits<T>::to_double(res.infeasibility), 0.0};
        return verdict;
    }
    for (std::size_t atom = 0; atom < support; ++atom) joint.at_index(atom) = res.x[atom];
    for (const auto& m : family) {
        if (!within(max_deviation(marginalize(joint, m.observables()), m), T(0)))
            throw integrity_error("witness does not reproduce the input marginals");
    }
    verdict.feasible = true;
    verdict.witness = std::move(joint);
    return verdict;
}

/// Pairwise correlations of three +-1 observables, optionally with means.
template <class T>
struct CorrelationTriple {
    T e12{}, e23{}, e13{};
    std::optional<std::array<T, 3>> means;

    void validate() const {
        auto in = [](const T& v) { return !(v < T(-1)) && !(v > T(1)); };
        if (!in(e12) || !in(e23) || !in(e13)) throw input_error("correlation outside [-1,1]");
        if (means)
            for (const auto& m : *means)
                if (!in(m)) throw input_error("mean outside [-1,1]");
    }

    T mean(std::size_t i) const { return means ? (*means)[i] : T(0); }

    /// Pairwise pmfs p(s_i, s_j) = (1 + s_i m_i + s_j m_j + s_i s_j E_ij) / 4
    /// over observables a1, a2, a3. Not validated: entries may be negative
    /// for inputs outside the pairwise-feasible region.
    MarginalFamily<T> to_family() const {
        MarginalFamily<T> fam;
        auto pair = [&](std::size_t i, std::size_t j, const T& e) {
            JointPMF<T> p({"a" + std::to_string(i + 1), "a" + std::to_string(j + 1)}, {{-1, 1}, {-1, 1}});
            for (long si : {-1L, 1L})
                for (long sj : {-1L, 1L})
                    p.at({si, sj}) = (T(1) + T(si) * mean(i) + T(sj) * mean(j) + T(si * sj) * e) / T(4);
            fam.push_back(std::move(p));
        };
        pair(0, 1, e12);
        pair(1, 2, e23);
        pair(0, 2, e13);
        return fam;
    }

    /// Coordinates in catalogue order: [m1 m2 m3] E12 E13 E23.
    std::vector<T> coordinates() const {
        std::vector<T> c;
        if (means) c.insert(c.end(), means->begin(), means->end());
        c.push_back(e12);
        c.push_back(e13);
        c.push_back(e23);
        return c;
    }
};

template <class T>
struct BooleBellResult {
    std::string facet;   // e.g. "-E12 -E13 +E23 <= 1"
    T value{};           // functional evaluated at the input
    T bound{};
    bool violated = false;
    std::size_t facets_checked = 0;
};

/// Evaluates every facet of the generated correlation polytope and returns
/// the one with the largest excess over its bound.
template <class T>
BooleBellResult<T> evaluate_facets(const polytope::CorrelationCatalogue& cat, const std::vector<T>& coords) {
    BooleBellResult<T> best;
    bool first = true;
    T best_excess{};
    for (const auto& f : cat.facets) {
        T v{};
        for (std::size_t i = 0; i < coords.size(); ++i) v += scalar_from_rational<T>(f.normal[i]) * coords[i];
        const T bound = scalar_from_rational<T>(f.bound);
        const T excess = v - bound;
        if (first || excess > best_excess) {
            first = false;
            best_excess = excess;
            best.facet = polytope::describe(f, cat.coordinates);
            best.value = v;
            best.bound = bound;
        }
    }
    best.facets_checked = cat.facets.size();
    best.violated = best.value > best.bound && !within(best.value, best.bound);
    return best;
}

template <class T>
BooleBellResult<T> boole_bell_value(const CorrelationTriple<T>& triple) {
    triple.validate();
    return evaluate_facets(polytope::correlation_catalogue(3, triple.means.has_value()), triple.coordinates());
}

template <class T>
FeasibilityVerdict<T> joint_exists(const CorrelationTriple<T>& triple) {
    triple.validate();
    auto fam = triple.to_family();
    for (const auto& pmf : fam)
        for (const auto& m : pmf.dense())
            if (m < T(0) && !within(m, T(0))) {
                FeasibilityVerdict<T> v;
                auto bb = boole_bell_value(triple);
                v.violated = ViolatedFunctional{"pairwise pmf nonnegativity (" + bb.facet + ")",
                                                scalar_traits<T>::to_double(bb.value), scalar_traits<T>::to_double(bb.bound)};
                return v;
            }
    auto verdict = joint_exists(fam);
    if (!verdict.feasible) {
        auto bb = boole_bell_value(triple);
        verdict.violated = ViolatedFunctional{bb.facet, scalar_traits<T>::to_double(bb.value), scalar_traits<T>::to_double(bb.bound)};
    }
    return verdict;
}

struct ConsistencyViolation {
    enum class Kind { permutation, projection } kind;
    std::size_t larger = 0, smaller = 0;  // family indices
    double deviation = 0;
};

struct ConsistencyReport {
    bool consistent = true;
    std::vector<ConsistencyViolation> violations;
};

/// Finite-dimensional consistency of a family indexed by ordered tuples:
///  - permutation: members over the same index set in different orders
///    agree after reordering;
///  - projection: a member over a strict subset of another member's
///    indices equals the corresponding marginal.
template <class T>
ConsistencyReport kolmogorov_consistency(const MarginalFamily<T>& family) {
    detail::check_ranges_agree(family);
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = i + 1; j < family.size(); ++j)
            if (family[i].observables() == family[j].observables())
                throw input_error("family contains the same index tuple twice");
    ConsistencyReport report;
    auto as_set = [](const JointPMF<T>& p) {
        return std::set<std::string>(p.observables().begin(), p.observables().end());
    };
    for (std::size_t i = 0; i < family.size(); ++i) {
        for (std::size_t j = 0; j < family.size(); ++j) {
            if (i == j) continue;
            const auto si = as_set(family[i]), sj = as_set(family[j]);
            ConsistencyViolation::Kind kind;
            if (si == sj) {
                if (j < i) continue;  // each unordered pair once
                kind = ConsistencyViolation::Kind::permutation;
            } else if (std::includes(si.begin(), si.end(), sj.begin(), sj.end())) {
                kind = ConsistencyViolation::Kind::projection;
            } else {
                continue;
            }
            T dev = max_deviation(marginalize(family[i], family[j].observables()), family[j]);
            if (!within(dev, T(0))) {
                report.consistent = false;
                report.violations.push_back({kind, i, j, scalar_traits<T>::to_double(dev)});
            }
        }
    }
    return report;
}

}  // namespace collectiva::marginals
