#pragma once

// Kolmogorov probability spaces over a finite set of atoms.
//
// Events are bitmasks over a fixed atom ordering (at most 64 atoms). An event
// algebra is represented by its blocks, the minimal nonempty events; every
// event of the algebra is a union of blocks. Weights live on blocks, so
// additivity holds by construction and an event that cuts through a block is
// reported as not measurable instead of receiving a probability.

#include "collectiva/core.hpp"
#include "collectiva/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace collectiva::finite {

inline constexpr std::size_t max_atoms = 64;
inline constexpr std::size_t max_algebra_blocks = 20;  // 2^20 events

class Event {
public:
    constexpr Event() = default;
    constexpr explicit Event(std::uint64_t mask) : mask_(mask) {}

    static Event of(std::initializer_list<std::size_t> atoms) {
        std::uint64_t m = 0;
        for (auto a : atoms) m |= std::uint64_t{1} << a;
        return Event(m);
    }

    constexpr std::uint64_t mask() const { return mask_; }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr bool contains(std::size_t atom) const { return (mask_ >> atom) & 1U; }
    constexpr bool subset_of(Event other) const { return (mask_ & ~other.mask_) == 0; }
    constexpr bool disjoint(Event other) const { return (mask_ & other.mask_) == 0; }
    int size() const { return std::popcount(mask_); }

    friend constexpr Event operator|(Event a, Event b) { return Event(a.mask_ | b.mask_); }
    friend constexpr Event operator&(Event a, Event b) { return Event(a.mask_ & b.mask_); }
    friend constexpr bool operator==(Event, Event) = default;
    friend constexpr auto operator<=>(Event a, Event b) { return a.mask_ <=> b.mask_; }

private:
    std::uint64_t mask_ = 0;
};

class SampleSpace {
public:
    explicit SampleSpace(std::vector<std::string> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw input_error("sample space needs at least one atom");
        if (atoms_.size() > max_atoms)
            throw capacity_error("sample space limited to " + std::to_string(max_atoms) + " atoms");
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (!index_.emplace(atoms_[i], i).second)
                throw input_error("duplicate atom identifier '" + atoms_[i] + "'");
        }
    }

    /// Atoms named "1".."n".
    static SampleSpace numbered(std::size_t n) {
        std::vector<std::string> names;
        for (std::size_t i = 1; i <= n; ++i) names.push_back(std::to_string(i));
        return SampleSpace(std::move(names));
    }

    std::size_t size() const { return atoms_.size(); }
    const std::vector<std::string>& atoms() const { return atoms_; }

    std::size_t index_of(const std::string& atom) const {
        auto it = index_.find(atom);
        if (it == index_.end()) throw input_error("unknown atom '" + atom + "'");
        return it->second;
    }

    Event full() const { return Event(size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << size()) - 1); }
    Event complement(Event e) const { return Event(full().mask() & ~e.mask()); }
    bool owns(Event e) const { return e.subset_of(full()); }

    Event event(const std::vector<std::string>& names) const {
        std::uint64_t m = 0;
        for (const auto& n : names) m |= std::uint64_t{1} << index_of(n);
        return Event(m);
    }

    friend bool operator==(const SampleSpace& a, const SampleSpace& b) { return a.atoms_ == b.atoms_; }

private:
    std::vector<std::string> atoms_;
    std::unordered_map<std::string, std::size_t> index_;
};

class EventAlgebra {
public:
    const SampleSpace& space() const { return space_; }

    /// Minimal nonempty events, ordered by lowest atom.
    const std::vector<Event>& blocks() const { return blocks_; }

    std::size_t size() const { return std::size_t{1} << blocks_.size(); }

    /// Membership: E is a union of blocks. O(popcount(E)).
    bool contains(Event e) const {
        if (!space_.owns(e)) return false;
        std::uint64_t m = e.mask();
        while (m) {
            const auto atom = static_cast<std::size_t>(std::countr_zero(m));
            const Event b = blocks_[block_of_[atom]];
            if (!b.subset_of(e)) return false;
            m &= ~b.mask();
        }
        return true;
    }

    std::size_t block_of(std::size_t atom) const { return block_of_.at(atom); }

    /// Every event of the algebra, in increasing order of block subset code.
    std::vector<Event> events() const {
        std::vector<Event> out;
        out.reserve(size());
        for (std::uint64_t code = 0; code < size(); ++code) out.push_back(union_of(code));
        return out;
    }

    /// Union of the blocks whose bits are set in `code`.
    Event union_of(std::uint64_t code) const {
        std::uint64_t m = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            if ((code >> b) & 1U) m |= blocks_[b].mask();
        return Event(m);
    }

    bool is_power_set() const { return blocks_.size() == space_.size(); }

    /// Algebra from an explicit event list that must already be closed
    /// under union, intersection and complement (and contain the empty set
    /// and the whole space).
    static EventAlgebra from_closed_events(const SampleSpace& space, const std::vector<Event>& events) {
        std::vector<std::uint64_t> sorted;
        for (auto e : events) {
            if (!space.owns(e)) throw input_error("event references an atom outside the sample space");
            sorted.push_back(e.mask());
        }
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        auto has = [&](std::uint64_t m) { return std::binary_search(sorted.begin(), sorted.end(), m); };
        if (!has(0) || !has(space.full().mask())) throw input_error("event collection lacks the empty set or the whole space");
        if (sorted.size() > (std::size_t{1} << 16))
            throw capacity_error("explicit closure check limited to 2^16 events");
        for (auto a : sorted) {
            if (!has(space.complement(Event(a)).mask())) throw input_error("event collection not closed under complement");
            for (auto b : sorted) {
                if (!has(a | b) || !has(a & b)) throw input_error("event collection not closed under union/intersection");
            }
        }
        std::vector<Event> gens;
        for (auto m : sorted) gens.emplace_back(m);
        return generate(space, gens);
    }

    template <class>
    friend class FiniteProbabilitySpace;
    friend EventAlgebra build_algebra(const SampleSpace&, const std::vector<Event>&);

private:
    EventAlgebra(SampleSpace space, std::vector<Event> blocks) : space_(std::move(space)), blocks_(std::move(blocks)) {
        block_of_.assign(space_.size(), 0);
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            for (std::size_t a = 0; a < space_.size(); ++a)
                if (blocks_[b].contains(a)) block_of_[a] = b;
    }

    static EventAlgebra generate(const SampleSpace& space, const std::vector<Event>& generators) {
        // Atoms with identical membership across all generators are
        // indistinguishable; each such class is one block.
        std::map<std::vector<bool>, std::uint64_t> classes;
        std::vector<std::vector<bool>> signature(space.size());
        for (std::size_t a = 0; a < space.size(); ++a) {
            std::vector<bool> sig;
            sig.reserve(generators.size());
            for (auto g : generators) sig.push_back(g.contains(a));
            classes[sig] |= std::uint64_t{1} << a;
        }
        if (classes.size() > max_algebra_blocks)
            throw capacity_error("generated algebra would have 2^" + std::to_string(classes.size()) +
                                 " events; limit is 2^" + std::to_string(max_algebra_blocks));
        std::vector<Event> blocks;
        for (const auto& [sig, mask] : classes) blocks.emplace_back(mask);
        std::sort(blocks.begin(), blocks.end(), [](Event x, Event y) {
            return std::countr_zero(x.mask()) < std::countr_zero(y.mask());
        });
        return EventAlgebra(space, std::move(blocks));
    }

    SampleSpace space_;
    std::vector<Event> blocks_;
    std::vector<std::size_t> block_of_;
};

/// Smallest algebra containing every generator.
inline EventAlgebra build_algebra(const SampleSpace& space, const std::vector<Event>& generators) {
    for (auto g : generators)
        if (!space.owns(g)) throw input_error("generator references an atom outside the sample space");
    return EventAlgebra::generate(space, generators);
}

inline EventAlgebra power_set(const SampleSpace& space) {
    std::vector<Event> singletons;
    for (std::size_t a = 0; a < space.size(); ++a) singletons.push_back(Event::of({a}));
    return build_algebra(space, singletons);
}

template <class T>
class RandomVariable {
public:
    RandomVariable(const SampleSpace& space, std::vector<T> values) : values_(std::move(values)) {
        if (values_.size() != space.size())
            throw input_error("random variable must assign a value to every atom");
    }

    const std::vector<T>& values() const { return values_; }
    const T& operator()(std::size_t atom) const { return values_.at(atom); }
    std::size_t size() const { return values_.size(); }

    /// Preimage {w : a(w) = v}.
    Event preimage(const T& v) const {
        std::uint64_t m = 0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (values_[i] == v) m |= std::uint64_t{1} << i;
        return Event(m);
    }

    std::vector<T> range() const {
        std::vector<T> r = values_;
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        return r;
    }

private:
    std::vector<T> values_;
};

template <class T>
class FiniteProbabilitySpace;

/// Pairwise-disjoint events of positive probability covering the space.
template <class T>
class Partition {
public:
    const std::vector<Event>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }

    static Partition make(const FiniteProbabilitySpace<T>& space, std::vector<Event> blocks);

private:
    explicit Partition(std::vector<Event> blocks) : blocks_(std::move(blocks)) {}
    std::vector<Event> blocks_;
};

template <class T>
struct TotalProbability {
    T total{};
    std::vector<T> terms;  // P(A_k) * P(B | A_k)
};

template <class T>
class FiniteProbabilitySpace {
    using traits = scalar_traits<T>;

public:
    /// Weights on the algebra's blocks, in block order.
    FiniteProbabilitySpace(EventAlgebra algebra, std::vector<T> block_weights)
        : algebra_(std::move(algebra)), weights_(std::move(block_weights)) {
        if (weights_.size() != algebra_.blocks().size())
            throw input_error("need exactly one weight per block of the algebra");
        T sum{};
        for (const auto& w : weights_) {
            if (w < T(0) || w > T(1)) throw input_error("block weight outside [0,1]");
            sum += w;
        }
        if (!traits::equal(sum, T(1))) throw normalization_error("weights do not sum to 1");
    }

    /// Measure determined by weights of arbitrary events of the algebra.
    /// The weights must pin down every block weight uniquely.
    static FiniteProbabilitySpace from_event_weights(EventAlgebra algebra,
                                                     const std::vector<std::pair<Event, Rational>>& weighted) {
        const auto& blocks = algebra.blocks();
        linalg::Matrix a;
        std::vector<Rational> b;
        a.emplace_back(blocks.size(), Rational(1));
        b.emplace_back(1);
        for (const auto& [e, w] : weighted) {
            if (!algebra.contains(e)) throw not_measurable("weighted event is not in the algebra");
            std::vector<Rational> row;
            for (auto blk : blocks) row.emplace_back(blk.subset_of(e) ? 1 : 0);
            a.push_back(std::move(row));
            b.push_back(w);
        }
        auto sol = linalg::solve(a, b);
        if (!sol) throw input_error("event weights are inconsistent (violate additivity or normalization)");
        if (!sol->unique) throw input_error("event weights do not determine the measure on every block");
        std::vector<T> w;
        for (const auto& x : sol->x) w.push_back(scalar_from_rational<T>(x));
        return FiniteProbabilitySpace(std::move(algebra), std::move(w));
    }

    static FiniteProbabilitySpace uniform(const SampleSpace& space) {
        std::vector<T> w(space.size(), scalar_from_rational<T>(Rational(1, space.size())));
        return FiniteProbabilitySpace(power_set(space), std::move(w));
    }

    const EventAlgebra& algebra() const { return algebra_; }
    const SampleSpace& sample_space() const { return algebra_.space(); }
    const std::vector<T>& block_weights() const { return weights_; }

    T probability(Event e) const {
        if (!algebra_.contains(e)) throw not_measurable("event not measurable");
        T p{};
        for (std::size_t b = 0; b < weights_.size(); ++b)
            if (algebra_.blocks()[b].subset_of(e)) p += weights_[b];
        return p;
    }

    bool is_measurable(const RandomVariable<T>& a) const {
        if (a.size() != sample_space().size()) throw input_error("random variable defined on a different sample space");
        for (const auto& v : a.range())
            if (!algebra_.contains(a.preimage(v))) return false;
        return true;
    }

    /// p^a(v) = P(a = v) over the range of a.
    std::map<T, T> distribution(const RandomVariable<T>& a) const {
        require_measurable(a);
        std::map<T, T> pmf;
        for (const auto& v : a.range()) pmf.emplace(v, probability(a.preimage(v)));
        return pmf;
    }

    T expectation(const RandomVariable<T>& a) const {
        T e{};
        for (const auto& [v, p] : distribution(a)) e += v * p;
        return e;
    }

    /// P(B | C) by the Bayes quotient.
    T conditional(Event b, Event c) const {
        if (!algebra_.contains(b)) throw not_measurable("event not measurable");
        const T pc = probability(c);
        if (traits::is_zero(pc)) throw conditioning_error("conditioning on null event");
        return probability(b & c) / pc;
    }

    /// The measure B -> P(B | C) on the same algebra.
    FiniteProbabilitySpace conditioned_on(Event c) const {
        const T pc = probability(c);
        if (traits::is_zero(pc)) throw conditioning_error("conditioning on null event");
        std::vector<T> w;
        for (std::size_t b = 0; b < weights_.size(); ++b)
            w.push_back(algebra_.blocks()[b].subset_of(c) ? weights_[b] / pc : T(0));
        return FiniteProbabilitySpace(algebra_, std::move(w));
    }

    bool independent(Event a, Event b) const {
        return traits::equal(probability(a & b), probability(a) * probability(b));
    }

    /// Sum over the partition of P(A_k) P(B|A_k); verified against P(B).
    TotalProbability<T> total_probability(const Partition<T>& partition, Event b) const {
        TotalProbability<T> out;
        for (auto blk : partition.blocks()) {
            T term = probability(blk) * conditional(b, blk);
            out.total += term;
            out.terms.push_back(std::move(term));
        }
        if (!traits::equal(out.total, probability(b)))
            throw integrity_error("total probability disagrees with P(B)");
        return out;
    }

    /// Blocks are the preimages of the values of a, in increasing value order.
    Partition<T> partition_from_rv(const RandomVariable<T>& a) const {
        require_measurable(a);
        std::vector<Event> blocks;
        for (const auto& v : a.range()) {
            Event pre = a.preimage(v);
            if (traits::is_zero(probability(pre)))
                throw input_error("value of the random variable has probability 0; partition blocks must be positive");
            blocks.push_back(pre);
        }
        return Partition<T>::make(*this, std::move(blocks));
    }

private:
    void require_measurable(const RandomVariable<T>& a) const {
        if (!is_measurable(a)) throw not_measurable("random variable not measurable with respect to the algebra");
    }

    EventAlgebra algebra_;
    std::vector<T> weights_;
};

template <class T>
Partition<T> Partition<T>::make(const FiniteProbabilitySpace<T>& space, std::vector<Event> blocks) {
    Event cover;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!cover.disjoint(blocks[i]))
            throw input_error("invalid partition: block " + std::to_string(i) + " overlaps an earlier block");
        cover = cover | blocks[i];
        if (!space.algebra().contains(blocks[i]))
            throw not_measurable("invalid partition: block " + std::to_string(i) + " is not measurable");
        if (scalar_traits<T>::is_zero(space.probability(blocks[i])))
            throw input_error("invalid partition: block " + std::to_string(i) + " has probability 0");
    }
    if (cover != space.sample_space().full()) throw input_error("invalid partition: blocks do not cover the sample space");
    return Partition<T>(std::move(blocks));
}

/// Exhaustive checks of the structural invariants. Returns the first
/// violation found, or nullopt.
template <class T>
std::optional<std::string> check_invariants(const FiniteProbabilitySpace<T>& space) {
    using traits = scalar_traits<T>;
    const auto events = space.algebra().events();
    if (events.size() > (std::size_t{1} << 12)) return std::nullopt;  // quadratic check; callers cap size
    const auto& omega = space.sample_space();
    if (!traits::equal(space.probability(omega.full()), T(1))) return "P(Omega) != 1";
    if (!traits::is_zero(space.probability(Event()))) return "P(empty) != 0";
    for (auto a : events) {
        const T pa = space.probability(a);
        if (pa < T(0) || pa > T(1)) return "probability outside [0,1]";
        if (!space.algebra().contains(omega.complement(a))) return "algebra not closed under complement";
        for (auto b : events) {
            if (!space.algebra().contains(a | b) || !space.algebra().contains(a & b))
                return "algebra not closed under union/intersection";
            if (a.disjoint(b) && !traits::equal(space.probability(a | b), pa + space.probability(b)))
                return "additivity violated";
        }
    }
    return std::nullopt;
}

}  // namespace collectiva::finite
