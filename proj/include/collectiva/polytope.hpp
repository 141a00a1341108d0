#pragma once

// Facet enumeration for small full-dimensional polytopes given by vertices,
// and the correlation-polytope catalogue built from deterministic +-1
// assignments.

#include "collectiva/core.hpp"
#include "collectiva/linalg.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

namespace collectiva::polytope {

/// normal . x <= bound, with integer coefficients of gcd 1.
struct Facet {
    std::vector<Rational> normal;
    Rational bound;
    friend bool operator==(const Facet&, const Facet&) = default;
};

namespace detail {

inline Facet normalize(std::vector<Rational> normal, Rational bound) {
    BigInt l = 1;
    auto lcm = [](const BigInt& x, const BigInt& y) { return x / boost::multiprecision::gcd(x, y) * y; };
    for (const auto& v : normal) l = lcm(l, boost::multiprecision::denominator(v));
    l = lcm(l, boost::multiprecision::denominator(bound));
    BigInt g = 0;
    for (auto& v : normal) {
        v *= l;
        g = boost::multiprecision::gcd(g, boost::multiprecision::numerator(v));
    }
    bound *= l;
    g = boost::multiprecision::gcd(g, boost::multiprecision::numerator(bound));
    if (g != 0 && g != 1) {
        for (auto& v : normal) v /= Rational(g);
        bound /= Rational(g);
    }
    return {std::move(normal), std::move(bound)};
}

template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        f(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace detail

/// All facets of conv(vertices). Vertices must affinely span their space.
/// Brute force over d-subsets; intended for d <= 10 and a few dozen vertices.
inline std::vector<Facet> enumerate_facets(const std::vector<std::vector<Rational>>& vertices) {
    if (vertices.empty()) return {};
    const std::size_t d = vertices.front().size();
    {
        linalg::Matrix diffs;
        for (const auto& v : vertices) {
            std::vector<Rational> row;
            for (std::size_t i = 0; i < d; ++i) row.push_back(v[i] - vertices.front()[i]);
            diffs.push_back(std::move(row));
        }
        if (linalg::rank(diffs) != d) throw input_error("vertex set is not full-dimensional");
    }
    std::vector<Facet> facets;
    detail::for_each_combination(vertices.size(), d, [&](const std::vector<std::size_t>& pick) {
        // a . v_i - b = 0 for each picked vertex
        linalg::Matrix m;
        for (auto i : pick) {
            std::vector<Rational> row(vertices[i].begin(), vertices[i].end());
            row.emplace_back(-1);
            m.push_back(std::move(row));
        }
        auto ns = linalg::null_space(m, d + 1);
        if (ns.size() != 1) return;
        std::vector<Rational> normal(ns[0].begin(), ns[0].begin() + static_cast<std::ptrdiff_t>(d));
        Rational bound = ns[0][d];
        if (std::all_of(normal.begin(), normal.end(), [](const Rational& v) { return v == 0; })) return;
        int sign = 0;
        for (const auto& v : vertices) {
            Rational s = -bound;
            for (std::size_t i = 0; i < d; ++i) s += normal[i] * v[i];
            const int here = s > 0 ? 1 : (s < 0 ? -1 : 0);
            if (here == 0) continue;
            if (sign == 0) sign = here;
            else if (sign != here) return;
        }
        if (sign > 0) {
            for (auto& v : normal) v = -v;
            bound = -bound;
        }
        Facet f = detail::normalize(std::move(normal), std::move(bound));
        if (std::find(facets.begin(), facets.end(), f) == facets.end()) facets.push_back(std::move(f));
    });
    return facets;
}

/// Coordinates of the correlation polytope of n observables with values +-1:
/// optional means <a_i> first, then pair correlations <a_i a_j> for i < j in
/// lexicographic order.
struct CorrelationCatalogue {
    std::size_t observables = 0;
    bool with_means = false;
    std::vector<std::string> coordinates;  // "m1", "E12", ...
    std::vector<Facet> facets;
};

inline CorrelationCatalogue build_correlation_catalogue(std::size_t n, bool with_means) {
    CorrelationCatalogue cat;
    cat.observables = n;
    cat.with_means = with_means;
    if (with_means)
        for (std::size_t i = 1; i <= n; ++i) cat.coordinates.push_back("m" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j) cat.coordinates.push_back("E" + std::to_string(i) + std::to_string(j));

    std::vector<std::vector<Rational>> verts;
    for (std::size_t code = 0; code < (std::size_t{1} << n); ++code) {
        std::vector<int> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = ((code >> i) & 1U) ? -1 : 1;
        std::vector<Rational> v;
        if (with_means)
            for (auto si : s) v.emplace_back(si);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) v.emplace_back(s[i] * s[j]);
        if (std::find(verts.begin(), verts.end(), v) == verts.end()) verts.push_back(std::move(v));
    }
    cat.facets = enumerate_facets(verts);
    return cat;
}

/// Catalogue for 3 or 4 observables, generated on first use and cached.
inline const CorrelationCatalogue& correlation_catalogue(std::size_t n, bool with_means) {
    if (n < 2 || n > 4) throw input_error("correlation catalogue available for 2 to 4 observables");
    static std::mutex mu;
    static std::map<std::pair<std::size_t, bool>, CorrelationCatalogue> cache;
    std::lock_guard lock(mu);
    auto key = std::make_pair(n, with_means);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_correlation_catalogue(n, with_means)).first;
    return it->second;
}

inline std::string describe(const Facet& f, const std::vector<std::string>& coords) {
    std::string s;
    for (std::size_t i = 0; i < f.normal.size(); ++i) {
        if (f.normal[i] == 0) continue;
        if (!s.empty()) s += " ";
        s += f.normal[i] > 0 ? "+" : "-";
        Rational mag = abs(f.normal[i]);
        if (mag != 1) s += boost::multiprecision::numerator(mag).str();
        s += coords[i];
    }
    return s + " <= " + boost::multiprecision::numerator(f.bound).str();
}

}  // namespace collectiva::polytope
