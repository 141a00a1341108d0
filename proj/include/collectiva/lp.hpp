#pragma once

// Phase-1 simplex: find x >= 0 with A x = b, or prove none exists.
// Dense tableau with Bland's rule, so it terminates on degenerate problems.
// Works over Rational (exact) and double (pivot tolerance 1e-12).

#include "collectiva/core.hpp"

#include <optional>
#include <vector>

namespace collectiva::lp {

template <class T>
struct FeasibilityResult {
    bool feasible = false;
    std::vector<T> x;         // valid when feasible
    T infeasibility{};        // minimum total artificial mass (> 0 iff infeasible)
};

template <class T>
FeasibilityResult<T> find_feasible_point(const std::vector<std::vector<T>>& a, const std::vector<T>& b,
                                         std::size_t max_cells = std::size_t{1} << 28) {
    const std::size_t m = a.size();
    const std::size_t n = m == 0 ? 0 : a.front().size();
    auto is_pos = [](const T& v) {
        if constexpr (scalar_traits<T>::exact) return v > 0;
        else return v > 1e-12;
    };
    auto is_neg = [](const T& v) {
        if constexpr (scalar_traits<T>::exact) return v < 0;
        else return v < -1e-12;
    };

    const std::size_t cols = n + m + 1;  // originals, artificials, rhs
    if ((m + 1) > max_cells / (cols == 0 ? 1 : cols)) throw capacity_error("simplex tableau exceeds the configured size cap");

    std::vector<std::vector<T>> t(m + 1, std::vector<T>(cols, T(0)));
    std::vector<std::size_t> basis(m);
    for (std::size_t r = 0; r < m; ++r) {
        const bool flip = b[r] < T(0);
        for (std::size_t c = 0; c < n; ++c) t[r][c] = flip ? T(-a[r][c]) : a[r][c];
        t[r][n + r] = T(1);
        t[r][cols - 1] = flip ? T(-b[r]) : b[r];
        basis[r] = n + r;
    }
    // Objective row: minimize sum of artificials, expressed in reduced costs.
    auto& obj = t[m];
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (c < n || c == cols - 1) obj[c] -= t[r][c];

    while (true) {
        std::size_t enter = cols;
        for (std::size_t c = 0; c < n + m; ++c) {
            if (is_neg(obj[c])) {
                enter = c;
                break;
            }
        }
        if (enter == cols) break;
        std::size_t leave = m;
        T best{};
        for (std::size_t r = 0; r < m; ++r) {
            if (!is_pos(t[r][enter])) continue;
            T ratio = t[r][cols - 1] / t[r][enter];
            if (leave == m || ratio < best || (ratio == best && basis[r] < basis[leave])) {
                leave = r;
                best = ratio;
            }
        }
        if (leave == m) break;  // unbounded direction cannot occur in phase 1
        const T piv = t[leave][enter];
        for (auto& v : t[leave]) v /= piv;
        for (std::size_t r = 0; r <= m; ++r) {
            if (r == leave) continue;
            const T f = t[r][enter];
            if (f == T(0)) continue;
            for (std::size_t c = 0; c < cols; ++c)
                if (t[leave][c] != T(0)) t[r][c] -= f * t[leave][c];
        }
        basis[leave] = enter;
    }

    FeasibilityResult<T> out;
    out.infeasibility = T(-obj[cols - 1]);
    out.feasible = !is_pos(out.infeasibility);
    if (out.feasible) {
        out.x.assign(n, T(0));
        for (std::size_t r = 0; r < m; ++r)
            if (basis[r] < n) out.x[basis[r]] = t[r][cols - 1];
        if constexpr (!scalar_traits<T>::exact)
            for (auto& v : out.x)
                if (v < 0) v = 0;
    }
    return out;
}

}  // namespace collectiva::lp
