#pragma once

#include "collectiva/core.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace collectiva::linalg {

using Matrix = std::vector<std::vector<Rational>>;

/// Reduced row echelon form in place. Returns pivot columns.
inline std::vector<std::size_t> rref(Matrix& m, std::size_t cols) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
        std::size_t sel = row;
        while (sel < m.size() && m[sel][col] == 0) ++sel;
        if (sel == m.size()) continue;
        std::swap(m[sel], m[row]);
        const Rational inv = 1 / m[row][col];
        for (auto& v : m[row]) v *= inv;
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (r == row || m[r][col] == 0) continue;
            const Rational f = m[r][col];
            for (std::size_t c = col; c < m[r].size(); ++c) m[r][c] -= f * m[row][c];
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

inline std::size_t rank(Matrix m) {
    if (m.empty()) return 0;
    return rref(m, m.front().size()).size();
}

/// Solves A x = b. Returns nullopt when inconsistent; `unique` reports
/// whether the solution is determined (free variables are set to zero).
struct Solution {
    std::vector<Rational> x;
    bool unique = false;
};

inline std::optional<Solution> solve(const Matrix& a, const std::vector<Rational>& b) {
    const std::size_t n = a.empty() ? 0 : a.front().size();
    Matrix aug = a;
    for (std::size_t r = 0; r < aug.size(); ++r) aug[r].push_back(b[r]);
    auto pivots = rref(aug, n);
    for (std::size_t r = pivots.size(); r < aug.size(); ++r)
        if (aug[r][n] != 0) return std::nullopt;
    Solution s;
    s.x.assign(n, Rational(0));
    for (std::size_t r = 0; r < pivots.size(); ++r) s.x[pivots[r]] = aug[r][n];
    s.unique = pivots.size() == n;
    return s;
}

/// Basis of the right null space of A.
inline Matrix null_space(Matrix a, std::size_t cols) {
    auto pivots = rref(a, cols);
    std::vector<bool> is_pivot(cols, false);
    for (auto p : pivots) is_pivot[p] = true;
    Matrix basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<Rational> v(cols, Rational(0));
        v[free] = 1;
        for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -a[r][free];
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace collectiva::linalg
