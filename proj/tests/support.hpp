#pragma once

// Brute-force oracles and decompositions used only by the tests.

#include <netcalc/linalg.hpp>

#include <cstddef>
#include <utility>
#include <vector>

namespace netcalc::testing {

/// T = A + iB with A = (T + T*)/2 and B = (T - T*)/(2i), both Hermitian.
inline std::pair<Matrix, Matrix> hermitian_split(const Matrix& t) {
    const Matrix a = (t + t.adjoint()) / 2.0;
    const Matrix b = (t - t.adjoint()) / Scalar(0.0, 2.0);
    return {a, b};
}

/// Laplace expansion along the first row.
inline Scalar cofactor_determinant(const Matrix& m) {
    const Eigen::Index n = m.rows();
    if (n == 0) return Scalar(1.0);
    if (n == 1) return m(0, 0);
    Scalar acc(0.0);
    for (Eigen::Index c = 0; c < n; ++c) {
        Matrix minor(n - 1, n - 1);
        for (Eigen::Index i = 1; i < n; ++i)
            for (Eigen::Index j = 0, jj = 0; j < n; ++j)
                if (j != c) minor(i - 1, jj++) = m(i, j);
        acc += ((c % 2) ? -1.0 : 1.0) * m(0, c) * cofactor_determinant(minor);
    }
    return acc;
}

/// Sum of all k x k principal minors, enumerated over subsets.
inline Scalar principal_minor_sum(const Matrix& m, std::size_t k) {
    const auto n = static_cast<std::size_t>(m.rows());
    if (k == 0) return Scalar(1.0);
    if (k > n) return Scalar(0.0);
    Scalar acc(0.0);
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1U << i)) idx.push_back(static_cast<Eigen::Index>(i));
        Matrix sub(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) sub(a, b) = m(idx[a], idx[b]);
        acc += cofactor_determinant(sub);
    }
    return acc;
}

inline double relative_gap(const Scalar& a, const Scalar& b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace netcalc::testing
