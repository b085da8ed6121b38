#pragma once

#include <netcalc/error.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace netcalc {

using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

/// Deterministic uniform draws from a seeded 64-bit Mersenne twister.
/// The conversion is spelled out so that streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = Scalar(rng.normal(), rng.normal());
    return m;
}

/// Orthonormal basis for the column span of `columns` (modified Gram-Schmidt with one
/// reorthogonalization pass). Columns whose residual falls below `rank_tol` times their
/// original norm are dropped, so the result has rank-many columns.
inline Matrix orthonormalize(const Matrix& columns, double rank_tol = 1e-10) {
    Matrix q(columns.rows(), 0);
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        Vector v = columns.col(j);
        const double original = v.norm();
        if (original == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < q.cols(); ++i) v -= q.col(i) * q.col(i).dot(v);
        const double residual = v.norm();
        if (residual <= rank_tol * original) continue;
        q.conservativeResize(Eigen::NoChange, q.cols() + 1);
        q.col(q.cols() - 1) = v / residual;
    }
    return q;
}

/// Largest distance of a column of `inner` from span(`outer`), `outer` orthonormal.
inline double projection_residual(const Matrix& inner, const Matrix& outer) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < inner.cols(); ++j) {
        const Vector v = inner.col(j);
        const Vector r = v - outer * (outer.adjoint() * v);
        worst = std::max(worst, r.norm());
    }
    return worst;
}

/// Coefficients c_0..c_n (ascending powers) of det(x I - m).
///
/// The matrix is first reduced to upper Hessenberg form H; then the leading principal
/// polynomials obey p_k = (x - h_kk) p_{k-1} - sum_{i<k} h_ik (prod_{m=i+1}^{k} h_{m,m-1}) p_{i-1}.
inline std::vector<Scalar> characteristic_polynomial(const Matrix& m) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n) throw DomainError("characteristic_polynomial: matrix must be square");
    std::vector<std::vector<Scalar>> p(static_cast<std::size_t>(n) + 1);
    p[0] = {Scalar(1.0)};
    if (n == 0) return p[0];
    Matrix h = m;
    if (n > 2) h = Eigen::HessenbergDecomposition<Matrix>(m).matrixH();

    for (Eigen::Index k = 1; k <= n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        std::vector<Scalar> next(ku + 1, Scalar(0.0));
        const Scalar hkk = h(k - 1, k - 1);
        for (std::size_t d = 0; d < ku; ++d) {
            next[d + 1] += p[ku - 1][d];
            next[d] -= hkk * p[ku - 1][d];
        }
        Scalar subdiag_product(1.0);
        for (Eigen::Index i = k - 1; i >= 1; --i) {
            subdiag_product *= h(i, i - 1);
            const Scalar factor = h(i - 1, k - 1) * subdiag_product;
            if (factor == Scalar(0.0)) continue;
            const auto& lower = p[static_cast<std::size_t>(i) - 1];
            for (std::size_t d = 0; d < lower.size(); ++d) next[d] -= factor * lower[d];
        }
        p[ku] = std::move(next);
    }
    return p[static_cast<std::size_t>(n)];
}

/// Elementary symmetric polynomials e_0..e_n of the eigenvalues of `m`, read off the
/// characteristic polynomial: det(xI - m) = sum_k (-1)^k e_k x^{n-k}.
inline std::vector<Scalar> elementary_symmetric(const Matrix& m) {
    const auto coeffs = characteristic_polynomial(m);
    const std::size_t n = coeffs.size() - 1;
    std::vector<Scalar> e(n + 1);
    for (std::size_t k = 0; k <= n; ++k) e[k] = ((k % 2) ? -1.0 : 1.0) * coeffs[n - k];
    return e;
}

inline Scalar determinant(const Matrix& m) {
    if (m.rows() != m.cols()) throw DomainError("determinant: matrix must be square");
    if (m.rows() == 0) return Scalar(1.0);
    return Eigen::PartialPivLU<Matrix>(m).determinant();
}

inline double singular_value_sum(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::BDCSVD<Matrix>(m).singularValues().sum();
}

}  // namespace netcalc
