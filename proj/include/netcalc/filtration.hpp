#pragma once

// Increasing chains of finite-dimensional subspaces F_1 c F_2 c ... c F_N = E_N inside the
// truncation space E_N. A chain is stored as an N x N unitary whose first n columns span
// F_n, so every chain ends at the same top element E_N.

#include <netcalc/error.hpp>
#include <netcalc/linalg.hpp>
#include <netcalc/operator.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace netcalc {

enum class MinorKind { trace, det };

inline const char* to_string(MinorKind k) { return k == MinorKind::trace ? "trace" : "det"; }

/// An orthonormal frame v_1..v_n in C^N (columns of `vectors`).
struct Frame {
    SparseMatrix vectors;
    std::string id;

    std::size_t size() const { return static_cast<std::size_t>(vectors.cols()); }
    std::size_t ambient() const { return static_cast<std::size_t>(vectors.rows()); }

    /// ||V^* V - I||_F
    double gram_defect() const {
        const Matrix g = Matrix(vectors.adjoint() * vectors);
        return (g - Matrix::Identity(g.rows(), g.cols())).norm();
    }

    static Frame coordinate(std::size_t N, const std::vector<std::size_t>& indices) {
        SparseMatrix v(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(indices.size()));
        std::vector<Eigen::Triplet<Scalar>> t;
        std::vector<char> used(N, 0);
        for (std::size_t c = 0; c < indices.size(); ++c) {
            if (indices[c] >= N) throw DomainError("coordinate frame index outside truncation");
            if (used[indices[c]]) throw DomainError("coordinate frame indices must be distinct");
            used[indices[c]] = 1;
            t.emplace_back(static_cast<Eigen::Index>(indices[c]), static_cast<Eigen::Index>(c), Scalar(1.0));
        }
        v.setFromTriplets(t.begin(), t.end());
        return Frame{std::move(v), "coordinate"};
    }

    static Frame from_columns(const Matrix& columns, std::string id = "custom") {
        Frame f{columns.sparseView(), std::move(id)};
        if (f.gram_defect() > 1e-10) throw DomainError("frame vectors are not orthonormal");
        return f;
    }
};

enum class StrategyKind { coordinate, eigen_sorted, adversarial_plus, adversarial_minus, random };

struct Strategy {
    StrategyKind kind = StrategyKind::coordinate;
    std::optional<std::uint64_t> seed;
    /// Layers of adjacent Givens rotations in the random strategy; F_n contains E_{n - sweeps}.
    int sweeps = 4;

    Strategy(StrategyKind k = StrategyKind::coordinate, std::optional<std::uint64_t> sd = std::nullopt, int layers = 4)
        : kind(k), seed(sd), sweeps(layers) {}

    std::string name() const {
        switch (kind) {
            case StrategyKind::coordinate: return "coordinate";
            case StrategyKind::eigen_sorted: return "eigen-sorted";
            case StrategyKind::adversarial_plus: return "adversarial+";
            case StrategyKind::adversarial_minus: return "adversarial-";
            case StrategyKind::random: return "random";
        }
        return "?";
    }

    static Strategy parse(const std::string& text) {
        if (text == "coordinate") return {StrategyKind::coordinate};
        if (text == "eigen-sorted" || text == "eigen") return {StrategyKind::eigen_sorted};
        if (text == "adversarial+") return {StrategyKind::adversarial_plus};
        if (text == "adversarial-") return {StrategyKind::adversarial_minus};
        if (text == "random") return {StrategyKind::random};
        throw DomainError("unknown filtration strategy '" + text +
                          "' (expected coordinate, eigen-sorted, adversarial+, adversarial-, random)");
    }

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// The default strategy set: every ordering plus one random rotation.
inline std::vector<Strategy> all_strategies(std::uint64_t seed) {
    return {{StrategyKind::coordinate},
            {StrategyKind::eigen_sorted},
            {StrategyKind::adversarial_plus},
            {StrategyKind::adversarial_minus},
            {StrategyKind::random, seed}};
}

class Filtration {
public:
    /// Orders are chosen from the diagonal entries d_j of T_N (the eigenvalues when T is
    /// diagonal). For traces: eigen-sorted is by |d_j| decreasing, adversarial+ takes
    /// Re d_j > 0 first. For determinants the reference point is 1: eigen-sorted is by
    /// |d_j - 1| decreasing, adversarial+ takes |d_j| > 1 first.
    static Filtration build(const OperatorSpec& t, MinorKind kind, const Strategy& s, std::size_t N) {
        if (N == 0) throw DomainError("filtration needs a positive truncation dimension");
        Filtration f;
        f.strategy_ = s;
        f.N_ = N;
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto diag = [&] {
            std::vector<Scalar> d(N);
            for (std::size_t j = 0; j < N; ++j) d[j] = t.entry(j, j);
            return d;
        };
        switch (s.kind) {
            case StrategyKind::coordinate: break;
            case StrategyKind::eigen_sorted: {
                const auto d = diag();
                const Scalar ref = kind == MinorKind::trace ? Scalar(0.0) : Scalar(1.0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return std::abs(d[a] - ref) > std::abs(d[b] - ref); });
                break;
            }
            case StrategyKind::adversarial_plus:
            case StrategyKind::adversarial_minus: {
                const auto d = diag();
                const bool plus = s.kind == StrategyKind::adversarial_plus;
                auto first = [&](std::size_t j) {
                    if (kind == MinorKind::trace) return plus ? d[j].real() > 0.0 : d[j].real() < 0.0;
                    return plus ? std::abs(d[j]) > 1.0 : std::abs(d[j]) < 1.0;
                };
                std::stable_partition(order.begin(), order.end(), first);
                break;
            }
            case StrategyKind::random: {
                if (!s.seed) throw SpecError("seed", "the random strategy requires a seed");
                f.basis_ = banded_unitary(N, s.sweeps, *s.seed);
                return f;
            }
        }
        f.basis_ = Frame::coordinate(N, order).vectors;
        return f;
    }

    const Strategy& strategy() const { return strategy_; }
    std::size_t truncation() const { return N_; }
    /// N x N unitary; column n spans F_{n+1} / F_n.
    const SparseMatrix& basis() const { return basis_; }

    Frame subspace(std::size_t n) const {
        if (n > N_) throw DomainError("subspace index beyond truncation");
        return Frame{basis_.leftCols(static_cast<Eigen::Index>(n)), strategy_.name() + ":" + std::to_string(n)};
    }

    /// Q = G_L ... G_1 with each layer rotating disjoint adjacent coordinate pairs by random
    /// angles and phases. Q is unitary with bandwidth <= layers.
    static SparseMatrix banded_unitary(std::size_t N, int layers, std::uint64_t seed) {
        if (layers < 0) throw DomainError("random strategy needs a nonnegative number of layers");
        Rng rng(seed);
        const std::size_t B = static_cast<std::size_t>(layers) + 1;
        const std::size_t width = 2 * B + 1;
        // band[i * width + (j - i + B)] holds Q(i, j) for |i - j| <= B.
        std::vector<Scalar> band(N * width, Scalar(0.0));
        auto at = [&](std::size_t i, std::size_t j) -> Scalar& { return band[i * width + (j + B - i)]; };
        for (std::size_t i = 0; i < N; ++i) at(i, i) = 1.0;
        for (int layer = 0; layer < layers; ++layer) {
            for (std::size_t i = static_cast<std::size_t>(layer % 2); i + 1 < N; i += 2) {
                const double theta = rng.uniform(0.0, 2.0 * M_PI);
                const double phi = rng.uniform(0.0, 2.0 * M_PI);
                const Scalar ph = std::polar(1.0, phi);
                const double c = std::cos(theta), sn = std::sin(theta);
                const std::size_t lo = i >= B ? i + 1 - B : 0;
                const std::size_t hi = std::min(N - 1, i + B);
                for (std::size_t j = lo; j <= hi; ++j) {
                    const Scalar a = at(i, j), b = at(i + 1, j);
                    at(i, j) = c * a - ph * sn * b;
                    at(i + 1, j) = std::conj(ph) * sn * a + c * b;
                }
            }
        }
        std::vector<Eigen::Triplet<Scalar>> t;
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t lo = i >= B ? i - B : 0;
            const std::size_t hi = std::min(N - 1, i + B);
            for (std::size_t j = lo; j <= hi; ++j)
                if (at(i, j) != Scalar(0.0))
                    t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), at(i, j));
        }
        SparseMatrix q(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
        q.setFromTriplets(t.begin(), t.end());
        q.makeCompressed();
        return q;
    }

private:
    Strategy strategy_;
    std::size_t N_ = 0;
    SparseMatrix basis_;
};

// ---------------------------------------------------------------------------
// Leading principal minors along a chain

/// tr of every leading n x n block, n = 1..N.
inline std::vector<Scalar> leading_trace_minors(const SparseMatrix& s) {
    std::vector<Scalar> out(static_cast<std::size_t>(s.rows()));
    Scalar acc(0.0);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        acc += s.coeff(i, i);
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

/// det of every leading n x n block, n = 1..N.
///
/// Banded matrices (lower bandwidth kl <= `band_limit`) use one partially pivoted band LU of
/// the whole matrix. While column k <= n-1-kl is eliminated, pivot candidates and updated rows
/// all lie inside the leading n x n block, so that block has been reduced exactly as its own
/// pivoted LU would reduce it; hence det(S_n) = sign * u_00 ... u_kk * det(W_n) with W_n the
/// current trailing kl x kl block of S_n. Wider matrices fall back to a dense pivoted LU at
/// each size in `dense_sizes` (other entries are NaN).
inline std::vector<Scalar> leading_det_minors(const SparseMatrix& s, const std::vector<std::size_t>& dense_sizes,
                                              std::size_t band_limit = 48, std::size_t dense_cap = 2048) {
    const auto N = static_cast<std::size_t>(s.rows());
    std::vector<Scalar> out(N, Scalar(not_a_number));
    if (N == 0) return out;
    std::size_t kl = 0, ku = 0;
    for (Eigen::Index c = 0; c < s.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
            const auto r = static_cast<std::size_t>(it.row());
            const auto cc = static_cast<std::size_t>(it.col());
            if (r > cc) kl = std::max(kl, r - cc);
            else ku = std::max(ku, cc - r);
        }

    if (kl > band_limit) {
        if (N > dense_cap) throw DomainError("leading determinants: dense section larger than " + std::to_string(dense_cap));
        const Matrix dense = Matrix(s);
        for (std::size_t n : dense_sizes) {
            if (n == 0 || n > N) continue;
            const auto ni = static_cast<Eigen::Index>(n);
            out[n - 1] = determinant(dense.topLeftCorner(ni, ni));
        }
        return out;
    }

    // Row i holds columns [i - kl, i + kl + ku]; pivoting widens the upper band by kl.
    const std::size_t up = kl + ku;
    const std::size_t width = kl + up + 1;
    std::vector<Scalar> band(N * width, Scalar(0.0));
    auto at = [&](std::size_t i, std::size_t j) -> Scalar& { return band[i * width + (j + kl - i)]; };
    for (Eigen::Index c = 0; c < s.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(s, c); it; ++it)
            at(static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col())) = it.value();

    // Sizes n <= kl are never reached by the band recurrence.
    if (kl > 0) {
        const Matrix head = Matrix(s.topLeftCorner(static_cast<Eigen::Index>(std::min(N, kl)),
                                                   static_cast<Eigen::Index>(std::min(N, kl))));
        for (std::size_t n = 1; n <= std::min(N, kl); ++n) {
            const auto ni = static_cast<Eigen::Index>(n);
            out[n - 1] = determinant(head.topLeftCorner(ni, ni));
        }
    }

    Scalar prod(1.0);
    Matrix w(static_cast<Eigen::Index>(kl), static_cast<Eigen::Index>(kl));
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t rmax = std::min(N - 1, k + kl);
        const std::size_t cmax = std::min(N - 1, k + up);
        std::size_t piv = k;
        for (std::size_t i = k + 1; i <= rmax; ++i)
            if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
        if (piv != k) {
            for (std::size_t j = k; j <= cmax; ++j) std::swap(at(k, j), at(piv, j));
            prod = -prod;
        }
        const Scalar p = at(k, k);
        prod *= p;
        if (p != Scalar(0.0)) {
            for (std::size_t i = k + 1; i <= rmax; ++i) {
                const Scalar a = at(i, k);
                if (a == Scalar(0.0)) continue;
                const Scalar l = a / p;
                at(i, k) = Scalar(0.0);
                for (std::size_t j = k + 1; j <= cmax; ++j) at(i, j) -= l * at(k, j);
            }
        }
        const std::size_t n = k + 1 + kl;
        if (n > N) continue;
        if (kl == 0) {
            out[n - 1] = prod;
            continue;
        }
        for (std::size_t i = 0; i < kl; ++i)
            for (std::size_t j = 0; j < kl; ++j)
                w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = at(k + 1 + i, k + 1 + j);
        out[n - 1] = prod * determinant(w);
    }
    return out;
}

}  // namespace netcalc
