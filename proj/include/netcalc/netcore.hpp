#pragma once

// Directed sets, nets and numerical probing of net convergence.
//
// A net is only ever observed along an explicitly supplied monotone schedule of
// indices; the directed set itself is never enumerated.

#include <netcalc/error.hpp>
#include <netcalc/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

// ---------------------------------------------------------------------------
// Directed index sets

/// Order and upper bounds for an index type. Specialized below for the three
/// index sets the library works with.
template <class Index>
struct DirectedTraits;

template <class Index>
concept DirectedIndex = requires(const Index& a, const Index& b) {
    { DirectedTraits<Index>::leq(a, b) } -> std::convertible_to<bool>;
    { DirectedTraits<Index>::join(a, b) } -> std::convertible_to<Index>;
    { DirectedTraits<Index>::rank(a) } -> std::convertible_to<std::size_t>;
};

/// Element of a chain (the natural numbers, or the stored seminorm presentation).
struct ChainIndex {
    std::size_t value = 0;
    friend bool operator==(const ChainIndex&, const ChainIndex&) = default;
};

template <>
struct DirectedTraits<ChainIndex> {
    static bool leq(const ChainIndex& a, const ChainIndex& b) { return a.value <= b.value; }
    static ChainIndex join(const ChainIndex& a, const ChainIndex& b) { return {std::max(a.value, b.value)}; }
    static std::size_t rank(const ChainIndex& a) { return a.value; }
};

/// Finite subset of a countable family (e.g. finitely many seminorms), ordered by inclusion.
struct SubsetIndex {
    std::set<std::size_t> members;
    friend bool operator==(const SubsetIndex&, const SubsetIndex&) = default;
};

template <>
struct DirectedTraits<SubsetIndex> {
    static bool leq(const SubsetIndex& a, const SubsetIndex& b) {
        return std::includes(b.members.begin(), b.members.end(), a.members.begin(), a.members.end());
    }
    static SubsetIndex join(const SubsetIndex& a, const SubsetIndex& b) {
        SubsetIndex out = a;
        out.members.insert(b.members.begin(), b.members.end());
        return out;
    }
    static std::size_t rank(const SubsetIndex& a) { return a.members.size(); }
};

/// Finite-dimensional subspace of C^N given by an orthonormal frame, ordered by inclusion.
struct SubspaceIndex {
    Matrix basis;  // N x dim, orthonormal columns

    static SubspaceIndex span(const Matrix& columns) { return {orthonormalize(columns)}; }
    Eigen::Index ambient() const { return basis.rows(); }
    Eigen::Index dim() const { return basis.cols(); }
};

template <>
struct DirectedTraits<SubspaceIndex> {
    static constexpr double containment_tol = 1e-10;

    static void check_compatible(const SubspaceIndex& a, const SubspaceIndex& b) {
        if (a.ambient() != b.ambient())
            throw DomainError("subspaces live in different ambient spaces (" + std::to_string(a.ambient()) +
                              " vs " + std::to_string(b.ambient()) + ")");
    }
    static bool leq(const SubspaceIndex& a, const SubspaceIndex& b) {
        check_compatible(a, b);
        if (a.dim() > b.dim()) return false;
        return projection_residual(a.basis, b.basis) < containment_tol;
    }
    /// F + F' via Gram-Schmidt on the concatenated frames.
    static SubspaceIndex join(const SubspaceIndex& a, const SubspaceIndex& b) {
        check_compatible(a, b);
        Matrix both(a.ambient(), a.dim() + b.dim());
        both << a.basis, b.basis;
        return SubspaceIndex::span(both);
    }
    static std::size_t rank(const SubspaceIndex& a) { return static_cast<std::size_t>(a.dim()); }
};

template <DirectedIndex Index>
Index join(const Index& a, const Index& b) {
    return DirectedTraits<Index>::join(a, b);
}

template <DirectedIndex Index>
bool leq(const Index& a, const Index& b) {
    return DirectedTraits<Index>::leq(a, b);
}

// ---------------------------------------------------------------------------
// Nets and convergence reports

template <class Index, class Value>
using Net = std::function<Value(const Index&)>;

enum class Verdict { converged, diverged, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::converged: return "converged";
        case Verdict::diverged: return "diverged";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

/// Two comparable samples further apart than the divergence threshold.
struct Witness {
    std::size_t first = 0;   // position in the sample list
    std::size_t second = 0;
    double distance = 0.0;
};

template <class Value>
struct ConvergenceReport {
    Verdict verdict = Verdict::inconclusive;
    std::optional<Value> limit;
    double oscillation = 0.0;
    std::vector<std::pair<std::size_t, Value>> samples;  // (index rank, value)
    std::optional<Witness> witness;
    std::size_t stable_from = 0;  // first position of the stabilized window
    double tol = 0.0;
};

/// Number of consecutive samples that must agree within tol before a net counts as converged.
inline constexpr std::size_t stabilization_window = 5;

inline double default_distance(double a, double b) { return std::abs(a - b); }
inline double default_distance(const Scalar& a, const Scalar& b) { return std::abs(a - b); }
inline double default_distance(const Vector& a, const Vector& b) { return (a - b).norm(); }
inline double default_distance(const Matrix& a, const Matrix& b) { return (a - b).norm(); }

template <class Value>
bool value_is_finite(const Value& v) {
    if constexpr (std::is_same_v<Value, double>) {
        return std::isfinite(v);
    } else if constexpr (std::is_same_v<Value, Scalar>) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else if constexpr (requires { v.allFinite(); }) {
        return v.allFinite();
    } else {
        return true;
    }
}

/// Classify an already evaluated chain of samples.
///
/// The tail starts at position `tail_start` (default: the latter half of the samples). The
/// net is reported diverged when two tail samples (comparable, since the samples form a
/// chain) differ by more than `div_threshold` or a tail sample is not finite. Otherwise it
/// is converged when the longest suffix whose samples lie pairwise within `tol` has at
/// least `stabilization_window` entries; the last sample is the limit estimate.
template <class Value, class Metric>
ConvergenceReport<Value> classify_chain(std::vector<std::pair<std::size_t, Value>> samples, double tol,
                                        double div_threshold, Metric&& metric,
                                        std::optional<std::size_t> tail_start = std::nullopt) {
    if (!(tol > 0.0)) throw DomainError("probe_convergence: tol must be positive");
    if (!(div_threshold > 0.0)) throw DomainError("probe_convergence: div_threshold must be positive");
    if (samples.size() < 3) throw DomainError("probe_convergence: schedule needs at least 3 indices");

    ConvergenceReport<Value> report;
    report.tol = tol;
    report.samples = std::move(samples);
    const auto& s = report.samples;
    const std::size_t m = s.size();
    const std::size_t tail_begin = std::min(tail_start.value_or(m / 2), m - 1);

    for (std::size_t i = tail_begin; i < m && !report.witness; ++i) {
        if (!value_is_finite(s[i].second)) {
            report.witness = Witness{i, m - 1, std::numeric_limits<double>::infinity()};
            break;
        }
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = metric(s[i].second, s[j].second);
            if (!(d <= div_threshold)) {
                report.witness = Witness{i, j, d};
                break;
            }
        }
    }

    // Longest suffix with pairwise distances within tol.
    double osc = 0.0;
    std::size_t start = m - 1;
    while (start > 0) {
        const std::size_t cand = start - 1;
        double worst = 0.0;
        for (std::size_t j = cand + 1; j < m; ++j) {
            worst = std::max(worst, metric(s[cand].second, s[j].second));
            if (!(worst <= tol)) break;
        }
        if (!(worst <= tol)) break;
        osc = std::max(osc, worst);
        start = cand;
    }
    report.stable_from = start;
    const bool stable = value_is_finite(s[m - 1].second) && (m - start) >= stabilization_window;

    if (report.witness) {
        report.verdict = Verdict::diverged;
        report.oscillation = report.witness->distance;
    } else if (stable) {
        report.verdict = Verdict::converged;
        report.limit = s[m - 1].second;
        report.oscillation = osc;
    } else {
        report.verdict = Verdict::inconclusive;
        double tail_osc = 0.0;
        const std::size_t from = m >= stabilization_window ? m - stabilization_window : 0;
        for (std::size_t i = from; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) tail_osc = std::max(tail_osc, metric(s[i].second, s[j].second));
        report.oscillation = tail_osc;
    }
    return report;
}

/// Evaluate `net` along a monotone `schedule` and classify the resulting chain.
template <DirectedIndex Index, class Value, class Metric>
ConvergenceReport<Value> probe_convergence(const Net<Index, Value>& net, const std::vector<Index>& schedule,
                                           double tol, double div_threshold, Metric&& metric) {
    if (schedule.size() < 3) throw DomainError("probe_convergence: schedule needs at least 3 indices");
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!leq(schedule[i], schedule[i + 1]))
            throw DomainError("probe_convergence: schedule is not monotone at position " + std::to_string(i + 1));
    std::vector<std::pair<std::size_t, Value>> samples;
    samples.reserve(schedule.size());
    for (const auto& idx : schedule) samples.emplace_back(DirectedTraits<Index>::rank(idx), net(idx));
    return classify_chain(std::move(samples), tol, div_threshold, std::forward<Metric>(metric));
}

template <DirectedIndex Index, class Value>
ConvergenceReport<Value> probe_convergence(const Net<Index, Value>& net, const std::vector<Index>& schedule,
                                           double tol, double div_threshold) {
    return probe_convergence(net, schedule, tol, div_threshold,
                             [](const Value& a, const Value& b) { return default_distance(a, b); });
}

inline std::vector<ChainIndex> chain_schedule(std::size_t first, std::size_t last, std::size_t step = 1) {
    std::vector<ChainIndex> out;
    for (std::size_t n = first; n <= last; n += step) out.push_back({n});
    return out;
}

/// 1, 2, 4, ... up to and including `last` (when last is not a power of two it is appended).
inline std::vector<ChainIndex> doubling_schedule(std::size_t last) {
    std::vector<ChainIndex> out;
    for (std::size_t n = 1; n <= last; n *= 2) out.push_back({n});
    if (out.empty() || out.back().value != last) out.push_back({last});
    return out;
}

// ---------------------------------------------------------------------------
// Dominated convergence for nets of sequences indexed by a countable set

/// Summable nonnegative dominating sequence g_k (k >= 1) with a computable tail
/// sum_{k > k0} g_k.
struct Dominator {
    std::function<double(std::size_t)> term;
    std::function<double(std::size_t)> tail;  // may be empty: no tail bound available
};

struct DominatedSumOptions {
    /// Increasing alpha schedule; default 1, 2, 4, ..., 2^62.
    std::vector<double> alphas;
    /// Extra k beyond the truncation point at which domination is spot-checked.
    std::size_t check_extra_k = 16;
    std::size_t max_k0 = 100000;
};

struct DominatedSumResult {
    Scalar value;
    std::size_t k0 = 0;        // truncation point: tail(g, k0) < tol / 4
    double alpha_star = 0.0;   // first alpha of the stabilized window
    std::vector<Scalar> head;  // a_{alpha*,k}, k = 1..k0
};

/// Limit of sum_k a_{alpha,k} as alpha runs through a chain.
///
/// Truncates at k0 with sum_{k>k0} g_k < tol/4, then advances alpha until every head
/// term k <= k0 has settled within tol / 2^{k+1} over `stabilization_window` consecutive
/// alphas. The returned head sum is then within tol of the limit.
inline DominatedSumResult dominated_net_sum(const std::function<Scalar(double, std::size_t)>& family,
                                            const Dominator& g, double tol, DominatedSumOptions opts = {}) {
    if (!(tol > 0.0)) throw DomainError("dominated_net_sum: tol must be positive");
    if (!g.term) throw DomainError("dominated_net_sum: dominator has no terms");
    if (!g.tail) throw DomainError("dominated_net_sum: no tail bound available for the dominating sequence");
    if (opts.alphas.empty())
        for (int e = 0; e <= 62; ++e) opts.alphas.push_back(std::ldexp(1.0, e));
    if (opts.alphas.size() < stabilization_window)
        throw DomainError("dominated_net_sum: alpha schedule is shorter than the stabilization window");
    for (std::size_t i = 0; i + 1 < opts.alphas.size(); ++i)
        if (!(opts.alphas[i] < opts.alphas[i + 1])) throw DomainError("dominated_net_sum: alpha schedule not increasing");

    std::size_t k0 = 0;
    while (!(g.tail(k0) < tol / 4.0)) {
        if (++k0 > opts.max_k0) throw DomainError("dominated_net_sum: dominator tail does not fall below tol/4");
    }

    const std::size_t k_check = k0 + opts.check_extra_k;
    auto checked_term = [&](double alpha, std::size_t k) {
        const Scalar a = family(alpha, k);
        const double gk = g.term(k);
        if (!(std::abs(a) <= gk * (1.0 + 1e-12) + 1e-300)) throw DominationError(alpha, k, std::abs(a), gk);
        return a;
    };

    // heads[i][k-1] = a_{alphas[i], k}
    std::vector<std::vector<Scalar>> heads;
    for (std::size_t i = 0; i < opts.alphas.size(); ++i) {
        const double alpha = opts.alphas[i];
        std::vector<Scalar> row(k0);
        for (std::size_t k = 1; k <= k_check; ++k) {
            const Scalar a = checked_term(alpha, k);
            if (k <= k0) row[k - 1] = a;
        }
        heads.push_back(std::move(row));
        if (heads.size() < stabilization_window) continue;

        const std::size_t first = heads.size() - stabilization_window;
        bool settled = true;
        for (std::size_t k = 1; k <= k0 && settled; ++k) {
            const double allowed = tol / std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(k + 1, 1000)));
            for (std::size_t a = first; a < heads.size() && settled; ++a)
                for (std::size_t b = a + 1; b < heads.size(); ++b)
                    if (!(std::abs(heads[a][k - 1] - heads[b][k - 1]) < allowed)) {
                        settled = false;
                        break;
                    }
        }
        if (!settled) continue;

        DominatedSumResult out;
        out.k0 = k0;
        out.alpha_star = opts.alphas[first];
        out.head = heads.back();
        out.value = Scalar(0.0);
        for (const auto& a : out.head) out.value += a;
        return out;
    }
    throw DomainError("dominated_net_sum: head terms did not stabilize within the alpha schedule");
}

}  // namespace netcalc
