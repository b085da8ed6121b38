#pragma once

// Finite-section calculus: compressions T_F = P_F T |_F, principal trace and determinant
// minors, their nets over filtrations, trace-class and determinant-class probes, Fredholm
// determinants, and the block and product laws.
//
// Minor nets are sampled inside the truncation space E_N. Each filtration ends at E_N, and
// for operators that respect E_N (+) E_N^perp the complement is known in closed form, so each
// sample also carries an estimate of the full-space quantity:
//   trace:  tr(T_F) + tr(complement)
//   det:    det(A_F) * det(complement)
// At F = E_N the estimate is exact; along the chain it converges exactly when the net does.

#include <netcalc/error.hpp>
#include <netcalc/filtration.hpp>
#include <netcalc/linalg.hpp>
#include <netcalc/netcore.hpp>
#include <netcalc/operator.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace netcalc {

/// The matrix of T compressed to a frame.
struct FiniteSection {
    Matrix matrix;
    std::string source;
    std::string frame;
    /// Trace-norm mass of T outside the truncation space (0 when the complement is exact).
    double truncation_bound = 0.0;
};

/// V^* T_N V for a frame V inside C^N.
inline FiniteSection compress(const OperatorSpec& t, const Frame& f, std::size_t N,
                              std::optional<double> tail_tol = std::nullopt) {
    if (f.ambient() > N) throw DomainError("frame vectors are longer than the truncation dimension");
    if (tail_tol) {
        if (auto need = t.required_truncation(*tail_tol); need && *need > N) throw TruncationError(N, *need);
    }
    const TailInfo tail = t.tail(N);
    SparseMatrix v = f.vectors;
    if (f.ambient() < N) v.conservativeResize(static_cast<Eigen::Index>(N), v.cols());
    const SparseMatrix tn = t.truncated(N);
    FiniteSection s;
    s.matrix = Matrix(SparseMatrix(v.adjoint() * (tn * v)));
    s.source = t.form_name();
    s.frame = f.id;
    s.truncation_bound = tail.exact ? 0.0 : tail.trace_norm_error;
    return s;
}

inline Scalar trace_minor(const FiniteSection& s) { return s.matrix.trace(); }

inline Scalar det_minor(const FiniteSection& s) { return determinant(s.matrix); }

/// Sum of singular values.
inline double trace_norm(const FiniteSection& s) { return singular_value_sum(s.matrix); }

/// tr(wedge^k S): the k-th elementary symmetric polynomial of the eigenvalues; 0 for k > n.
inline Scalar exterior_trace(const FiniteSection& s, std::size_t k) {
    const auto n = static_cast<std::size_t>(s.matrix.rows());
    if (k > n) return Scalar(0.0);
    return elementary_symmetric(s.matrix)[k];
}

// ---------------------------------------------------------------------------
// Minor nets

struct MinorNetOptions {
    MinorKind kind = MinorKind::trace;
    std::vector<Strategy> strategies{Strategy{}};
    /// Largest subspace dimension; also the truncation dimension N.
    std::size_t n_max = 2048;
    double tol = 1e-6;
    double div_threshold = 1.0;
    double zero_threshold = 1e-12;
    /// Divergence witnesses are drawn from subspaces containing E_k, k = anchor_fraction * N.
    double anchor_fraction = 1.0 / 16.0;
    /// At most this many sampled sizes per strategy (all sizes when N is below it).
    std::size_t max_samples = 2048;
};

struct MinorRow {
    std::string strategy;
    std::size_t n = 0;
    Scalar value;     // the principal minor at F_n
    Scalar estimate;  // full-space estimate
    double bound = 0.0;
};

struct MinorNetReport {
    MinorKind kind = MinorKind::trace;
    std::size_t truncation = 0;
    ConvergenceReport<Scalar> report;  // merged over strategies, samples in strategy order
    std::vector<std::string> strategies;
    std::vector<ConvergenceReport<Scalar>> per_strategy;
    std::vector<MinorRow> rows;
    /// |limit| > zero_threshold (always true for traces).
    bool nonzero = true;
    double zero_threshold = 0.0;

    Verdict verdict() const { return report.verdict; }
    /// trace: converged. det: converged to a nonzero limit.
    bool positive() const { return report.verdict == Verdict::converged && nonzero; }
};

namespace detail {

inline std::vector<std::size_t> sample_sizes(std::size_t N, std::size_t max_samples) {
    std::vector<std::size_t> out;
    if (N <= max_samples) {
        for (std::size_t n = 1; n <= N; ++n) out.push_back(n);
        return out;
    }
    const std::size_t dense = max_samples / 2;
    for (std::size_t n = 1; n <= dense; ++n) out.push_back(n);
    const std::size_t stride = (N - dense + (max_samples - dense) - 1) / (max_samples - dense);
    // The last sizes stay consecutive so the stabilization window sees neighbouring subspaces.
    const std::size_t last_run = 2 * stabilization_window;
    for (std::size_t n = dense + stride; n + last_run <= N; n += stride) out.push_back(n);
    for (std::size_t n = N - last_run + 1; n <= N; ++n)
        if (out.back() < n) out.push_back(n);
    return out;
}

/// floors[n-1] = largest k with E_k contained in F_n.
inline std::vector<std::size_t> chain_floors(const Filtration& f) {
    const std::size_t N = f.truncation();
    std::vector<std::size_t> floors(N);
    if (f.strategy().kind == StrategyKind::random) {
        const auto L = static_cast<std::size_t>(f.strategy().sweeps);
        for (std::size_t n = 1; n <= N; ++n) floors[n - 1] = n == N ? N : (n > L ? n - L : 0);
        return floors;
    }
    std::vector<char> present(N + 1, 0);
    std::size_t floor = 0;
    const SparseMatrix& b = f.basis();
    for (Eigen::Index c = 0; c < b.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(b, c); it; ++it) present[static_cast<std::size_t>(it.row())] = 1;
        while (floor < N && present[floor]) ++floor;
        floors[static_cast<std::size_t>(c)] = floor;
    }
    return floors;
}

}  // namespace detail

/// Principal trace or determinant minors of T along each filtration, probed as one net.
inline MinorNetReport minor_net(const OperatorSpec& t, const MinorNetOptions& opts) {
    if (opts.strategies.empty()) throw DomainError("minor_net needs at least one filtration strategy");
    if (opts.n_max == 0) throw DomainError("minor_net: n_max must be positive");
    std::size_t N = opts.n_max;
    const auto dim = t.dim();
    if (dim) N = std::min(N, *dim);
    if (N == 0) throw DomainError("minor_net: operator has dimension 0");
    if (auto need = t.required_truncation(opts.tol); need && *need > N) throw TruncationError(N, *need);
    const bool top_is_whole_space = dim && N == *dim;

    const TailInfo tail = t.tail(N);
    const SparseMatrix tn = t.truncated(N);
    double det_bound = 0.0;
    if (opts.kind == MinorKind::det && !tail.exact) {
        // |det(1 - X) - det(1 - Y)| <= ||X - Y||_tr exp(1 + ||X||_tr + ||Y||_tr)
        double xn = 0.0;
        if (N <= 2048) xn = singular_value_sum(Matrix::Identity(tn.rows(), tn.cols()) - Matrix(tn));
        else xn = infinity;
        det_bound = tail.trace_norm_error * std::exp(1.0 + 2.0 * xn + tail.trace_norm_error);
    }
    const std::vector<std::size_t> sizes = detail::sample_sizes(N, opts.max_samples);
    const auto anchor = static_cast<std::size_t>(opts.anchor_fraction * static_cast<double>(N));

    MinorNetReport out;
    out.kind = opts.kind;
    out.truncation = N;
    out.zero_threshold = opts.zero_threshold;

    for (const Strategy& s : opts.strategies) {
        const Filtration f = Filtration::build(t, opts.kind, s, N);
        const SparseMatrix sec = SparseMatrix(f.basis().adjoint() * (tn * f.basis()));
        const std::vector<Scalar> path =
            opts.kind == MinorKind::trace ? leading_trace_minors(sec) : leading_det_minors(sec, sizes);
        const std::vector<std::size_t> floors = detail::chain_floors(f);

        std::vector<std::pair<std::size_t, Scalar>> samples;
        std::optional<std::size_t> tail_start;
        for (std::size_t n : sizes) {
            const Scalar v = path[n - 1];
            if (std::isnan(v.real()) && opts.kind == MinorKind::det) continue;  // unsampled after breakdown
            Scalar est = v;
            double bound = 0.0;
            if (opts.kind == MinorKind::trace) {
                if (tail.exact) est = v + tail.trace;
                bound = tail.trace_error;
            } else {
                if (tail.exact) est = v * std::exp(tail.log_det);
                bound = det_bound;
            }
            if (!tail_start && floors[n - 1] >= anchor) tail_start = samples.size();
            samples.emplace_back(n, est);
            out.rows.push_back(MinorRow{s.name(), n, v, est, bound});
        }

        ConvergenceReport<Scalar> rep;
        if (samples.size() >= 3) {
            rep = classify_chain(
                std::move(samples), opts.tol, opts.div_threshold,
                [](const Scalar& a, const Scalar& b) { return default_distance(a, b); }, tail_start);
        } else {
            rep.samples = std::move(samples);
            rep.tol = opts.tol;
        }
        if (top_is_whole_space) {
            // The chain ends at the whole space, the top element of the directed set, so the
            // net converges to its value there.
            rep.verdict = value_is_finite(rep.samples.back().second) ? Verdict::converged : Verdict::diverged;
            rep.limit = rep.samples.back().second;
            rep.witness.reset();
        }
        out.strategies.push_back(s.name());
        out.per_strategy.push_back(std::move(rep));
    }

    // Merge: diverged if any strategy diverged; converged if all converged to limits that
    // agree within tol.
    ConvergenceReport<Scalar>& m = out.report;
    m.tol = opts.tol;
    bool all_converged = true;
    double osc = 0.0;
    for (const auto& r : out.per_strategy) {
        const std::size_t offset = m.samples.size();
        m.samples.insert(m.samples.end(), r.samples.begin(), r.samples.end());
        if (r.verdict == Verdict::diverged && !m.witness && r.witness) {
            m.witness = Witness{r.witness->first + offset, r.witness->second + offset, r.witness->distance};
        }
        all_converged = all_converged && r.verdict == Verdict::converged;
        osc = std::max(osc, r.oscillation);
    }
    if (m.witness) {
        m.verdict = Verdict::diverged;
        m.oscillation = m.witness->distance;
    } else if (all_converged) {
        double spread = 0.0;
        const Scalar first = *out.per_strategy.front().limit;
        for (const auto& r : out.per_strategy) spread = std::max(spread, std::abs(*r.limit - first));
        m.oscillation = std::max(osc, spread);
        m.verdict = spread <= opts.tol ? Verdict::converged : Verdict::inconclusive;
        if (m.verdict == Verdict::converged) m.limit = first;
    } else {
        bool any_diverged = false;
        for (const auto& r : out.per_strategy) any_diverged = any_diverged || r.verdict == Verdict::diverged;
        m.verdict = any_diverged ? Verdict::diverged : Verdict::inconclusive;
        m.oscillation = osc;
    }
    if (opts.kind == MinorKind::det && m.limit) out.nonzero = std::abs(*m.limit) > opts.zero_threshold;
    return out;
}

// ---------------------------------------------------------------------------
// Probes

struct ProbeOptions {
    std::size_t n_max = 2048;
    double tol = 1e-6;
    double div_threshold = 1.0;
    double zero_threshold = 1e-12;
    std::uint64_t seed = 1;
    /// Empty: the probe's default strategy set.
    std::vector<Strategy> strategies;
};

struct TraceClassReport {
    MinorNetReport net;
    bool trace_class = false;
    std::optional<Scalar> trace;
    /// ||T||_tr estimated from singular values of T_N plus the complement; infinite when the
    /// complement's absolute sum diverges.
    double trace_norm_estimate = 0.0;
    double trace_norm_error = 0.0;
    /// |trace| <= trace norm (+ errors), checked when both are finite.
    bool trace_norm_consistent = true;
};

inline MinorNetOptions probe_net_options(MinorKind kind, const ProbeOptions& o, std::vector<Strategy> defaults) {
    MinorNetOptions m;
    m.kind = kind;
    m.strategies = o.strategies.empty() ? std::move(defaults) : o.strategies;
    for (auto& s : m.strategies)
        if (s.kind == StrategyKind::random && !s.seed) s.seed = o.seed;
    m.n_max = o.n_max;
    m.tol = o.tol;
    m.div_threshold = o.div_threshold;
    m.zero_threshold = o.zero_threshold;
    return m;
}

/// Trace-class membership through the trace-minor net over coordinate, adversarial-sign and
/// random filtrations.
inline TraceClassReport trace_class_probe(const OperatorSpec& t, const ProbeOptions& o = {}) {
    TraceClassReport r;
    r.net = minor_net(t, probe_net_options(MinorKind::trace, o,
                                           {{StrategyKind::coordinate},
                                            {StrategyKind::adversarial_plus},
                                            {StrategyKind::adversarial_minus},
                                            {StrategyKind::random, o.seed}}));
    r.trace_class = r.net.positive();
    if (r.trace_class) r.trace = r.net.report.limit;

    // Trace norm at the smallest truncation that still splits off the complement exactly.
    std::size_t N = r.net.truncation;
    if (const std::size_t small = std::min<std::size_t>(N, 64); t.tail(small).exact) N = small;
    else if (auto need = t.required_truncation(o.tol); need && *need > 0 && *need < N && t.tail(*need).exact) N = *need;
    const TailInfo tail = t.tail(N);
    double head = 0.0;
    if (auto s = t.diagonal_sequence(); s && !s->is_product()) {
        for (std::size_t j = 1; j <= N; ++j) head += std::fabs(s->value(j));
    } else if (N <= 2048) {
        head = singular_value_sum(Matrix(t.truncated(N)));
    } else {
        head = infinity;
    }
    if (tail.exact) {
        r.trace_norm_estimate = head + tail.trace_norm;
    } else {
        r.trace_norm_estimate = head;
        r.trace_norm_error = tail.trace_norm_error;
    }
    if (r.trace && std::isfinite(r.trace_norm_estimate))
        r.trace_norm_consistent =
            std::abs(*r.trace) <= r.trace_norm_estimate + r.trace_norm_error + o.tol + 1e-10;
    return r;
}

/// Determinant-class membership: the determinant-minor net over all strategies converges to a
/// nonzero limit.
inline MinorNetReport det_class_probe(const OperatorSpec& a, const ProbeOptions& o = {}) {
    return minor_net(a, probe_net_options(MinorKind::det, o, all_strategies(o.seed)));
}

// ---------------------------------------------------------------------------
// Fredholm determinant

enum class FredholmMethod { series, eigen };

struct FredholmOptions {
    FredholmMethod method = FredholmMethod::series;
    /// Truncation; default 64 for operators whose complement is exact, otherwise the smallest
    /// N allowed by the decay bound.
    std::optional<std::size_t> N;
    /// Highest exterior power in the series; default N.
    std::optional<std::size_t> k_max;
    double tol = 1e-10;
};

struct FredholmResult {
    Scalar value;
    std::optional<Scalar> series;
    std::optional<Scalar> eigen;
    std::size_t N = 0;
    std::size_t k_max = 0;
    /// Bound on the dropped series terms sum_{k > k_max} ||T_N||_tr^k / k!.
    double remainder_bound = 0.0;
    /// Bound on the error from truncating T at N (0 when the complement is exact).
    double truncation_bound = 0.0;
};

/// det(1 - T) = sum_k (-1)^k tr(wedge^k T) for trace-class T.
inline FredholmResult fredholm_det(const OperatorSpec& t, const FredholmOptions& o = {}) {
    if (!(o.tol > 0.0)) throw DomainError("fredholm_det: tol must be positive");
    FredholmResult r;
    const auto dim = t.dim();
    std::size_t N = 64;
    if (auto need = t.required_truncation(o.tol)) {
        N = *need;
        if (o.N && *o.N < *need) throw TruncationError(*o.N, *need);
    }
    if (o.N) N = *o.N;
    if (dim) N = std::min(N, *dim);
    if (N > 2048) throw DomainError("fredholm_det: truncation " + std::to_string(N) + " exceeds the dense limit 2048");
    r.N = N;
    r.k_max = std::min(o.k_max.value_or(N), N);

    const TailInfo tail = t.tail(N);
    Scalar correction(1.0);
    const Matrix tn = Matrix(t.truncated(N));
    const double tn_norm = singular_value_sum(tn);
    if (tail.exact) {
        if (!std::isfinite(tail.trace_norm))
            throw DomainError("fredholm_det: operator is not trace class (trace-norm tail diverges)");
        correction = std::exp(OperatorSpec::identity_minus(t).tail(N).log_det);
    } else {
        r.truncation_bound = tail.trace_norm_error * std::exp(1.0 + 2.0 * tn_norm + tail.trace_norm_error);
    }

    // Series
    const std::vector<Scalar> e = elementary_symmetric(tn);
    Scalar sum(0.0);
    for (std::size_t k = 0; k <= r.k_max; ++k) sum += ((k % 2) ? -1.0 : 1.0) * e[k];
    if (r.k_max < N) {
        double term = 1.0;
        for (std::size_t k = 1; k <= r.k_max; ++k) term *= tn_norm / static_cast<double>(k);
        double rem = 0.0;
        for (std::size_t k = r.k_max + 1; k <= N; ++k) {
            term *= tn_norm / static_cast<double>(k);
            rem += term;
            if (term < 1e-300 || (k > tn_norm && term < 1e-20 * rem)) break;
        }
        r.remainder_bound = rem;
    }
    r.series = sum * correction;

    // Eigenvalue product (normal operators)
    if (t.is_normal()) {
        Scalar prod(1.0);
        if (auto s = t.diagonal_sequence()) {
            for (std::size_t j = 1; j <= N; ++j) prod *= 1.0 - s->value(j);
        } else {
            const Eigen::ComplexEigenSolver<Matrix> es(tn, false);
            for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) prod *= Scalar(1.0) - es.eigenvalues()(j);
        }
        r.eigen = prod * correction;
    } else if (o.method == FredholmMethod::eigen) {
        throw DomainError("fredholm_det: the eigenvalue product requires a normal operator");
    }

    r.value = o.method == FredholmMethod::series ? *r.series : *r.eigen;
    if (r.eigen && r.k_max == N) {
        const double gap = std::abs(*r.series - *r.eigen);
        if (gap > 2.0 * o.tol)
            throw Error("fredholm_det: series and eigenvalue methods disagree by " + std::to_string(gap));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Equivalences and laws

struct EquivalenceReport {
    MinorNetReport det_probe;        // on A
    TraceClassReport trace_probe;    // on 1 - A
    bool det_class = false;
    bool trace_class = false;
    bool invertible = false;  // det(1 - T) != 0
    bool verdicts_match = false;
    std::optional<Scalar> fredholm;  // det(1 - (1 - A)) when 1 - A is trace class
    std::optional<bool> values_match;
};

/// For normal A: A is of determinant class exactly when 1 - A is trace class (with
/// det(1 - T) != 0), and then det A equals the Fredholm determinant of T = 1 - A.
inline EquivalenceReport det_class_to_trace_class_check(const OperatorSpec& a, const ProbeOptions& o = {}) {
    if (!a.is_normal()) throw DomainError("det_class_to_trace_class_check requires a normal operator");
    EquivalenceReport r;
    const OperatorSpec t = OperatorSpec::identity_minus(a);
    r.det_probe = det_class_probe(a, o);
    r.trace_probe = trace_class_probe(t, o);
    r.det_class = r.det_probe.positive();
    r.trace_class = r.trace_probe.trace_class;
    if (r.trace_class) {
        FredholmOptions fo;
        fo.tol = std::max(o.tol, 1e-12);
        r.fredholm = fredholm_det(t, fo).value;
        r.invertible = std::abs(*r.fredholm) > o.zero_threshold;
        if (r.det_class) r.values_match = std::abs(*r.det_probe.report.limit - *r.fredholm) <= o.tol;
    }
    // A trace-class T with det(1 - T) = 0 leaves 1 - T singular, hence not of determinant class.
    r.verdicts_match = r.det_class == (r.trace_class && r.invertible);
    return r;
}

struct BlockReport {
    MinorNetReport whole;
    MinorNetReport head;  // A restricted to E_split
    MinorNetReport rest;  // A restricted to E_split^perp
    Scalar det_whole;
    Scalar det_head;
    Scalar det_rest;
    double residual = 0.0;
};

inline Scalar limit_or_last(const MinorNetReport& r) {
    if (r.report.limit) return *r.report.limit;
    return r.report.samples.empty() ? Scalar(not_a_number) : r.report.samples.back().second;
}

/// det A = det(A_U) det(A_{U^perp}) for U = span(e_1..e_split) when A respects U (+) U^perp.
inline BlockReport block_factor_check(const OperatorSpec& a, std::size_t split, const ProbeOptions& o = {}) {
    if (split == 0) throw DomainError("block_factor_check: split must be at least 1");
    if (auto d = a.dim(); d && split >= *d) throw DomainError("block_factor_check: split must lie inside the space");
    if (!a.respects_split(split))
        throw DomainError("operator does not respect the split after coordinate " + std::to_string(split));
    BlockReport r;
    const auto net = [&](const OperatorSpec& x) {
        return minor_net(x, probe_net_options(MinorKind::det, o, all_strategies(o.seed)));
    };
    r.whole = net(a);
    r.head = net(a.restrict(0, split));
    r.rest = net(a.restrict(split));
    r.det_whole = limit_or_last(r.whole);
    r.det_head = limit_or_last(r.head);
    r.det_rest = limit_or_last(r.rest);
    r.residual = std::abs(r.det_whole - r.det_head * r.det_rest);
    return r;
}

struct ProductReport {
    MinorNetReport a;
    MinorNetReport b;
    MinorNetReport ab;
    double residual = 0.0;
    /// Both factors probed as determinant class.
    bool valid = false;
};

/// det(AB) = det(A) det(B) for operators diagonal in a common basis.
inline ProductReport product_rule_check(const OperatorSpec& a, const OperatorSpec& b, const ProbeOptions& o = {}) {
    const auto sa = a.diagonal_sequence();
    const auto sb = b.diagonal_sequence();
    if (!sa || !sb) throw DomainError("product_rule_check requires operators diagonal in the coordinate basis");
    const OperatorSpec ab = OperatorSpec::diagonal(DiagonalSequence::product({*sa, *sb}));
    ProductReport r;
    const auto net = [&](const OperatorSpec& x) {
        return minor_net(x, probe_net_options(MinorKind::det, o, all_strategies(o.seed)));
    };
    r.a = net(a);
    r.b = net(b);
    r.ab = net(ab);
    r.valid = r.a.positive() && r.b.positive();
    r.residual = std::abs(limit_or_last(r.ab) - limit_or_last(r.a) * limit_or_last(r.b));
    return r;
}

/// Determinant minors of a (typically non-normal) operator along every strategy, reported as
/// trajectories for exploration.
inline MinorNetReport probe_open_question(const OperatorSpec& a, const ProbeOptions& o = {}) {
    return det_class_probe(a, o);
}

}  // namespace netcalc
