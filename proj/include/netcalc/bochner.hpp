#pragma once

// Bochner integration by nets of simple functions.
//
// build_approximant realizes s_{p,n} = sum_{j<=n} 1_{D_j} c_j with delta = 1/n,
//   A_j = { x outside the null set : p(f(x)) > delta and p(f(x) - c_j) < delta },
//   D_j = A_j minus (A_1 u ... u A_{j-1}).
// bochner_integrate walks the seminorm chain k = 1, 2, ... and records the integrals of
// the approximants as a chain in (k, n); the limit is certified by classify_chain.

#include <netcalc/error.hpp>
#include <netcalc/lcspace.hpp>
#include <netcalc/measure.hpp>
#include <netcalc/netcore.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

struct ApproximationBasis {
    std::size_t k = 1;
    CountableDenseSet dense;
    std::optional<MeasurableSet> nullset;
};

using BasisProvider = std::function<ApproximationBasis(std::size_t k)>;

struct BochnerOptions {
    std::size_t budget = 10000;         // largest n (number of dense points / atoms)
    std::size_t depth = 6;              // seminorms walked for countably infinite families
    std::size_t domain_cap = 1 << 16;   // largest truncated discrete domain
    std::size_t scan_grid = 2048;       // level-set scan resolution on [0,1]
    std::size_t max_components = 512;   // per preimage on [0,1]
    std::size_t max_level = 13;         // finest partition 2^max_level cells on [0,1]
};

struct IntegralResult {
    LcsVector value;
    std::map<std::size_t, double> per_seminorm_defect;
    ConvergenceReport<LcsVector> report;
};

/// A convergence probe that did not certify a limit.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, ConvergenceReport<LcsVector> report)
        : Error(what), report_(std::move(report)) {}
    const ConvergenceReport<LcsVector>& report() const noexcept { return report_; }

private:
    ConvergenceReport<LcsVector> report_;
};

inline LcsVector simple_integral(const MeasureSpace& space, const SimpleFunction& s) {
    LcsVector acc;
    for (const auto& a : s.atoms) {
        if (a.value.is_zero()) continue;
        const double mu = measure_of(space, a.set);
        if (!std::isfinite(mu)) throw DomainError("simple function atom has infinite measure");
        acc += mu * a.value;
    }
    return acc;
}

namespace detail {

inline std::vector<std::size_t> domain_points(const MeasureSpace& space, const MeasurableFn& f,
                                              const SeminormFamily& family, std::size_t k, double tol,
                                              std::size_t cap) {
    std::vector<std::size_t> pts;
    std::optional<std::size_t> J = space.size();
    if (f.support) {
        const auto* d = std::get_if<DiscreteSet>(&*f.support);
        if (!d) throw DomainError("interval support on a discrete space");
        if (!d->cofinite) {
            for (std::size_t j : d->members)
                if (!J || j <= *J) pts.push_back(j);
            return pts;
        }
    }
    if (!J) {
        if (!f.bound)
            throw Error("not integrally bounded at seminorm " + std::to_string(k) +
                        ": no bound hint to truncate the infinite domain");
        const double B = f.bound(k);
        J = tail_cutoff(space, B, tol / 4.0, cap);
        if (!J)
            throw Error("discrete domain truncation for seminorm " + std::to_string(k) + " exceeds " +
                        std::to_string(cap) + " points");
    }
    (void)family;
    for (std::size_t j = 1; j <= *J; ++j)
        if (!f.support || set_contains(*f.support, static_cast<double>(j))) pts.push_back(j);
    return pts;
}

inline bool excluded(const std::optional<MeasurableSet>& nullset, double x) {
    return nullset && set_contains(*nullset, x);
}

// Open set {x in [0,1] : h(x) > 0} for h continuous between the given cuts.
inline IntervalSet positive_set(const std::function<double(double)>& h, std::vector<double> cuts, std::size_t grid,
                                std::size_t max_components, const std::string& name) {
    for (std::size_t i = 0; i <= grid; ++i) cuts.push_back(static_cast<double>(i) / static_cast<double>(grid));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto crossing = [&](double a, double b, bool a_pos) {
        for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
            const double m = 0.5 * (a + b);
            ((h(m) > 0.0) == a_pos ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    std::vector<Interval> parts;
    double prev_x = cuts.front();
    bool prev_pos = h(prev_x) > 0.0;
    double open = prev_x;  // left end of the current positive run, valid while prev_pos
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double x = cuts[i];
        const bool pos = h(x) > 0.0;
        if (pos != prev_pos) {
            const double r = crossing(prev_x, x, prev_pos);
            if (pos) open = r;
            else parts.push_back({open, r});
        }
        prev_x = x;
        prev_pos = pos;
    }
    if (prev_pos) parts.push_back({open, 1.0});
    auto set = IntervalSet::of(std::move(parts));
    if (set.parts.size() > max_components)
        throw DomainError("preimage " + name + " has more than " + std::to_string(max_components) +
                          " components; it leaves the supported class of finite interval unions");
    return set;
}

}  // namespace detail

/// The sets A_j and D_j (j = 1..n) of the approximant construction.
struct ApproximantSets {
    std::vector<MeasurableSet> A;
    std::vector<MeasurableSet> D;
};

inline ApproximantSets approximant_sets(const MeasureSpace& space, const MeasurableFn& f,
                                        const ApproximationBasis& basis, const SeminormFamily& family, std::size_t n,
                                        double tol, const BochnerOptions& opt = {}) {
    if (n == 0) throw DomainError("approximant index n must be positive");
    const double delta = 1.0 / static_cast<double>(n);
    const std::size_t k = basis.k;
    ApproximantSets out;
    if (space.is_discrete()) {
        const auto pts = detail::domain_points(space, f, family, k, tol, opt.domain_cap);
        std::vector<std::vector<std::size_t>> A(n);
        for (std::size_t x : pts) {
            if (detail::excluded(basis.nullset, static_cast<double>(x))) continue;
            const LcsVector fx = f(static_cast<double>(x));
            if (!(family.eval(k, fx) > delta)) continue;
            for (std::size_t j = 1; j <= n; ++j)
                if (family.eval(k, fx - basis.dense.enumerate(j)) < delta) A[j - 1].push_back(x);
        }
        std::vector<std::size_t> taken;
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<std::size_t> d;
            std::set_difference(A[j].begin(), A[j].end(), taken.begin(), taken.end(), std::back_inserter(d));
            std::vector<std::size_t> merged;
            std::set_union(taken.begin(), taken.end(), d.begin(), d.end(), std::back_inserter(merged));
            taken = std::move(merged);
            out.A.push_back(DiscreteSet::of(std::move(A[j])));
            out.D.push_back(DiscreteSet::of(std::move(d)));
        }
        return out;
    }
    std::vector<double> cuts = f.breakpoints;
    const auto big = detail::positive_set(
        [&](double x) { return family.eval(k, f(x)) - delta; }, cuts, opt.scan_grid, opt.max_components,
        "{x : p(f(x)) > " + std::to_string(delta) + "}");
    IntervalSet usable = big;
    if (basis.nullset) usable = usable.minus(std::get<IntervalSet>(*basis.nullset));
    IntervalSet taken;
    for (std::size_t j = 1; j <= n; ++j) {
        const LcsVector c = basis.dense.enumerate(j);
        const auto near = detail::positive_set(
            [&](double x) { return delta - family.eval(k, f(x) - c); }, cuts, opt.scan_grid, opt.max_components,
            "{x : p(f(x) - c_" + std::to_string(j) + ") < " + std::to_string(delta) + "}");
        IntervalSet a = usable.intersect(near);
        IntervalSet d = a.minus(taken);
        std::vector<Interval> all = taken.parts;
        all.insert(all.end(), d.parts.begin(), d.parts.end());
        taken = IntervalSet::of(std::move(all));
        out.A.push_back(std::move(a));
        out.D.push_back(std::move(d));
    }
    return out;
}

/// integral of p_k(f) over the space.
inline double seminorm_integral(const MeasureSpace& space, const MeasurableFn& f, const SeminormFamily& family,
                                std::size_t k, double tol) {
    IntegrandHints hints;
    if (f.bound) hints.bound = f.bound(k);
    hints.support = f.support;
    hints.breakpoints = f.breakpoints;
    return scalar_integral(space, [&](double x) { return family.eval(k, f(x)); }, tol, hints);
}

inline SimpleFunction build_approximant(const MeasureSpace& space, const MeasurableFn& f,
                                        const ApproximationBasis& basis, const SeminormFamily& family, std::size_t n,
                                        double tol, const BochnerOptions& opt = {}) {
    if (n == 0) throw DomainError("approximant index n must be positive");
    const double bound = seminorm_integral(space, f, family, basis.k, tol);
    if (!std::isfinite(bound)) throw Error("f is not integrally bounded at seminorm " + std::to_string(basis.k));
    const double delta = 1.0 / static_cast<double>(n);
    const std::size_t k = basis.k;
    // A repeated enumeration only produces empty D sets after its first cycle.
    const std::size_t reach = basis.dense.period() ? std::min(n, *basis.dense.period()) : n;
    SimpleFunction s;
    if (space.is_discrete()) {
        std::vector<std::vector<std::size_t>> D(reach);
        for (std::size_t x : detail::domain_points(space, f, family, k, tol, opt.domain_cap)) {
            if (detail::excluded(basis.nullset, static_cast<double>(x))) continue;
            const LcsVector fx = f(static_cast<double>(x));
            if (!(family.eval(k, fx) > delta)) continue;
            for (std::size_t j = 1; j <= reach; ++j)
                if (family.eval(k, fx - basis.dense.enumerate(j)) < delta) {
                    D[j - 1].push_back(x);
                    break;
                }
        }
        for (std::size_t j = 0; j < reach; ++j)
            if (!D[j].empty()) s.atoms.push_back({DiscreteSet::of(std::move(D[j])), basis.dense.enumerate(j + 1)});
        return canonicalize(s);
    }
    ApproximationBasis trimmed = basis;
    const auto sets = approximant_sets(space, f, trimmed, family, reach, tol, opt);
    for (std::size_t j = 0; j < reach; ++j)
        if (!std::get<IntervalSet>(sets.D[j]).empty()) s.atoms.push_back({sets.D[j], basis.dense.enumerate(j + 1)});
    return canonicalize(s);
}

/// integral of p_k(f - s).
inline double approximation_defect(const MeasureSpace& space, const MeasurableFn& f, const SimpleFunction& s,
                                   const SeminormFamily& family, std::size_t k, double tol) {
    IntegrandHints hints;
    if (f.bound) {
        double m = 0.0;
        for (const auto& a : s.atoms) m = std::max(m, family.eval(k, a.value));
        hints.bound = f.bound(k) + m;
    }
    hints.breakpoints = f.breakpoints;
    for (const auto& a : s.atoms)
        if (const auto* iv = std::get_if<IntervalSet>(&a.set))
            for (const auto& p : iv->parts) hints.breakpoints.insert(hints.breakpoints.end(), {p.lo, p.hi});
    if (space.is_discrete()) {
        // s vanishes outside its atoms; f's own support (if finite) and the atoms cover the integrand.
        if (f.support && !std::get<DiscreteSet>(*f.support).cofinite) {
            auto members = std::get<DiscreteSet>(*f.support).members;
            for (const auto& a : s.atoms) {
                const auto& d = std::get<DiscreteSet>(a.set);
                if (d.cofinite) {
                    members.clear();
                    break;
                }
                members.insert(members.end(), d.members.begin(), d.members.end());
            }
            if (!members.empty()) hints.support = DiscreteSet::of(std::move(members));
        }
    }
    return scalar_integral(space, [&](double x) { return family.eval(k, f(x) - s(x)); }, tol, hints);
}

/// Default bases drawn from the image of f: on a discrete space the image of the
/// (truncated) domain; on [0,1] the images of the van der Corput points 1/2, 1/4, 3/4, ...
inline BasisProvider image_bases(const MeasureSpace& space, const MeasurableFn& f, const SeminormFamily& family,
                                 double tol, const BochnerOptions& opt = {}) {
    return [space, f, family, tol, opt](std::size_t k) {
        std::vector<LcsVector> pts;
        if (space.is_discrete()) {
            for (std::size_t x : detail::domain_points(space, f, family, k, tol, opt.domain_cap))
                pts.push_back(f(static_cast<double>(x)));
            return ApproximationBasis{k, dense_from_image(pts, family, k), f.nullset};
        }
        for (std::size_t i = 1; i <= 4096; ++i) {
            double x = 0.0, scale = 0.5;
            for (std::size_t b = i; b > 0; b >>= 1, scale *= 0.5)
                if (b & 1U) x += scale;
            pts.push_back(f(x));
        }
        return ApproximationBasis{k, CountableDenseSet::cycling(std::move(pts)), f.nullset};
    };
}

namespace detail {

inline ConvergenceReport<LcsVector> classify_integrals(std::vector<std::pair<std::size_t, LcsVector>> samples,
                                                       const SeminormFamily& family, std::size_t depth, double tol,
                                                       std::optional<std::size_t> tail_start) {
    while (samples.size() < 3) samples.push_back(samples.back());
    return classify_chain(
        std::move(samples), tol, 1e300,
        [&](const LcsVector& a, const LcsVector& b) { return family.distance(a, b, depth); }, tail_start);
}

inline IntegralResult integrate_discrete(const MeasureSpace& space, const MeasurableFn& f,
                                         const SeminormFamily& family, const BasisProvider& bases, double tol,
                                         const BochnerOptions& opt) {
    const std::size_t K = family.top(opt.depth);
    const double target = std::min(1.0, tol);
    IntegralResult result;
    std::vector<std::pair<std::size_t, LcsVector>> samples;
    std::size_t n = 1;
    std::size_t gate = 0;
    for (std::size_t k = 1; k <= K; ++k) {
        const ApproximationBasis basis = bases(k);
        double d = infinity;
        for (;;) {
            const SimpleFunction s = build_approximant(space, f, basis, family, n, tol, opt);
            d = approximation_defect(space, f, s, family, k, tol / 4.0);
            samples.emplace_back(samples.size(), simple_integral(space, s));
            if (d < target || n >= opt.budget) break;
            n = std::min(opt.budget, 2 * n);
        }
        if (!(d < 1.0))
            throw Error("not Bochner-approximable at budget: defect " + std::to_string(d) + " at seminorm " +
                        std::to_string(k) + " with n = " + std::to_string(n));
        result.per_seminorm_defect[k] = d;
        if (k == K) {
            gate = samples.size() - 1;
            for (std::size_t extra = 1; extra < stabilization_window && n + extra <= opt.budget; ++extra)
                samples.emplace_back(samples.size(),
                                     simple_integral(space, build_approximant(space, f, basis, family, n + extra, tol, opt)));
        }
    }
    // Approximants past the gate differ by at most the sum of two defects.
    result.report = classify_integrals(std::move(samples), family, K, 2.0 * tol, gate);
    return result;
}

// Partition net on [0,1]: the simple function r_L = (4 s_{2^L} - s_{2^{L-1}}) / 3, where s_m
// takes the value f(midpoint) on each of m equal cells.
inline IntegralResult integrate_interval(const MeasureSpace& space, const MeasurableFn& f,
                                         const SeminormFamily& family, const BasisProvider& bases, double tol,
                                         const BochnerOptions& opt) {
    const std::size_t K = family.top(opt.depth);
    IntegralResult result;
    for (std::size_t k = 1; k <= K; ++k) {
        // Hard gate: some exact approximant has defect below 1.
        const ApproximationBasis basis = bases(k);
        double d = infinity;
        for (std::size_t n = 1;; n = std::min(opt.budget, 2 * n)) {
            const SimpleFunction s = build_approximant(space, f, basis, family, n, tol, opt);
            d = approximation_defect(space, f, s, family, k, std::min(tol, 1e-3));
            if (d < 1.0 || n >= opt.budget) break;
        }
        if (!(d < 1.0))
            throw Error("not Bochner-approximable at budget: defect " + std::to_string(d) + " at seminorm " +
                        std::to_string(k));
    }
    const std::size_t max_level =
        std::min<std::size_t>(opt.max_level, static_cast<std::size_t>(std::floor(std::log2(double(opt.budget)))));
    auto midpoint_values = [&](std::size_t m) {
        std::vector<LcsVector> v(m);
        for (std::size_t i = 0; i < m; ++i) v[i] = f((static_cast<double>(i) + 0.5) / static_cast<double>(m));
        return v;
    };
    std::vector<std::pair<std::size_t, LcsVector>> samples;
    std::vector<LcsVector> coarse = midpoint_values(1);
    std::vector<LcsVector> cells;
    for (std::size_t L = 1; L <= max_level; ++L) {
        const std::size_t m = std::size_t{1} << L;
        const auto fine = midpoint_values(m);
        cells.assign(m, LcsVector{});
        LcsVector integral;
        for (std::size_t i = 0; i < m; ++i) {
            cells[i] = (4.0 / 3.0) * fine[i] - (1.0 / 3.0) * coarse[i / 2];
            integral += cells[i];
        }
        integral *= 1.0 / static_cast<double>(m);
        samples.emplace_back(m, integral);
        coarse = fine;
    }
    const std::size_t m = cells.size();
    auto r = [&](double x) {
        const std::size_t i = std::min(m - 1, static_cast<std::size_t>(x * static_cast<double>(m)));
        return cells[i];
    };
    std::vector<double> cuts = f.breakpoints;
    for (std::size_t i = 1; i < 2 * m; ++i) cuts.push_back(static_cast<double>(i) / static_cast<double>(2 * m));
    for (std::size_t k = 1; k <= K; ++k) {
        IntegrandHints hints;
        hints.breakpoints = cuts;
        result.per_seminorm_defect[k] =
            scalar_integral(space, [&](double x) { return family.eval(k, f(x) - r(x)); }, std::max(tol, 1e-9), hints);
    }
    result.report = classify_integrals(std::move(samples), family, K, tol, std::nullopt);
    return result;
}

}  // namespace detail

inline IntegralResult bochner_integrate(const MeasureSpace& space, const MeasurableFn& f,
                                        const SeminormFamily& family, const BasisProvider& bases, double tol,
                                        const BochnerOptions& opt = {}) {
    if (!(tol > 0.0)) throw DomainError("bochner_integrate: tol must be positive");
    const std::size_t K = family.top(opt.depth);
    for (std::size_t k = 1; k <= K; ++k)
        if (!std::isfinite(seminorm_integral(space, f, family, k, tol)))
            throw Error("f is not integrally bounded at seminorm " + std::to_string(k));
    IntegralResult r = space.is_discrete() ? detail::integrate_discrete(space, f, family, bases, tol, opt)
                                           : detail::integrate_interval(space, f, family, bases, tol, opt);
    if (r.report.verdict != Verdict::converged)
        throw IntegrationError(std::string("approximant integrals did not stabilize (") + to_string(r.report.verdict) +
                                   ")",
                               r.report);
    r.value = *r.report.limit;
    return r;
}

inline IntegralResult bochner_integrate(const MeasureSpace& space, const MeasurableFn& f,
                                        const SeminormFamily& family, double tol, const BochnerOptions& opt = {}) {
    return bochner_integrate(space, f, family, image_bases(space, f, family, tol, opt), tol, opt);
}

/// Continuous linear maps between the built-in spaces.
class LinearMap {
public:
    enum class Kind { identity, matrix, coordinate, evaluation };

    static LinearMap identity() { return LinearMap(Kind::identity); }
    /// Acts on the first cols() coordinates of a sequence.
    static LinearMap matrix(Eigen::MatrixXd m) {
        LinearMap t(Kind::matrix);
        t.m_ = std::move(m);
        return t;
    }
    /// x -> x_i as a vector of R^1.
    static LinearMap coordinate(std::size_t i) {
        if (i == 0) throw DomainError("coordinate index is 1-based");
        LinearMap t(Kind::coordinate);
        t.index_ = i;
        return t;
    }
    /// f -> f(t) as a vector of R^1.
    static LinearMap evaluation(double t) {
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("evaluation point must lie in [0,1]");
        LinearMap m(Kind::evaluation);
        m.point_ = t;
        return m;
    }

    Kind kind() const { return kind_; }
    std::size_t index() const { return index_; }

    LcsVector operator()(const LcsVector& v) const {
        switch (kind_) {
            case Kind::identity: return v;
            case Kind::coordinate: return LcsVector::sequence({v.coord(index_)});
            case Kind::evaluation: return LcsVector::sequence({v(point_)});
            case Kind::matrix: {
                if (v.kind() != LcsVector::Kind::sequence || !v.tail().empty() ||
                    v.coords().size() > static_cast<std::size_t>(m_.cols()))
                    throw DomainError("matrix map needs a vector of R^" + std::to_string(m_.cols()));
                Eigen::VectorXd x = Eigen::VectorXd::Zero(m_.cols());
                for (std::size_t i = 0; i < v.coords().size(); ++i) x[static_cast<Eigen::Index>(i)] = v.coords()[i];
                const Eigen::VectorXd y = m_ * x;
                return LcsVector::sequence(std::vector<double>(y.data(), y.data() + y.size()));
            }
        }
        return v;
    }

    /// Operator norm bound ||T v||_dst <= c * p_top(v); used to transport bound hints.
    double norm_bound() const {
        switch (kind_) {
            case Kind::identity:
            case Kind::coordinate:
            case Kind::evaluation: return 1.0;
            case Kind::matrix: return m_.operatorNorm();
        }
        return 1.0;
    }

private:
    explicit LinearMap(Kind k) : kind_(k) {}
    Kind kind_;
    Eigen::MatrixXd m_;
    std::size_t index_ = 0;
    double point_ = 0.0;
};

/// T o f with transported hints.
inline MeasurableFn compose(const LinearMap& T, const MeasurableFn& f, const SeminormFamily& source) {
    MeasurableFn g;
    g.eval = [T, f](double x) { return T(f(x)); };
    g.support = f.support;
    g.breakpoints = f.breakpoints;
    g.nullset = f.nullset;
    if (f.bound) {
        g.bound = [T, f, source](std::size_t k) {
            if (T.kind() == LinearMap::Kind::identity) return f.bound(k);
            // |x_i| <= p_i(x) on sequence spaces; otherwise the top seminorm controls T.
            const std::size_t idx = T.kind() == LinearMap::Kind::coordinate && !source.count()
                                        ? T.index()
                                        : source.top(1);
            return T.norm_bound() * f.bound(idx);
        };
    }
    return g;
}

/// p_top(T(integral f) - integral T(f)) in the target family.
inline double pushforward_check(const LinearMap& T, const MeasureSpace& space, const MeasurableFn& f,
                                const SeminormFamily& source, const SeminormFamily& target, double tol,
                                const BochnerOptions& opt = {}) {
    const IntegralResult lhs = bochner_integrate(space, f, source, tol, opt);
    const MeasurableFn g = compose(T, f, source);
    const IntegralResult rhs = bochner_integrate(space, g, target, tol, opt);
    return target.eval(target.top(opt.depth), T(lhs.value) - rhs.value);
}

/// Sampled sup of p_k(f(x)); advisory only.
inline double essential_sup_probe(const MeasureSpace& space, const MeasurableFn& f, const SeminormFamily& family,
                                  std::size_t k, std::size_t samples = 1024) {
    double m = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = space.is_discrete() ? static_cast<double>(i + 1)
                                             : (static_cast<double>(i) + 0.5) / static_cast<double>(samples);
        if (space.size() && i + 1 > *space.size()) break;
        if (detail::excluded(f.nullset, x)) continue;
        m = std::max(m, family.eval(k, f(x)));
    }
    return m;
}

}  // namespace netcalc
