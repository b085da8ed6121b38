#pragma once

// Measure spaces (countable discrete, [0,1] with Lebesgue measure), set descriptors,
// measurable vector-valued functions and simple functions.
//
// Discrete points are the positive integers and are passed to functions as doubles.
// Interval sets are finite unions of half-open pieces [lo, hi); a piece ending at 1
// also contains 1.

#include <netcalc/error.hpp>
#include <netcalc/lcspace.hpp>
#include <netcalc/sequence.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace netcalc {

/// A finite set of points, or the complement of one (cofinite).
struct DiscreteSet {
    std::vector<std::size_t> members;  // sorted, unique
    bool cofinite = false;

    static DiscreteSet of(std::vector<std::size_t> m) {
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
        if (!m.empty() && m.front() == 0) throw DomainError("discrete points are 1-based");
        return {std::move(m), false};
    }
    static DiscreteSet all() { return {{}, true}; }
    static DiscreteSet all_except(std::vector<std::size_t> m) {
        auto s = of(std::move(m));
        s.cofinite = true;
        return s;
    }

    bool contains(std::size_t j) const {
        return std::binary_search(members.begin(), members.end(), j) != cofinite;
    }
    bool empty() const { return !cofinite && members.empty(); }
    friend bool operator==(const DiscreteSet&, const DiscreteSet&) = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of intervals, kept sorted, merged and free of null pieces.
struct IntervalSet {
    std::vector<Interval> parts;

    static IntervalSet of(std::vector<Interval> parts) {
        for (const auto& p : parts)
            if (!(p.lo <= p.hi) || !std::isfinite(p.lo) || !std::isfinite(p.hi))
                throw DomainError("malformed interval [" + std::to_string(p.lo) + ", " + std::to_string(p.hi) + "]");
        parts.erase(std::remove_if(parts.begin(), parts.end(), [](const Interval& p) { return p.lo == p.hi; }),
                    parts.end());
        std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        IntervalSet s;
        for (const auto& p : parts) {
            if (!s.parts.empty() && p.lo <= s.parts.back().hi) s.parts.back().hi = std::max(s.parts.back().hi, p.hi);
            else s.parts.push_back(p);
        }
        return s;
    }
    static IntervalSet unit() { return of({{0.0, 1.0}}); }

    bool contains(double x) const {
        for (const auto& p : parts)
            if ((p.lo <= x && x < p.hi) || (x == 1.0 && p.hi == 1.0)) return true;
        return false;
    }
    double length() const {
        double s = 0.0;
        for (const auto& p : parts) s += p.hi - p.lo;
        return s;
    }
    bool empty() const { return parts.empty(); }

    IntervalSet minus(const IntervalSet& o) const {
        std::vector<Interval> out;
        for (auto p : parts) {
            for (const auto& q : o.parts) {
                if (q.hi <= p.lo || q.lo >= p.hi) continue;
                if (q.lo > p.lo) out.push_back({p.lo, q.lo});
                p.lo = std::min(p.hi, q.hi);
                if (p.lo >= p.hi) break;
            }
            if (p.lo < p.hi) out.push_back(p);
        }
        return of(std::move(out));
    }
    IntervalSet intersect(const IntervalSet& o) const {
        std::vector<Interval> out;
        for (const auto& p : parts)
            for (const auto& q : o.parts) {
                const double lo = std::max(p.lo, q.lo), hi = std::min(p.hi, q.hi);
                if (lo < hi) out.push_back({lo, hi});
            }
        return of(std::move(out));
    }
    friend bool operator==(const IntervalSet&, const IntervalSet&) = default;
};

using MeasurableSet = std::variant<DiscreteSet, IntervalSet>;

inline bool set_contains(const MeasurableSet& s, double x) {
    if (const auto* d = std::get_if<DiscreteSet>(&s)) {
        if (x < 1.0 || std::nearbyint(x) != x) return false;
        return d->contains(static_cast<std::size_t>(x));
    }
    return std::get<IntervalSet>(s).contains(x);
}

class MeasureSpace {
public:
    enum class Kind { discrete, interval01 };

    /// Point j carries weight w_j (finite list or closed-form sequence).
    static MeasureSpace discrete(DiagonalSequence weights) {
        if (weights.is_product()) throw DomainError("discrete weights must be a list or a closed form");
        const std::size_t probe = weights.dim() ? *weights.dim() : 4096;
        for (std::size_t j = 1; j <= probe; ++j) {
            const double w = weights.value(j);
            if (!(w >= 0.0) || !std::isfinite(w))
                throw DomainError("discrete weight w_" + std::to_string(j) + " must be nonnegative and finite");
        }
        MeasureSpace m;
        m.kind_ = Kind::discrete;
        m.weights_ = std::move(weights);
        return m;
    }
    static MeasureSpace discrete(std::vector<double> weights) {
        if (weights.empty()) throw DomainError("discrete space needs at least one point");
        return discrete(DiagonalSequence::from_list(std::move(weights)));
    }
    static MeasureSpace interval01() {
        MeasureSpace m;
        m.kind_ = Kind::interval01;
        return m;
    }

    Kind kind() const { return kind_; }
    bool is_discrete() const { return kind_ == Kind::discrete; }
    const DiagonalSequence& weights() const { return weights_; }
    /// Number of points; empty for countably infinite discrete spaces and for [0,1].
    std::optional<std::size_t> size() const { return is_discrete() ? weights_.dim() : std::nullopt; }

    double weight(std::size_t j) const { return weights_.value(j); }
    /// sum_{j>J} w_j.
    double tail_mass(std::size_t J) const { return weights_.tail_sum(J); }
    double total() const { return is_discrete() ? weights_.tail_sum(0) : 1.0; }

    MeasurableSet whole() const {
        if (is_discrete()) return DiscreteSet::all();
        return IntervalSet::unit();
    }

private:
    Kind kind_ = Kind::interval01;
    DiagonalSequence weights_;
};

inline double measure_of(const MeasureSpace& space, const MeasurableSet& set) {
    if (space.is_discrete()) {
        const auto* d = std::get_if<DiscreteSet>(&set);
        if (!d) throw DomainError("interval set given for a discrete space");
        const auto n = space.size();
        double s = 0.0;
        for (std::size_t j : d->members) {
            if (j == 0 || (n && j > *n)) throw DomainError("point " + std::to_string(j) + " is not in the space");
            s += space.weight(j);
        }
        return d->cofinite ? space.total() - s : s;
    }
    const auto* iv = std::get_if<IntervalSet>(&set);
    if (!iv) throw DomainError("discrete set given for [0,1]");
    for (const auto& p : iv->parts)
        if (p.lo < 0.0 || p.hi > 1.0) throw DomainError("interval leaves [0,1]");
    return iv->length();
}

/// f : X -> V with optional hints.
struct MeasurableFn {
    std::function<LcsVector(double)> eval;
    std::optional<MeasurableSet> support;  // f vanishes outside
    std::function<double(std::size_t)> bound;  // k -> sup_x p_k(f(x))
    std::vector<double> breakpoints;  // interior points where f may jump ([0,1] only)
    std::optional<MeasurableSet> nullset;  // explicit null set excluded from the construction

    LcsVector operator()(double x) const { return eval(x); }
};

struct IntegrandHints {
    std::optional<double> bound;  // sup of the integrand
    std::optional<MeasurableSet> support;
    std::vector<double> breakpoints;
};

namespace detail {

// J with scale * tail_mass(J) <= target, or empty when the tail never gets that small.
inline std::optional<std::size_t> tail_cutoff(const MeasureSpace& space, double scale, double target,
                                              std::size_t cap) {
    auto ok = [&](std::size_t J) { return scale * space.tail_mass(J) <= target; };
    std::size_t hi = 1;
    while (!ok(hi)) {
        if (hi >= cap) return std::nullopt;
        hi = std::min(cap, hi * 2);
    }
    std::size_t lo = hi / 2;
    if (lo == 0) return hi;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

inline constexpr std::size_t discrete_term_cap = std::size_t{1} << 22;

}  // namespace detail

/// integral of g >= 0 over the space, within tol. Returns +inf when the integral is
/// detected to diverge; throws "possibly infinite" when the tail can be neither bounded
/// nor shown to diverge.
inline double scalar_integral(const MeasureSpace& space, const std::function<double(double)>& g, double tol,
                              const IntegrandHints& hints = {}) {
    if (!(tol > 0.0)) throw DomainError("scalar_integral: tol must be positive");
    if (space.is_discrete()) {
        auto term = [&](std::size_t j) {
            const double v = g(static_cast<double>(j));
            if (!(v >= 0.0)) throw DomainError("integrand must be nonnegative (point " + std::to_string(j) + ")");
            return space.weight(j) * v;
        };
        if (hints.support) {
            const auto* d = std::get_if<DiscreteSet>(&*hints.support);
            if (!d) throw DomainError("interval support hint on a discrete space");
            if (!d->cofinite) {
                double s = 0.0;
                for (std::size_t j : d->members)
                    if (!space.size() || j <= *space.size()) s += term(j);
                return s;
            }
        }
        if (auto n = space.size()) {
            double s = 0.0;
            for (std::size_t j = 1; j <= *n; ++j) s += term(j);
            return s;
        }
        if (hints.bound) {
            const double B = *hints.bound;
            if (!(B >= 0.0)) throw DomainError("bound hint must be nonnegative");
            if (B == 0.0) return 0.0;
            if (auto J = detail::tail_cutoff(space, B, tol / 2.0, detail::discrete_term_cap)) {
                double s = 0.0;
                for (std::size_t j = 1; j <= *J; ++j) s += term(j);
                return s + B * space.tail_mass(*J) / 2.0;
            }
        }
        // No usable bound: look for divergence in dyadic block sums.
        std::vector<double> blocks;
        double s = 0.0;
        for (std::size_t start = 1; start < detail::discrete_term_cap; start *= 2) {
            double b = 0.0;
            for (std::size_t j = start; j < 2 * start; ++j) b += term(j);
            s += b;
            if (!std::isfinite(s) || s > 1e300) return infinity;
            blocks.push_back(b);
        }
        const std::size_t m = blocks.size();
        bool flat = true;
        for (std::size_t i = m - 8; i < m; ++i)
            if (!(blocks[i] > 0.0 && blocks[i] >= 0.9 * blocks[i - 1])) flat = false;
        if (flat) return infinity;
        throw Error("scalar_integral: possibly infinite (no tail bound available)");
    }

    std::vector<double> cuts{0.0, 1.0};
    for (double b : hints.breakpoints)
        if (b > 0.0 && b < 1.0) cuts.push_back(b);
    std::vector<Interval> domain{{0.0, 1.0}};
    if (hints.support) {
        const auto* iv = std::get_if<IntervalSet>(&*hints.support);
        if (!iv) throw DomainError("discrete support hint on [0,1]");
        domain = IntervalSet::unit().intersect(*iv).parts;
        for (const auto& p : domain) cuts.insert(cuts.end(), {p.lo, p.hi});
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Interval> pieces;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        for (const auto& p : domain)
            if (p.lo <= mid && mid < p.hi) pieces.push_back({cuts[i], cuts[i + 1]});
    }
    double total = 0.0;
    const double share = tol / static_cast<double>(std::max<std::size_t>(1, pieces.size()));
    for (const auto& p : pieces) {
        using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
        double err = 0.0, l1 = 0.0;
        double v = GK::integrate(g, p.lo, p.hi, 0, 0.0, &err, &l1);
        if (std::isfinite(v) && err > 0.5 * share) {
            // Boost's tolerance is relative to the L1 norm of the piece.
            const double rel = std::max(1e-15, 0.5 * share / std::max(l1, 1e-300));
            v = GK::integrate(g, p.lo, p.hi, 20, rel, &err);
        }
        if (!std::isfinite(v)) return infinity;
        if (err > share)
            throw Error("scalar_integral: quadrature error " + std::to_string(err) + " exceeds tolerance on [" +
                        std::to_string(p.lo) + ", " + std::to_string(p.hi) + "]");
        total += v;
    }
    return total;
}

struct Atom {
    MeasurableSet set;
    LcsVector value;
};

/// s = sum_j 1_{A_j} v_j.
struct SimpleFunction {
    std::vector<Atom> atoms;

    LcsVector operator()(double x) const {
        LcsVector acc;
        for (const auto& a : atoms)
            if (set_contains(a.set, x)) acc += a.value;
        return acc;
    }
};

/// Rewrite s with pairwise disjoint sets, one atom per distinct nonzero value.
inline SimpleFunction canonicalize(const SimpleFunction& s) {
    SimpleFunction out;
    if (s.atoms.empty()) return out;
    const bool discrete = std::holds_alternative<DiscreteSet>(s.atoms.front().set);
    for (const auto& a : s.atoms)
        if (std::holds_alternative<DiscreteSet>(a.set) != discrete)
            throw DomainError("simple function mixes discrete and interval sets");

    // (piece, value) in a deterministic order, then grouped by value in first-seen order.
    std::vector<std::pair<MeasurableSet, LcsVector>> cells;
    if (discrete) {
        std::set<std::size_t> mentioned;
        for (const auto& a : s.atoms)
            for (std::size_t j : std::get<DiscreteSet>(a.set).members) mentioned.insert(j);
        for (std::size_t j : mentioned) cells.emplace_back(DiscreteSet::of({j}), s(static_cast<double>(j)));
        LcsVector rest;
        bool any_cofinite = false;
        for (const auto& a : s.atoms)
            if (std::get<DiscreteSet>(a.set).cofinite) {
                rest += a.value;
                any_cofinite = true;
            }
        if (any_cofinite)
            cells.emplace_back(DiscreteSet::all_except({mentioned.begin(), mentioned.end()}), rest);
    } else {
        std::vector<double> cuts;
        for (const auto& a : s.atoms)
            for (const auto& p : std::get<IntervalSet>(a.set).parts) cuts.insert(cuts.end(), {p.lo, p.hi});
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            cells.emplace_back(IntervalSet::of({{cuts[i], cuts[i + 1]}}), s(0.5 * (cuts[i] + cuts[i + 1])));
    }

    std::vector<LcsVector> values;
    std::vector<std::vector<MeasurableSet>> groups;
    for (auto& [set, v] : cells) {
        if (v.is_zero()) continue;
        auto it = std::find(values.begin(), values.end(), v);
        if (it == values.end()) {
            values.push_back(v);
            groups.emplace_back();
            it = values.end() - 1;
        }
        groups[static_cast<std::size_t>(it - values.begin())].push_back(std::move(set));
    }
    for (std::size_t g = 0; g < values.size(); ++g) {
        if (discrete) {
            std::vector<std::size_t> members;
            std::optional<DiscreteSet> co;
            for (const auto& set : groups[g]) {
                const auto& d = std::get<DiscreteSet>(set);
                if (d.cofinite) co = d;
                else members.push_back(d.members.front());
            }
            if (co) {
                // Cofinite part absorbs the finite points carrying the same value.
                std::vector<std::size_t> excluded;
                std::set_difference(co->members.begin(), co->members.end(), members.begin(), members.end(),
                                    std::back_inserter(excluded));
                out.atoms.push_back({DiscreteSet::all_except(std::move(excluded)), values[g]});
            } else {
                out.atoms.push_back({DiscreteSet::of(std::move(members)), values[g]});
            }
        } else {
            std::vector<Interval> parts;
            for (const auto& set : groups[g])
                for (const auto& p : std::get<IntervalSet>(set).parts) parts.push_back(p);
            out.atoms.push_back({IntervalSet::of(std::move(parts)), values[g]});
        }
    }
    return out;
}

/// Pairwise disjointness of the atoms (interval atoms may share endpoints).
inline bool is_disjoint(const SimpleFunction& s) {
    for (std::size_t a = 0; a < s.atoms.size(); ++a)
        for (std::size_t b = a + 1; b < s.atoms.size(); ++b) {
            const auto& A = s.atoms[a].set;
            const auto& B = s.atoms[b].set;
            if (const auto* da = std::get_if<DiscreteSet>(&A)) {
                const auto& db = std::get<DiscreteSet>(B);
                if (da->cofinite && db.cofinite) return false;
                const DiscreteSet& fin = da->cofinite ? db : *da;
                const DiscreteSet& other = da->cofinite ? *da : db;
                for (std::size_t j : fin.members)
                    if (other.contains(j)) return false;
            } else if (!std::get<IntervalSet>(A).intersect(std::get<IntervalSet>(B)).empty()) {
                return false;
            }
        }
    return true;
}

}  // namespace netcalc
