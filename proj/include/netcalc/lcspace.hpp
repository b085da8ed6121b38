#pragma once

// Concrete locally convex spaces: vectors, directed seminorm families, countable dense sets.
//
// Vectors come in two shapes. Sequences carry explicit coordinates x_1..x_L followed by a
// tail x_i = sum_t s_t r_t^i (|r_t| < 1) for i > L. Functions on [0,1] are the sum of a
// polynomial, a piecewise-linear interpolant (knots spanning [0,1]) and an optional black-box
// component with a declared Lipschitz constant. Sup norms are exact unless the black-box
// component is present.

#include <netcalc/error.hpp>

#include <unsupported/Eigen/Polynomials>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iterator>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace netcalc {

struct GeometricTerm {
    double scale = 0.0;
    double ratio = 0.0;
    friend bool operator==(const GeometricTerm&, const GeometricTerm&) = default;
};

struct SampledFunction {
    std::function<double(double)> fn;
    double lipschitz = 0.0;
};

class LcsVector {
public:
    enum class Kind { sequence, function };

    LcsVector() = default;

    static LcsVector sequence(std::vector<double> coords, std::vector<GeometricTerm> tail = {}) {
        for (const auto& t : tail)
            if (!(std::fabs(t.ratio) < 1.0)) throw DomainError("geometric tail needs |ratio| < 1");
        LcsVector v;
        v.coords_ = std::move(coords);
        v.tail_ = std::move(tail);
        v.normalize();
        return v;
    }

    /// The unit vector e_i (1-based).
    static LcsVector unit(std::size_t i) {
        if (i == 0) throw DomainError("coordinate index is 1-based");
        std::vector<double> c(i, 0.0);
        c[i - 1] = 1.0;
        return sequence(std::move(c));
    }

    /// sum_i coeffs[i] t^i.
    static LcsVector polynomial(std::vector<double> coeffs) {
        LcsVector v;
        v.kind_ = Kind::function;
        v.poly_ = std::move(coeffs);
        v.normalize();
        return v;
    }

    static LcsVector piecewise_linear(std::vector<double> knots, std::vector<double> values) {
        if (knots.size() != values.size() || knots.size() < 2)
            throw DomainError("piecewise-linear function needs matching knots and values (at least 2)");
        if (knots.front() != 0.0 || knots.back() != 1.0) throw DomainError("knots must span [0,1]");
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            if (!(knots[i] < knots[i + 1])) throw DomainError("knots must be strictly increasing");
        LcsVector v;
        v.kind_ = Kind::function;
        v.knots_ = std::move(knots);
        v.values_ = std::move(values);
        v.normalize();
        return v;
    }

    static LcsVector sampled(std::function<double(double)> fn, double lipschitz) {
        if (!(lipschitz >= 0.0)) throw DomainError("Lipschitz constant must be nonnegative");
        LcsVector v;
        v.kind_ = Kind::function;
        v.sampled_ = std::make_shared<const SampledFunction>(SampledFunction{std::move(fn), lipschitz});
        return v;
    }

    Kind kind() const { return kind_; }
    /// Zero of either kind with nothing stored; neutral for addition with any vector.
    bool is_trivial() const {
        return coords_.empty() && tail_.empty() && poly_.empty() && knots_.empty() && !sampled_;
    }
    bool is_zero() const { return is_trivial(); }

    const std::vector<double>& coords() const { return coords_; }
    const std::vector<GeometricTerm>& tail() const { return tail_; }
    const std::vector<double>& poly() const { return poly_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& knot_values() const { return values_; }
    const std::shared_ptr<const SampledFunction>& sampled_part() const { return sampled_; }

    /// x_i, 1-based, including the tail.
    double coord(std::size_t i) const {
        require(Kind::sequence, "coord");
        if (i == 0) throw DomainError("coordinate index is 1-based");
        if (i <= coords_.size()) return coords_[i - 1];
        return tail_value(i);
    }

    /// f(t) for function vectors.
    double operator()(double t) const {
        require(Kind::function, "evaluation");
        double acc = 0.0;
        for (std::size_t i = poly_.size(); i-- > 0;) acc = acc * t + poly_[i];
        acc += linear_part(t);
        if (sampled_) acc += sampled_->fn(t);
        return acc;
    }

    LcsVector& operator+=(const LcsVector& o) { return axpy(1.0, o); }
    LcsVector& operator-=(const LcsVector& o) { return axpy(-1.0, o); }
    LcsVector& operator*=(double c) {
        if (c == 0.0) {
            *this = LcsVector{};
            return *this;
        }
        for (auto& x : coords_) x *= c;
        for (auto& t : tail_) t.scale *= c;
        for (auto& x : poly_) x *= c;
        for (auto& x : values_) x *= c;
        if (sampled_) {
            auto inner = sampled_;
            sampled_ = std::make_shared<const SampledFunction>(
                SampledFunction{[inner, c](double t) { return c * inner->fn(t); }, std::fabs(c) * inner->lipschitz});
        }
        normalize();
        return *this;
    }

    friend LcsVector operator+(LcsVector a, const LcsVector& b) { return a += b; }
    friend LcsVector operator-(LcsVector a, const LcsVector& b) { return a -= b; }
    friend LcsVector operator*(double c, LcsVector v) { return v *= c; }
    friend LcsVector operator*(LcsVector v, double c) { return v *= c; }
    friend LcsVector operator-(LcsVector v) { return v *= -1.0; }

    /// Structural equality of the normalized representation (black-box parts compare by identity).
    friend bool operator==(const LcsVector& a, const LcsVector& b) {
        if (a.is_trivial() || b.is_trivial()) return a.is_trivial() && b.is_trivial();
        return a.kind_ == b.kind_ && a.coords_ == b.coords_ && a.tail_ == b.tail_ && a.poly_ == b.poly_ &&
               a.knots_ == b.knots_ && a.values_ == b.values_ && a.sampled_ == b.sampled_;
    }

    /// Piecewise-linear part at t (constant zero when absent).
    double linear_part(double t) const {
        if (knots_.empty()) return 0.0;
        if (t <= knots_.front()) return values_.front();
        if (t >= knots_.back()) return values_.back();
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - knots_.begin()) - 1;
        const double w = (t - knots_[k]) / (knots_[k + 1] - knots_[k]);
        return values_[k] + w * (values_[k + 1] - values_[k]);
    }

    double tail_value(std::size_t i) const {
        double acc = 0.0;
        for (const auto& t : tail_) acc += t.scale * std::pow(t.ratio, static_cast<double>(i));
        return acc;
    }

    /// Upper bound of sum_{i>from} |x_i| contributed by the tail (from >= coords().size()).
    double tail_abs_bound(std::size_t from) const {
        double acc = 0.0;
        for (const auto& t : tail_) {
            const double r = std::fabs(t.ratio);
            acc += std::fabs(t.scale) * std::pow(r, static_cast<double>(from + 1)) / (1.0 - r);
        }
        return acc;
    }

private:
    void require(Kind k, const char* what) const {
        if (kind_ != k && !is_trivial())
            throw DomainError(std::string(what) + " is not defined for this kind of vector");
    }

    LcsVector& axpy(double a, const LcsVector& o) {
        if (o.is_trivial() || a == 0.0) return *this;
        if (is_trivial()) {
            *this = o;
            return *this *= a;
        }
        if (kind_ != o.kind_) throw DomainError("cannot combine a sequence with a function");
        if (kind_ == Kind::sequence) {
            const std::size_t L = std::max(coords_.size(), o.coords_.size());
            materialize(L);
            for (std::size_t i = 0; i < L; ++i) coords_[i] += a * o.coord(i + 1);
            for (auto t : o.tail_) {
                t.scale *= a;
                tail_.push_back(t);
            }
        } else {
            if (poly_.size() < o.poly_.size()) poly_.resize(o.poly_.size(), 0.0);
            for (std::size_t i = 0; i < o.poly_.size(); ++i) poly_[i] += a * o.poly_[i];
            if (!o.knots_.empty()) {
                std::vector<double> merged;
                std::set_union(knots_.begin(), knots_.end(), o.knots_.begin(), o.knots_.end(),
                               std::back_inserter(merged));
                std::vector<double> vals(merged.size());
                for (std::size_t i = 0; i < merged.size(); ++i)
                    vals[i] = linear_part(merged[i]) + a * o.linear_part(merged[i]);
                knots_ = std::move(merged);
                values_ = std::move(vals);
            }
            if (o.sampled_) {
                auto lhs = sampled_;
                auto rhs = o.sampled_;
                const double L = (lhs ? lhs->lipschitz : 0.0) + std::fabs(a) * rhs->lipschitz;
                sampled_ = std::make_shared<const SampledFunction>(SampledFunction{
                    [lhs, rhs, a](double t) { return (lhs ? lhs->fn(t) : 0.0) + a * rhs->fn(t); }, L});
            }
        }
        normalize();
        return *this;
    }

    // Extend the explicit coordinates to length L using the tail.
    void materialize(std::size_t L) {
        const std::size_t old = coords_.size();
        if (L <= old) return;
        coords_.resize(L);
        for (std::size_t i = old + 1; i <= L; ++i) coords_[i - 1] = tail_value(i);
    }

    void normalize() {
        if (kind_ == Kind::sequence) {
            std::vector<GeometricTerm> merged;
            for (const auto& t : tail_) {
                auto it = std::find_if(merged.begin(), merged.end(),
                                       [&](const GeometricTerm& m) { return m.ratio == t.ratio; });
                if (it != merged.end()) it->scale += t.scale;
                else merged.push_back(t);
            }
            merged.erase(std::remove_if(merged.begin(), merged.end(),
                                        [](const GeometricTerm& t) { return t.scale == 0.0 || t.ratio == 0.0; }),
                         merged.end());
            std::sort(merged.begin(), merged.end(),
                      [](const GeometricTerm& a, const GeometricTerm& b) { return a.ratio < b.ratio; });
            tail_ = std::move(merged);
            if (tail_.empty())
                while (!coords_.empty() && coords_.back() == 0.0) coords_.pop_back();
        } else {
            while (!poly_.empty() && poly_.back() == 0.0) poly_.pop_back();
            if (std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; })) {
                knots_.clear();
                values_.clear();
            }
        }
    }

    Kind kind_ = Kind::sequence;
    std::vector<double> coords_;
    std::vector<GeometricTerm> tail_;
    std::vector<double> poly_;
    std::vector<double> knots_;
    std::vector<double> values_;
    std::shared_ptr<const SampledFunction> sampled_;
};

namespace detail {

inline double poly_eval(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
    return acc;
}

// max |q| on [a, b] from endpoints and real critical points.
inline double poly_sup(std::vector<double> q, double a, double b) {
    while (!q.empty() && q.back() == 0.0) q.pop_back();
    double m = std::max(std::fabs(poly_eval(q, a)), std::fabs(poly_eval(q, b)));
    if (q.size() <= 2) return m;
    std::vector<double> d(q.size() - 1);
    for (std::size_t i = 1; i < q.size(); ++i) d[i - 1] = static_cast<double>(i) * q[i];
    auto consider = [&](double t) {
        if (t > a && t < b) m = std::max(m, std::fabs(poly_eval(q, t)));
    };
    if (d.size() == 2) {
        consider(-d[0] / d[1]);
        return m;
    }
    Eigen::VectorXd coeffs(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = d[i];
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(coeffs);
    for (const auto& r : solver.roots())
        if (std::fabs(r.imag()) <= 1e-7 * std::max(1.0, std::fabs(r.real()))) consider(r.real());
    return m;
}

}  // namespace detail

/// Grid size used for black-box function components; the padding is L / (2 * grid).
inline constexpr std::size_t sup_grid = 4096;

/// sup_{t in [0,1]} |f(t)|.
inline double sup_norm(const LcsVector& f) {
    if (f.is_trivial()) return 0.0;
    if (f.kind() != LcsVector::Kind::function) throw DomainError("sup norm needs a function on [0,1]");
    if (f.sampled_part()) {
        // Total Lipschitz bound: black box + polynomial derivative bound + steepest linear piece.
        double L = f.sampled_part()->lipschitz;
        for (std::size_t i = 1; i < f.poly().size(); ++i) L += static_cast<double>(i) * std::fabs(f.poly()[i]);
        for (std::size_t k = 0; k + 1 < f.knots().size(); ++k)
            L += std::fabs(f.knot_values()[k + 1] - f.knot_values()[k]) / (f.knots()[k + 1] - f.knots()[k]);
        double m = 0.0;
        for (std::size_t i = 0; i <= sup_grid; ++i)
            m = std::max(m, std::fabs(f(static_cast<double>(i) / static_cast<double>(sup_grid))));
        return m + L / (2.0 * static_cast<double>(sup_grid));
    }
    if (f.knots().empty()) return detail::poly_sup(f.poly(), 0.0, 1.0);
    double m = 0.0;
    const auto& x = f.knots();
    const auto& y = f.knot_values();
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        std::vector<double> q = f.poly();
        if (q.size() < 2) q.resize(2, 0.0);
        const double slope = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        q[0] += y[k] - slope * x[k];
        q[1] += slope;
        m = std::max(m, detail::poly_sup(std::move(q), x[k], x[k + 1]));
    }
    return m;
}

/// A directed (increasing) countable family of seminorms on one concrete space.
class SeminormFamily {
public:
    using Seminorm = std::function<double(const LcsVector&)>;

    static SeminormFamily euclidean(std::size_t d) {
        if (d == 0) throw DomainError("Euclidean dimension must be positive");
        SeminormFamily f("euclidean(" + std::to_string(d) + ")", 1);
        f.dim_ = d;
        f.eval_ = [d](std::size_t, const LcsVector& v) {
            if (v.is_trivial()) return 0.0;
            if (v.kind() != LcsVector::Kind::sequence || !v.tail().empty() || v.coords().size() > d)
                throw DomainError("vector is not in R^" + std::to_string(d));
            double s = 0.0;
            for (double x : v.coords()) s += x * x;
            return std::sqrt(s);
        };
        return f;
    }

    /// p_n(x) = max_{j<=n} |x_j|.
    static SeminormFamily frechet_sequences() {
        SeminormFamily f("frechet-sequences", std::nullopt);
        f.eval_ = [](std::size_t k, const LcsVector& v) {
            if (v.is_trivial()) return 0.0;
            double m = 0.0;
            for (std::size_t j = 1; j <= k; ++j) m = std::max(m, std::fabs(v.coord(j)));
            return m;
        };
        return f;
    }

    static SeminormFamily continuous_on_01() {
        SeminormFamily f("continuous01", 1);
        f.eval_ = [](std::size_t, const LcsVector& v) { return sup_norm(v); };
        return f;
    }

    /// sum_i w_i |x_i|; the last weight repeats beyond the list.
    static SeminormFamily weighted_l1(std::vector<double> weights) {
        if (weights.empty()) throw DomainError("weighted l1 needs at least one weight");
        for (double w : weights)
            if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("l1 weights must be positive and finite");
        SeminormFamily f("weighted-l1", 1);
        f.weights_ = weights;
        f.eval_ = [w = std::move(weights)](std::size_t, const LcsVector& v) {
            if (v.is_trivial()) return 0.0;
            auto weight = [&](std::size_t i) { return w[std::min(i, w.size()) - 1]; };
            double s = 0.0;
            std::size_t i = 1;
            for (; i <= v.coords().size(); ++i) s += weight(i) * std::fabs(v.coords()[i - 1]);
            if (v.tail().empty()) return s;
            // Sum the tail explicitly until the remaining geometric bound is negligible.
            for (;; ++i) {
                const double rest = w.back() * v.tail_abs_bound(i - 1);
                if (rest <= 1e-17 * s || rest < 1e-300) break;
                s += weight(i) * std::fabs(v.tail_value(i));
            }
            return s;
        };
        return f;
    }

    /// Normalize an arbitrary finite list p_1..p_m to the increasing family q_n = max(p_1..p_n).
    static SeminormFamily directed(std::string space_id, std::vector<Seminorm> raw) {
        if (raw.empty()) throw DomainError("seminorm family must be nonempty");
        SeminormFamily f(std::move(space_id), raw.size());
        f.eval_ = [raw = std::move(raw)](std::size_t k, const LcsVector& v) {
            double m = 0.0;
            for (std::size_t i = 0; i < k; ++i) m = std::max(m, raw[i](v));
            return m;
        };
        return f;
    }

    const std::string& space_id() const { return id_; }
    /// Number of seminorms; empty means countably infinite.
    std::optional<std::size_t> count() const { return count_; }
    std::optional<std::size_t> dimension() const { return dim_; }
    const std::vector<double>& weights() const { return weights_; }

    double eval(std::size_t k, const LcsVector& v) const {
        if (k == 0) throw DomainError("seminorm index is 1-based");
        if (count_ && k > *count_) k = *count_;
        return eval_(k, v);
    }

    /// Largest seminorm index considered when probing to depth `depth`.
    std::size_t top(std::size_t depth) const { return count_ ? *count_ : depth; }

    LcsVector zero() const { return {}; }

    /// Metric used for convergence probes: p_1 for normed spaces, otherwise
    /// sum_{k<=depth} 2^{-k} min(1, p_k(a - b)).
    double distance(const LcsVector& a, const LcsVector& b, std::size_t depth) const {
        const LcsVector d = a - b;
        if (count_ && *count_ == 1) return eval(1, d);
        double acc = 0.0;
        const std::size_t K = top(depth);
        for (std::size_t k = 1; k <= K; ++k) acc += std::ldexp(std::min(1.0, eval(k, d)), -static_cast<int>(k));
        return acc;
    }

private:
    SeminormFamily(std::string id, std::optional<std::size_t> count) : id_(std::move(id)), count_(count) {}

    std::string id_;
    std::optional<std::size_t> count_;
    std::optional<std::size_t> dim_;
    std::vector<double> weights_;
    std::function<double(std::size_t, const LcsVector&)> eval_;
};

struct SpaceDescriptor {
    std::string tag;  // euclidean | frechet-sequences | continuous01 | weighted-l1
    std::size_t dim = 0;
    std::vector<double> weights;
};

inline SeminormFamily make_space(const SpaceDescriptor& spec) {
    if (spec.tag == "euclidean") return SeminormFamily::euclidean(spec.dim);
    if (spec.tag == "frechet-sequences") return SeminormFamily::frechet_sequences();
    if (spec.tag == "continuous01") return SeminormFamily::continuous_on_01();
    if (spec.tag == "weighted-l1") return SeminormFamily::weighted_l1(spec.weights);
    throw SpecError("space", "unknown space tag '" + spec.tag + "'");
}

enum class Provenance { image_points, rational_lattice };

inline const char* to_string(Provenance p) {
    return p == Provenance::image_points ? "image-points" : "rational-lattice";
}

/// A deterministic enumeration c_1, c_2, ... of a countable set.
class CountableDenseSet {
public:
    /// Cycles through `points` in order.
    static CountableDenseSet cycling(std::vector<LcsVector> points, Provenance provenance = Provenance::image_points) {
        if (points.empty()) throw DomainError("dense set needs at least one point");
        CountableDenseSet s;
        s.points_ = std::move(points);
        s.provenance_ = provenance;
        s.cycles_ = true;
        return s;
    }

    /// Dyadic points of R^d, coarse to fine: level L adds the new points of 2^{-L} Z^d
    /// inside [-2^L, 2^L]^d. The first `count` points are stored.
    static CountableDenseSet rational_lattice(std::size_t d, std::size_t count = 4096) {
        if (d == 0 || count == 0) throw DomainError("rational lattice needs positive dimension and count");
        CountableDenseSet s;
        s.provenance_ = Provenance::rational_lattice;
        for (int level = 0; s.points_.size() < count; ++level) {
            const long half = 1L << (2 * level);  // numerators in [-4^L, 4^L] at scale 2^{-L}
            const long side = 2 * half + 1;
            std::vector<long> idx(d, 0);
            for (;;) {
                bool is_new = level == 0;
                std::vector<double> c(d);
                for (std::size_t i = 0; i < d; ++i) {
                    const long num = idx[i] - half;
                    c[i] = std::ldexp(static_cast<double>(num), -level);
                    if (level > 0 && (num % 2 != 0 || std::labs(num / 2) > (1L << (2 * level - 2)))) is_new = true;
                }
                if (is_new) {
                    s.points_.push_back(LcsVector::sequence(std::move(c)));
                    if (s.points_.size() == count) break;
                }
                std::size_t i = 0;
                while (i < d && ++idx[i] == side) idx[i++] = 0;
                if (i == d) break;
            }
        }
        return s;
    }

    /// c_n, 1-based.
    LcsVector enumerate(std::size_t n) const {
        if (n == 0) throw DomainError("enumeration index is 1-based");
        if (cycles_) return points_[(n - 1) % points_.size()];
        if (n > points_.size()) throw DomainError("enumeration index beyond the stored prefix");
        return points_[n - 1];
    }

    Provenance provenance() const { return provenance_; }
    const std::vector<LcsVector>& points() const { return points_; }
    /// Length of the cycle for finite enumerations.
    std::optional<std::size_t> period() const {
        return cycles_ ? std::optional<std::size_t>(points_.size()) : std::nullopt;
    }

private:
    CountableDenseSet() = default;
    std::vector<LcsVector> points_;
    Provenance provenance_ = Provenance::image_points;
    bool cycles_ = false;
};

/// Enumerate the given image points, dropping points within `merge_tol` (in p_k) of an earlier one.
inline CountableDenseSet dense_from_image(const std::vector<LcsVector>& points, const SeminormFamily& family,
                                          std::size_t k, double merge_tol = 1e-12) {
    if (points.empty()) throw DomainError("dense_from_image: empty point list");
    std::vector<LcsVector> kept;
    for (const auto& p : points) {
        bool dup = false;
        for (const auto& q : kept)
            if (family.eval(k, p - q) <= merge_tol) {
                dup = true;
                break;
            }
        if (!dup) kept.push_back(p);
    }
    return CountableDenseSet::cycling(std::move(kept));
}

/// Farthest-point traversal of `points` in p_k until every point lies within eps of the
/// selected subset. The selection is ordered coarse to fine.
inline CountableDenseSet epsilon_net(const std::vector<LcsVector>& points, const SeminormFamily& family,
                                     std::size_t k, double eps) {
    if (points.empty()) throw DomainError("epsilon_net: empty point list");
    if (!(eps > 0.0)) throw DomainError("epsilon_net: eps must be positive");
    std::vector<LcsVector> chosen{points.front()};
    std::vector<double> dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) dist[i] = family.eval(k, points[i] - points.front());
    for (;;) {
        const auto far = std::max_element(dist.begin(), dist.end());
        if (*far <= eps) break;
        const LcsVector& c = points[static_cast<std::size_t>(far - dist.begin())];
        chosen.push_back(c);
        for (std::size_t i = 0; i < points.size(); ++i) dist[i] = std::min(dist[i], family.eval(k, points[i] - c));
    }
    return CountableDenseSet::cycling(std::move(chosen));
}

/// max over `points` of the distance (in p_k) to the nearest of the first `n` enumerated points.
inline double covering_radius(const CountableDenseSet& set, const std::vector<LcsVector>& points,
                              const SeminormFamily& family, std::size_t k, std::size_t n) {
    double worst = 0.0;
    for (const auto& p : points) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j <= n; ++j) best = std::min(best, family.eval(k, p - set.enumerate(j)));
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace netcalc
