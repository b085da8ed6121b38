#pragma once

// Real sequences lambda_1, lambda_2, ... given by a finite head followed by a closed
// form `base + term(j)`. Every tail functional the operator calculus needs (sums,
// absolute sums, sums of logarithms beyond an index N) is evaluated in closed form or
// reported as +-infinity / NaN when it does not exist.
//
// Accepted closed forms (after the head):
//   c                     constant
//   a * c^(s*j + t)       geometric
//   a / (s*j + t)^p       power law (p may be any real; p <= 1 is not summable)
//   (-1)^(j + k) * ...    alternating power law
//   c +- <one of the above>
// Compositions such as "1 - (1 - 2^-j)" are normalized.

#include <netcalc/error.hpp>
#include <netcalc/expression.hpp>
#include <netcalc/linalg.hpp>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace netcalc {

inline constexpr double infinity = std::numeric_limits<double>::infinity();
inline constexpr double not_a_number = std::numeric_limits<double>::quiet_NaN();

/// Hurwitz zeta sum_{i>=0} (q + i)^{-s}, s > 1, q > 0.
inline double hurwitz_zeta(double s, double q) {
    static const bool handler_off = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)handler_off;
    if (!(s > 1.0)) return infinity;
    if (!(q > 0.0)) throw DomainError("hurwitz_zeta: q must be positive");
    gsl_sf_result r;
    const int status = gsl_sf_hzeta_e(s, q, &r);
    if (status == GSL_EUNDRFLW) return 0.0;
    if (status != GSL_SUCCESS) throw DomainError(std::string("hurwitz_zeta: ") + gsl_strerror(status));
    return r.val;
}

/// sum_{i>=0} (-1)^i (q + i)^{-s} for s > 0, q > 0 (Cohen-Villegas-Zagier acceleration).
inline double alternating_zeta(double s, double q) {
    if (!(s > 0.0)) return not_a_number;
    if (!(q > 0.0)) throw DomainError("alternating_zeta: q must be positive");
    constexpr int n = 40;
    double d = std::pow(3.0 + std::sqrt(8.0), n);
    d = 0.5 * (d + 1.0 / d);
    double b = -1.0;
    double c = -d;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        c = b - c;
        sum += c * std::pow(q + k, -s);
        b = static_cast<double>(k + n) * static_cast<double>(k - n) * b / ((k + 0.5) * (k + 1.0));
    }
    return sum / d;
}

/// The decaying (or growing) part of a closed-form sequence.
struct TailTerm {
    enum class Kind { zero, geometric, power };
    Kind kind = Kind::zero;
    double scale = 0.0;     // a
    double ratio = 0.0;     // geometric: a * ratio^j
    double shift = 0.0;     // power: a / (j + shift)^exponent
    double exponent = 0.0;
    bool alternating = false;  // extra factor (-1)^(j + parity)
    int parity = 0;

    double sign_at(std::size_t j) const {
        if (!alternating) return 1.0;
        return ((j + static_cast<std::size_t>(parity & 1)) % 2 == 0) ? 1.0 : -1.0;
    }

    double value(std::size_t j) const {
        const double jd = static_cast<double>(j);
        switch (kind) {
            case Kind::zero: return 0.0;
            case Kind::geometric: return sign_at(j) * scale * std::pow(ratio, jd);
            case Kind::power: return sign_at(j) * scale * std::pow(jd + shift, -exponent);
        }
        return 0.0;
    }

    TailTerm scaled(double c) const {
        TailTerm t = *this;
        t.scale *= c;
        if (t.scale == 0.0) t = TailTerm{};
        return t;
    }

    /// |term(j)| is nonincreasing for j > N once this returns true.
    bool decays() const {
        switch (kind) {
            case Kind::zero: return true;
            case Kind::geometric: return std::fabs(ratio) < 1.0;
            case Kind::power: return exponent > 0.0;
        }
        return false;
    }

    /// sum_{j>N} term(j)^m; +-inf when the sum diverges to infinity, NaN when it oscillates.
    double power_sum(std::size_t N, int m) const {
        if (kind == Kind::zero || scale == 0.0) return 0.0;
        const double am = std::pow(scale, m);
        const bool alt = alternating && (m % 2 == 1);
        switch (kind) {
            case Kind::zero: return 0.0;
            case Kind::geometric: {
                double r = std::pow(ratio, m);
                if (alt) r = -r;  // (-1)^j ratio^{mj} = (-ratio^m)^j up to the parity sign
                const double parity_sign = alt ? ((parity & 1) ? -1.0 : 1.0) : 1.0;
                if (std::fabs(r) < 1.0)
                    return parity_sign * am * std::pow(r, static_cast<double>(N + 1)) / (1.0 - r);
                if (r >= 1.0) return am > 0 ? infinity : -infinity;
                return not_a_number;
            }
            case Kind::power: {
                const double s = m * exponent;
                const double q = static_cast<double>(N + 1) + shift;
                if (!(q > 0.0)) throw DomainError("power-law tail evaluated at a pole (j + shift <= 0)");
                if (!alt) {
                    if (s > 1.0) return am * hurwitz_zeta(s, q);
                    return am > 0 ? infinity : -infinity;
                }
                const double first_sign = sign_at(N + 1);
                const double z = alternating_zeta(s, q);
                return std::isnan(z) ? not_a_number : first_sign * am * z;
            }
        }
        return 0.0;
    }

    double abs_sum(std::size_t N) const {
        if (kind == Kind::zero || scale == 0.0) return 0.0;
        TailTerm t = *this;
        t.alternating = false;
        t.scale = std::fabs(scale);
        if (kind == Kind::geometric) t.ratio = std::fabs(ratio);
        return t.power_sum(N, 1);
    }

    friend bool operator==(const TailTerm&, const TailTerm&) = default;
};

class DiagonalSequence {
public:
    DiagonalSequence() = default;

    static DiagonalSequence closed(double base, TailTerm term, std::string text = {}) {
        DiagonalSequence s;
        s.base_ = base;
        s.term_ = term;
        s.text_ = std::move(text);
        return s;
    }

    /// Explicit values for j = 1..values.size(); the sequence continues with `tail` or ends
    /// there (finite dimension) when `tail` is empty.
    static DiagonalSequence from_list(std::vector<double> values, std::optional<DiagonalSequence> tail = {}) {
        DiagonalSequence s;
        s.head_ = std::move(values);
        if (tail) {
            if (!tail->factors_.empty() || !tail->head_.empty() || tail->finite_)
                throw DomainError("list tail must be a closed form");
            s.base_ = tail->base_;
            s.term_ = tail->term_;
            s.text_ = tail->text_;
        } else {
            s.finite_ = true;
        }
        return s;
    }

    static DiagonalSequence product(std::vector<DiagonalSequence> factors) {
        if (factors.empty()) return closed(1.0, {});
        if (factors.size() == 1) return factors.front();
        DiagonalSequence s;
        s.factors_ = std::move(factors);
        return s;
    }

    /// Parse one of the closed forms listed at the top of this file (variable `j`, 1-based).
    static DiagonalSequence parse(const std::string& text, std::size_t line = 1, std::size_t column = 1);

    bool is_product() const { return !factors_.empty(); }
    const std::vector<DiagonalSequence>& factors() const { return factors_; }
    const std::vector<double>& head() const { return head_; }
    double base() const { return base_; }
    const TailTerm& term() const { return term_; }
    const std::string& text() const { return text_; }

    std::optional<std::size_t> dim() const {
        if (is_product()) {
            std::optional<std::size_t> d;
            for (const auto& f : factors_)
                if (auto fd = f.dim()) d = d ? std::min(*d, *fd) : *fd;
            return d;
        }
        if (finite_) return head_.size();
        return std::nullopt;
    }

    /// lambda_j, j >= 1.
    double value(std::size_t j) const {
        if (j == 0) throw DomainError("sequence index is 1-based");
        if (is_product()) {
            double v = 1.0;
            for (const auto& f : factors_) v *= f.value(j);
            return v;
        }
        if (j <= head_.size()) return head_[j - 1];
        if (finite_) throw DomainError("index " + std::to_string(j) + " beyond finite dimension " + std::to_string(head_.size()));
        return base_ + term_.value(j);
    }

    /// 1 - lambda_j.
    DiagonalSequence one_minus() const {
        if (is_product()) throw DomainError("1 - (product sequence) has no closed form");
        DiagonalSequence s = *this;
        for (auto& h : s.head_) h = 1.0 - h;
        s.base_ = 1.0 - base_;
        s.term_ = term_.scaled(-1.0);
        s.text_ = text_.empty() ? std::string{} : "1 - (" + text_ + ")";
        return s;
    }

    /// The sequence mu_j = lambda_{j + offset}.
    DiagonalSequence drop_front(std::size_t offset) const {
        if (is_product()) {
            std::vector<DiagonalSequence> fs;
            for (const auto& f : factors_) fs.push_back(f.drop_front(offset));
            return product(std::move(fs));
        }
        DiagonalSequence s = *this;
        const std::size_t from_head = std::min(offset, head_.size());
        s.head_.erase(s.head_.begin(), s.head_.begin() + static_cast<std::ptrdiff_t>(from_head));
        if (!finite_) s.term_ = shift_term(term_, static_cast<double>(offset));
        else if (offset > head_.size()) throw DomainError("drop_front beyond finite dimension");
        return s;
    }

    /// values followed by this sequence: mu_j = values[j-1] for j <= len, lambda_{j-len} after.
    DiagonalSequence prepend(const std::vector<double>& values) const {
        if (values.empty()) return *this;
        if (is_product()) {
            std::vector<DiagonalSequence> fs;
            fs.push_back(factors_.front().prepend(values));
            for (std::size_t i = 1; i < factors_.size(); ++i)
                fs.push_back(factors_[i].prepend(std::vector<double>(values.size(), 1.0)));
            return product(std::move(fs));
        }
        DiagonalSequence s = *this;
        s.head_.insert(s.head_.begin(), values.begin(), values.end());
        if (!finite_) s.term_ = shift_term(term_, -static_cast<double>(values.size()));
        return s;
    }

    /// First `count` values as a finite sequence.
    DiagonalSequence take(std::size_t count) const {
        if (auto d = dim(); d && count > *d) throw DomainError("take beyond finite dimension");
        std::vector<double> v(count);
        for (std::size_t j = 1; j <= count; ++j) v[j - 1] = value(j);
        return from_list(std::move(v));
    }

    /// sup_j |lambda_j| (finite when the sequence is bounded).
    double sup_abs(std::size_t probe = 64) const {
        double m = 0.0;
        const std::size_t upto = dim() ? *dim() : std::max<std::size_t>(probe, head_.size() + probe);
        for (std::size_t j = 1; j <= upto; ++j) m = std::max(m, std::fabs(value(j)));
        if (!dim()) {
            if (is_product()) return m;
            if (!term_.decays()) return infinity;
            m = std::max(m, std::fabs(base_) + std::fabs(term_.value(upto + 1)));
        }
        return m;
    }

    /// sum_{j>N} lambda_j.
    double tail_sum(std::size_t N) const {
        require_simple("tail_sum");
        double acc = 0.0;
        for (std::size_t j = N + 1; j <= head_.size(); ++j) acc += head_[j - 1];
        if (finite_) return acc;
        const std::size_t M = std::max(N, head_.size());
        if (base_ != 0.0) return base_ > 0 ? infinity : -infinity;
        return acc + term_.power_sum(M, 1);
    }

    /// sum_{j>N} |lambda_j|.
    double tail_abs_sum(std::size_t N) const {
        require_simple("tail_abs_sum");
        double acc = 0.0;
        for (std::size_t j = N + 1; j <= head_.size(); ++j) acc += std::fabs(head_[j - 1]);
        if (finite_) return acc;
        const std::size_t M = std::max(N, head_.size());
        if (base_ != 0.0) return infinity;
        return acc + term_.abs_sum(M);
    }

    /// sum_{j>N} log(lambda_j) (principal branch), so that prod_{j>N} lambda_j = exp(result).
    /// A real part of -inf means the tail product vanishes; +inf or NaN means it has no limit.
    Scalar tail_log(std::size_t N) const {
        if (is_product()) {
            Scalar acc(0.0);
            for (const auto& f : factors_) acc += f.tail_log(N);
            return acc;
        }
        Scalar acc(0.0);
        for (std::size_t j = N + 1; j <= head_.size(); ++j) acc += std::log(Scalar(head_[j - 1]));
        if (finite_) return acc;
        const std::size_t M = std::max(N, head_.size());
        if (base_ == 0.0) return Scalar(term_.kind == TailTerm::Kind::zero || term_.decays() ? -infinity : not_a_number);
        if (base_ == 1.0) return acc + log1p_tail(M);
        if (base_ == -1.0) return Scalar(not_a_number);
        if (!term_.decays()) return Scalar(not_a_number);
        return Scalar(std::fabs(base_) < 1.0 ? -infinity : infinity);
    }

    friend bool operator==(const DiagonalSequence& a, const DiagonalSequence& b) {
        return a.head_ == b.head_ && a.finite_ == b.finite_ && a.base_ == b.base_ && a.term_ == b.term_ &&
               a.factors_ == b.factors_;
    }

private:
    // term'(j) = term(j + by)
    static TailTerm shift_term(TailTerm t, double by) {
        switch (t.kind) {
            case TailTerm::Kind::zero: break;
            case TailTerm::Kind::geometric: t.scale *= std::pow(t.ratio, by); break;
            case TailTerm::Kind::power: t.shift += by; break;
        }
        if (t.alternating) t.parity = static_cast<int>((static_cast<long long>(t.parity) + static_cast<long long>(by)) % 2 + 2) % 2;
        return t;
    }

    void require_simple(const char* what) const {
        if (is_product()) throw DomainError(std::string(what) + ": not available for product sequences");
    }

    /// sum_{j>M} log(1 + t_j) where t is the tail term.
    Scalar log1p_tail(std::size_t M) const {
        if (term_.kind == TailTerm::Kind::zero) return Scalar(0.0);
        if (!term_.decays()) return Scalar(term_.kind == TailTerm::Kind::geometric && term_.ratio >= 1.0 && term_.scale > 0 ? infinity : not_a_number);
        // Sum directly until |t_j| <= 1/2, then expand log(1 + t) = sum_m (-1)^{m+1} t^m / m.
        Scalar acc(0.0);
        std::size_t j = M;
        constexpr std::size_t direct_cap = 20'000'000;
        while (std::fabs(term_.value(j + 1)) > 0.5) {
            ++j;
            acc += std::log(Scalar(1.0 + term_.value(j)));
            if (j - M > direct_cap) throw DomainError("log tail: term decays too slowly for direct summation");
        }
        double series = 0.0;
        for (int m = 1; m <= 400; ++m) {
            const double sm = term_.power_sum(j, m);
            if (std::isnan(sm)) return Scalar(not_a_number);
            if (std::isinf(sm)) {
                // Even powers diverge to +inf and enter with a minus sign.
                const double contribution = (m % 2 == 1) ? sm : -sm;
                return acc + Scalar(contribution);
            }
            const double contribution = ((m % 2 == 1) ? 1.0 : -1.0) * sm / m;
            series += contribution;
            if (std::fabs(contribution) <= 1e-18 * (std::fabs(series) + 1e-300) || std::fabs(contribution) < 1e-300) break;
        }
        return acc + Scalar(series);
    }

    std::vector<double> head_;
    bool finite_ = false;
    double base_ = 0.0;
    TailTerm term_;
    std::vector<DiagonalSequence> factors_;
    std::string text_;
};

// ---------------------------------------------------------------------------
// Closed-form recognition

namespace detail {

struct Linear {
    double slope = 0.0;
    double offset = 0.0;
};

inline std::optional<double> constant_of(const Expr& e) {
    if (!e.is_constant()) return std::nullopt;
    return evaluate_constant(e);
}

/// slope * j + offset
inline std::optional<Linear> linear_in_j(const Expr& e) {
    if (auto c = constant_of(e)) return Linear{0.0, *c};
    switch (e.kind) {
        case Expr::Kind::variable:
            if (e.name == "j") return Linear{1.0, 0.0};
            return std::nullopt;
        case Expr::Kind::negate: {
            auto l = linear_in_j(*e.lhs);
            if (!l) return std::nullopt;
            return Linear{-l->slope, -l->offset};
        }
        case Expr::Kind::add:
        case Expr::Kind::sub: {
            auto a = linear_in_j(*e.lhs);
            auto b = linear_in_j(*e.rhs);
            if (!a || !b) return std::nullopt;
            const double sg = e.kind == Expr::Kind::add ? 1.0 : -1.0;
            return Linear{a->slope + sg * b->slope, a->offset + sg * b->offset};
        }
        case Expr::Kind::mul: {
            auto ca = constant_of(*e.lhs);
            auto cb = constant_of(*e.rhs);
            if (ca) {
                auto l = linear_in_j(*e.rhs);
                if (l) return Linear{*ca * l->slope, *ca * l->offset};
            }
            if (cb) {
                auto l = linear_in_j(*e.lhs);
                if (l) return Linear{*cb * l->slope, *cb * l->offset};
            }
            return std::nullopt;
        }
        case Expr::Kind::div: {
            auto cb = constant_of(*e.rhs);
            auto l = linear_in_j(*e.lhs);
            if (cb && l && *cb != 0.0) return Linear{l->slope / *cb, l->offset / *cb};
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

/// Product of constants and at most one alternator (-1)^(j + k).
struct Coefficient {
    double scale = 1.0;
    bool alternating = false;
    int parity = 0;
};

inline std::optional<Coefficient> coefficient_of(const Expr& e) {
    if (auto c = constant_of(e)) return Coefficient{*c, false, 0};
    if (e.kind == Expr::Kind::pow) {
        auto base = constant_of(*e.lhs);
        auto ex = linear_in_j(*e.rhs);
        if (base && *base == -1.0 && ex && std::fabs(ex->slope) == 1.0 && std::nearbyint(ex->offset) == ex->offset)
            return Coefficient{1.0, true, static_cast<int>(std::fabs(ex->offset)) % 2};
        return std::nullopt;
    }
    if (e.kind == Expr::Kind::negate) {
        auto c = coefficient_of(*e.lhs);
        if (c) c->scale = -c->scale;
        return c;
    }
    if (e.kind == Expr::Kind::mul) {
        auto a = coefficient_of(*e.lhs);
        auto b = coefficient_of(*e.rhs);
        if (!a || !b || (a->alternating && b->alternating)) return std::nullopt;
        return Coefficient{a->scale * b->scale, a->alternating || b->alternating, a->parity + b->parity};
    }
    if (e.kind == Expr::Kind::div) {
        auto a = coefficient_of(*e.lhs);
        auto b = constant_of(*e.rhs);
        if (!a || !b || *b == 0.0) return std::nullopt;
        a->scale /= *b;
        return a;
    }
    return std::nullopt;
}

inline TailTerm apply(TailTerm t, const Coefficient& c) {
    if (c.alternating) {
        if (t.alternating) {
            // (-1)^(j+a) (-1)^(j+b) = (-1)^(a+b)
            if ((c.parity + t.parity) % 2) t.scale = -t.scale;
            t.alternating = false;
            t.parity = 0;
        } else {
            t.alternating = true;
            t.parity = c.parity;
        }
    }
    t.scale *= c.scale;
    return t;
}

/// (slope*j + offset)^p written as slope^p * (j + offset/slope)^p.
inline std::optional<TailTerm> power_term(const Expr& e, double sign_of_exponent) {
    ExprPtr base_expr;
    double p = 1.0;
    if (e.kind == Expr::Kind::pow) {
        auto pc = constant_of(*e.rhs);
        if (!pc) return std::nullopt;
        base_expr = e.lhs;
        p = *pc;
    } else {
        base_expr = std::make_shared<Expr>(e);
    }
    auto l = linear_in_j(*base_expr);
    if (!l || l->slope <= 0.0) return std::nullopt;
    TailTerm t;
    t.kind = TailTerm::Kind::power;
    t.exponent = sign_of_exponent * p;
    t.shift = l->offset / l->slope;
    t.scale = std::pow(l->slope, -t.exponent);
    return t;
}

inline std::optional<TailTerm> match_term(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::negate: {
            auto t = match_term(*e.lhs);
            if (t) t->scale = -t->scale;
            return t;
        }
        case Expr::Kind::mul: {
            if (auto c = coefficient_of(*e.lhs))
                if (auto t = match_term(*e.rhs)) return apply(*t, *c);
            if (auto c = coefficient_of(*e.rhs))
                if (auto t = match_term(*e.lhs)) return apply(*t, *c);
            return std::nullopt;
        }
        case Expr::Kind::div: {
            if (auto c = constant_of(*e.rhs)) {
                auto t = match_term(*e.lhs);
                if (t && *c != 0.0) t->scale /= *c;
                return t;
            }
            auto num = coefficient_of(*e.lhs);
            if (!num) return std::nullopt;
            // Denominator: [const *] (linear)^p
            const Expr* den = e.rhs.get();
            double den_scale = 1.0;
            if (den->kind == Expr::Kind::mul) {
                if (auto c = constant_of(*den->lhs)) {
                    den_scale = *c;
                    den = den->rhs.get();
                } else if (auto c2 = constant_of(*den->rhs)) {
                    den_scale = *c2;
                    den = den->lhs.get();
                }
            }
            auto t = power_term(*den, 1.0);
            if (!t || den_scale == 0.0) return std::nullopt;
            t->scale /= den_scale;
            return apply(*t, *num);
        }
        case Expr::Kind::pow: {
            if (auto c = coefficient_of(e); c && c->alternating) {
                TailTerm t;
                t.kind = TailTerm::Kind::power;
                t.exponent = 0.0;
                t.shift = 0.0;
                t.scale = 1.0;
                return apply(t, *c);
            }
            auto base = constant_of(*e.lhs);
            auto ex = linear_in_j(*e.rhs);
            if (base && ex && ex->slope != 0.0 && *base > 0.0) {
                TailTerm t;
                t.kind = TailTerm::Kind::geometric;
                t.scale = std::pow(*base, ex->offset);
                t.ratio = std::pow(*base, ex->slope);
                return t;
            }
            // (-c)^(s*j + t) with integral s, t: alternating geometric.
            if (base && ex && *base < 0.0 && ex->slope != 0.0 && std::nearbyint(ex->slope) == ex->slope &&
                std::nearbyint(ex->offset) == ex->offset) {
                const double mag = -*base;
                TailTerm t;
                t.kind = TailTerm::Kind::geometric;
                t.scale = std::pow(mag, ex->offset);
                t.ratio = std::pow(mag, ex->slope);
                const auto s_odd = static_cast<long long>(std::fabs(ex->slope)) % 2 == 1;
                const auto t_odd = static_cast<long long>(std::fabs(ex->offset)) % 2 == 1;
                if (s_odd) {
                    t.alternating = true;
                    t.parity = t_odd ? 1 : 0;
                } else if (t_odd) {
                    t.scale = -t.scale;
                }
                return t;
            }
            return power_term(e, -1.0);
        }
        case Expr::Kind::variable: return power_term(e, -1.0);
        default: return std::nullopt;
    }
}

struct ClosedForm {
    double base = 0.0;
    TailTerm term;
};

inline std::optional<ClosedForm> match_sequence(const Expr& e) {
    if (auto c = constant_of(e)) return ClosedForm{*c, {}};
    if (e.kind == Expr::Kind::add || e.kind == Expr::Kind::sub) {
        const double sg = e.kind == Expr::Kind::add ? 1.0 : -1.0;
        if (auto c = constant_of(*e.lhs)) {
            if (auto rest = match_sequence(*e.rhs)) return ClosedForm{*c + sg * rest->base, rest->term.scaled(sg)};
        }
        if (auto c = constant_of(*e.rhs)) {
            if (auto rest = match_sequence(*e.lhs)) return ClosedForm{rest->base + sg * *c, rest->term};
        }
        return std::nullopt;
    }
    if (e.kind == Expr::Kind::negate) {
        if (auto rest = match_sequence(*e.lhs)) return ClosedForm{-rest->base, rest->term.scaled(-1.0)};
        return std::nullopt;
    }
    if (auto t = match_term(e)) {
        if (t->scale == 0.0) return ClosedForm{0.0, {}};
        return ClosedForm{0.0, *t};
    }
    return std::nullopt;
}

}  // namespace detail

inline DiagonalSequence DiagonalSequence::parse(const std::string& text, std::size_t line, std::size_t column) {
    const ExprPtr e = parse_expression(text, line, column);
    auto form = detail::match_sequence(*e);
    if (!form)
        throw ParseError("'" + text + "' is not a supported closed-form sequence (constant, a*c^j, a/(j+h)^p, "
                         "(-1)^(j+k)*..., or c +- one of these)",
                         line, column);
    // Cross-check the recognized form against direct evaluation.
    for (std::size_t j : {1u, 2u, 3u, 7u, 50u}) {
        const double direct = evaluate(*e, {{"j", static_cast<double>(j)}});
        const double closed = form->base + form->term.value(j);
        if (std::isfinite(direct) && std::fabs(direct - closed) > 1e-12 * (1.0 + std::fabs(direct)))
            throw ParseError("internal: closed form of '" + text + "' disagrees with its value at j=" + std::to_string(j),
                             line, column);
    }
    return closed(form->base, form->term, text);
}

}  // namespace netcalc
