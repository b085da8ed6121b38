#pragma once

// Bounded operators on l^2(N) in computable forms. Indices in this header are 0-based;
// DiagonalSequence values are 1-based (lambda_1 sits at index 0).
//
// Every form can produce its N x N coordinate truncation T_N and describes what lies
// outside it. Forms that respect the split E_N (+) E_N^perp, E_N = span(e_1..e_N), report
// the complement's trace, trace norm and log-determinant in closed form; entry oracles
// report rigorous bounds derived from their declared decay instead.

#include <netcalc/error.hpp>
#include <netcalc/linalg.hpp>
#include <netcalc/sequence.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace netcalc {

/// |T_ij| <= constant * rate^max(i,j) (geometric) or constant * max(i,j)^-rate (power),
/// with 1-based i, j.
struct DecayBound {
    enum class Kind { geometric, power };
    Kind kind = Kind::geometric;
    double constant = 1.0;
    double rate = 0.5;

    void validate() const {
        if (!(constant >= 0.0)) throw DomainError("decay constant must be nonnegative");
        if (kind == Kind::geometric && !(rate > 0.0 && rate < 1.0))
            throw DomainError("geometric decay rate must lie in (0, 1)");
        if (kind == Kind::power && !(rate > 0.0)) throw DomainError("power decay exponent must be positive");
    }

    double at(std::size_t m) const {
        const double md = static_cast<double>(m);
        return kind == Kind::geometric ? constant * std::pow(rate, md) : constant * std::pow(md, -rate);
    }

    /// Bound on sum_{j>N} |T_jj|.
    double diagonal_tail(std::size_t N) const {
        const double q = static_cast<double>(N + 1);
        if (kind == Kind::geometric) return constant * std::pow(rate, q) / (1.0 - rate);
        return constant * hurwitz_zeta(rate, q);
    }

    /// Bound on sum over max(i,j) > N of |T_ij|, which dominates ||T - P_N T P_N||_tr.
    double trace_norm_tail(std::size_t N) const {
        const double q = static_cast<double>(N + 1);
        if (kind == Kind::geometric) {
            const double r = rate;
            const double rq = std::pow(r, q);
            // sum_{m>N} m r^m = r^{N+1} ((N+1) - N r) / (1-r)^2
            const double first = rq * (q - static_cast<double>(N) * r) / ((1.0 - r) * (1.0 - r));
            return constant * (2.0 * first - rq / (1.0 - r));
        }
        // sum_{m>N} (2m - 1) m^-p
        if (!(rate > 2.0)) return infinity;
        return constant * (2.0 * hurwitz_zeta(rate - 1.0, q) - hurwitz_zeta(rate, q));
    }

    /// Smallest N with trace_norm_tail(N) < budget.
    std::size_t truncation_for(double budget, std::size_t cap = std::size_t{1} << 24) const {
        if (!(budget > 0.0)) throw DomainError("truncation budget must be positive");
        if (std::isinf(trace_norm_tail(0))) throw DomainError("decay too slow for a trace-norm tail bound");
        std::size_t hi = 1;
        while (trace_norm_tail(hi) >= budget) {
            if (hi >= cap) throw DomainError("required truncation exceeds " + std::to_string(cap));
            hi *= 2;
        }
        std::size_t lo = hi / 2;
        if (trace_norm_tail(lo) < budget) return lo;
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            (trace_norm_tail(mid) < budget ? hi : lo) = mid;
        }
        return hi;
    }
};

/// What the truncation at N leaves out.
struct TailInfo {
    /// The complement block is known exactly (operator respects E_N (+) E_N^perp).
    bool exact = true;
    Scalar trace{0.0};     // sum of complement diagonal entries
    double trace_norm = 0.0;
    Scalar log_det{0.0};   // log det of the complement block (for operators near 1)
    /// Inexact forms: |trace - trace(T_N)| <= trace_error, | ||T||_tr - ||T_N||_tr | <= trace_norm_error.
    double trace_error = 0.0;
    double trace_norm_error = 0.0;
};

class OperatorSpec;
using OperatorPtr = std::shared_ptr<const OperatorSpec>;

class OperatorSpec {
public:
    struct Diagonal {
        DiagonalSequence lambda;
    };
    /// diag(lambda) + sum_k u_k w_k^*, all u_k, w_k supported on the first `support` coordinates.
    struct FiniteRank {
        DiagonalSequence lambda;
        Matrix u;  // support x r
        Matrix w;  // support x r
    };
    struct EntryOracle {
        std::function<Scalar(std::size_t, std::size_t)> entry;  // 0-based
        std::optional<DecayBound> decay;
        std::optional<std::size_t> dim;
        std::optional<std::size_t> bandwidth;  // entries with |i-j| > bandwidth vanish
        double norm_bound = 0.0;
        bool normal = false;
        std::string text;
    };
    struct IdentityMinus {
        OperatorPtr inner;
    };
    /// Blocks in order along the diagonal; all but the last must be finite dimensional.
    struct BlockDiag {
        std::vector<OperatorPtr> blocks;
    };
    /// Compression to coordinates offset .. offset+count-1 (or offset.. when count is empty).
    struct Restriction {
        OperatorPtr inner;
        std::size_t offset = 0;
        std::optional<std::size_t> count;
    };
    using Form = std::variant<Diagonal, FiniteRank, EntryOracle, IdentityMinus, BlockDiag, Restriction>;

    static OperatorSpec diagonal(DiagonalSequence lambda) { return OperatorSpec(Diagonal{std::move(lambda)}); }

    static OperatorSpec zero() { return diagonal(DiagonalSequence::closed(0.0, {}, "0")); }
    static OperatorSpec identity() { return diagonal(DiagonalSequence::closed(1.0, {}, "1")); }

    static OperatorSpec diagonal_plus_finite_rank(DiagonalSequence lambda, Matrix u, Matrix w) {
        if (u.rows() != w.rows() || u.cols() != w.cols()) throw DomainError("finite-rank factors must have equal shape");
        if (auto d = lambda.dim(); d && static_cast<std::size_t>(u.rows()) > *d)
            throw DomainError("finite-rank support exceeds the operator dimension");
        return OperatorSpec(FiniteRank{std::move(lambda), std::move(u), std::move(w)});
    }

    static OperatorSpec entry_oracle(EntryOracle e) {
        if (!e.entry) throw DomainError("entry oracle needs an entry function");
        if (e.decay) e.decay->validate();
        if (e.norm_bound <= 0.0 && e.decay) e.norm_bound = e.decay->trace_norm_tail(0);
        if (!(e.norm_bound > 0.0) || std::isinf(e.norm_bound))
            throw DomainError("entry oracle needs a finite operator-norm bound");
        return OperatorSpec(std::move(e));
    }

    /// 1 - T, normalized where the result has a direct form.
    static OperatorSpec identity_minus(const OperatorSpec& t) {
        return std::visit(
            [&](const auto& f) -> OperatorSpec {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal>) {
                    if (!f.lambda.is_product()) return diagonal(f.lambda.one_minus());
                } else if constexpr (std::is_same_v<F, FiniteRank>) {
                    if (!f.lambda.is_product())
                        return diagonal_plus_finite_rank(f.lambda.one_minus(), -f.u, f.w);
                } else if constexpr (std::is_same_v<F, IdentityMinus>) {
                    return *f.inner;
                } else if constexpr (std::is_same_v<F, BlockDiag>) {
                    std::vector<OperatorSpec> bs;
                    for (const auto& b : f.blocks) bs.push_back(identity_minus(*b));
                    return block_diag(bs);
                }
                return OperatorSpec(IdentityMinus{std::make_shared<const OperatorSpec>(t)});
            },
            t.form_);
    }

    static OperatorSpec block_diag(const std::vector<OperatorSpec>& blocks) {
        if (blocks.empty()) throw DomainError("block_diag needs at least one block");
        for (std::size_t i = 0; i + 1 < blocks.size(); ++i)
            if (!blocks[i].dim()) throw DomainError("only the last diagonal block may be infinite dimensional");
        if (blocks.size() == 1) return blocks.front();
        // Diagonal blocks collapse into one diagonal sequence.
        bool all_diagonal = true;
        for (const auto& b : blocks) all_diagonal = all_diagonal && b.diagonal_sequence().has_value();
        if (all_diagonal) {
            std::vector<double> head;
            for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
                const auto s = *blocks[i].diagonal_sequence();
                for (std::size_t j = 1; j <= *s.dim(); ++j) head.push_back(s.value(j));
            }
            return diagonal(blocks.back().diagonal_sequence()->prepend(head));
        }
        BlockDiag b;
        for (const auto& x : blocks) b.blocks.push_back(std::make_shared<const OperatorSpec>(x));
        return OperatorSpec(std::move(b));
    }

    /// Compression to the coordinate range [offset, offset + count).
    OperatorSpec restrict(std::size_t offset, std::optional<std::size_t> count = {}) const {
        if (auto d = dim()) {
            if (offset > *d) throw DomainError("restriction offset beyond dimension");
            if (count && offset + *count > *d) throw DomainError("restriction range beyond dimension");
        }
        if (auto s = diagonal_sequence()) {
            auto tail = s->drop_front(offset);
            return diagonal(count ? tail.take(*count) : tail);
        }
        return OperatorSpec(Restriction{std::make_shared<const OperatorSpec>(*this), offset, count});
    }

    const Form& form() const { return form_; }

    std::string form_name() const {
        static const char* names[] = {"diagonal", "diagonal-plus-finite-rank", "entry-oracle",
                                      "identity-minus", "block-diag", "restriction"};
        return names[form_.index()];
    }

    std::optional<std::size_t> dim() const {
        return std::visit(
            [](const auto& f) -> std::optional<std::size_t> {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal> || std::is_same_v<F, FiniteRank>) return f.lambda.dim();
                else if constexpr (std::is_same_v<F, EntryOracle>) return f.dim;
                else if constexpr (std::is_same_v<F, IdentityMinus>) return f.inner->dim();
                else if constexpr (std::is_same_v<F, BlockDiag>) {
                    std::size_t total = 0;
                    for (const auto& b : f.blocks) {
                        auto d = b->dim();
                        if (!d) return std::nullopt;
                        total += *d;
                    }
                    return total;
                } else {
                    if (f.count) return f.count;
                    if (auto d = f.inner->dim()) return *d - f.offset;
                    return std::nullopt;
                }
            },
            form_);
    }

    /// T_ij, 0-based.
    Scalar entry(std::size_t i, std::size_t j) const {
        check_index(i);
        check_index(j);
        return std::visit(
            [&](const auto& f) -> Scalar {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal>) {
                    return i == j ? Scalar(f.lambda.value(i + 1)) : Scalar(0.0);
                } else if constexpr (std::is_same_v<F, FiniteRank>) {
                    Scalar v = i == j ? Scalar(f.lambda.value(i + 1)) : Scalar(0.0);
                    const auto L = static_cast<std::size_t>(f.u.rows());
                    if (i < L && j < L)
                        v += f.u.row(static_cast<Eigen::Index>(i)).dot(f.w.row(static_cast<Eigen::Index>(j)).conjugate());
                    return v;
                } else if constexpr (std::is_same_v<F, EntryOracle>) {
                    if (f.bandwidth && (i > j ? i - j : j - i) > *f.bandwidth) return Scalar(0.0);
                    return f.entry(i, j);
                } else if constexpr (std::is_same_v<F, IdentityMinus>) {
                    return (i == j ? Scalar(1.0) : Scalar(0.0)) - f.inner->entry(i, j);
                } else if constexpr (std::is_same_v<F, BlockDiag>) {
                    std::size_t off = 0;
                    for (const auto& b : f.blocks) {
                        const auto d = b->dim();
                        const std::size_t end = d ? off + *d : static_cast<std::size_t>(-1);
                        if (i >= off && i < end) {
                            if (j < off || j >= end) return Scalar(0.0);
                            return b->entry(i - off, j - off);
                        }
                        off = end;
                    }
                    return Scalar(0.0);
                } else {
                    return f.inner->entry(i + f.offset, j + f.offset);
                }
            },
            form_);
    }

    /// The N x N coordinate truncation P_N T P_N.
    SparseMatrix truncated(std::size_t N) const {
        if (auto d = dim(); d && N > *d)
            throw DomainError("truncation " + std::to_string(N) + " exceeds dimension " + std::to_string(*d));
        const auto n = static_cast<Eigen::Index>(N);
        SparseMatrix m(n, n);
        std::visit(
            [&](const auto& f) {
                using F = std::decay_t<decltype(f)>;
                std::vector<Eigen::Triplet<Scalar>> trips;
                if constexpr (std::is_same_v<F, Diagonal>) {
                    for (std::size_t j = 0; j < N; ++j) {
                        const double v = f.lambda.value(j + 1);
                        if (v != 0.0) trips.emplace_back(j, j, v);
                    }
                    m.setFromTriplets(trips.begin(), trips.end());
                } else if constexpr (std::is_same_v<F, FiniteRank>) {
                    for (std::size_t j = 0; j < N; ++j) {
                        const double v = f.lambda.value(j + 1);
                        if (v != 0.0) trips.emplace_back(j, j, v);
                    }
                    const Eigen::Index L = std::min<Eigen::Index>(f.u.rows(), n);
                    const Matrix low = f.u.topRows(L) * f.w.topRows(L).adjoint();
                    for (Eigen::Index c = 0; c < L; ++c)
                        for (Eigen::Index r = 0; r < L; ++r)
                            if (low(r, c) != Scalar(0.0)) trips.emplace_back(r, c, low(r, c));
                    m.setFromTriplets(trips.begin(), trips.end());
                } else if constexpr (std::is_same_v<F, EntryOracle>) {
                    for (std::size_t c = 0; c < N; ++c) {
                        std::size_t r0 = 0, r1 = N;
                        if (f.bandwidth) {
                            r0 = c > *f.bandwidth ? c - *f.bandwidth : 0;
                            r1 = std::min(N, c + *f.bandwidth + 1);
                        }
                        for (std::size_t r = r0; r < r1; ++r) {
                            const Scalar v = f.entry(r, c);
                            if (v != Scalar(0.0)) trips.emplace_back(r, c, v);
                        }
                    }
                    m.setFromTriplets(trips.begin(), trips.end());
                } else if constexpr (std::is_same_v<F, IdentityMinus>) {
                    SparseMatrix id(n, n);
                    id.setIdentity();
                    m = id - f.inner->truncated(N);
                } else if constexpr (std::is_same_v<F, BlockDiag>) {
                    std::size_t off = 0;
                    for (const auto& b : f.blocks) {
                        if (off >= N) break;
                        const std::size_t len = b->dim() ? std::min(*b->dim(), N - off) : N - off;
                        const SparseMatrix blk = b->truncated(len);
                        for (Eigen::Index c = 0; c < blk.outerSize(); ++c)
                            for (SparseMatrix::InnerIterator it(blk, c); it; ++it)
                                trips.emplace_back(it.row() + static_cast<Eigen::Index>(off),
                                                   it.col() + static_cast<Eigen::Index>(off), it.value());
                        off += len;
                    }
                    m.setFromTriplets(trips.begin(), trips.end());
                } else {
                    const SparseMatrix big = f.inner->truncated(f.offset + N);
                    m = big.block(static_cast<Eigen::Index>(f.offset), static_cast<Eigen::Index>(f.offset), n, n);
                }
            },
            form_);
        m.makeCompressed();
        return m;
    }

    /// The eigenvalue sequence when T is diagonal in the coordinate basis.
    std::optional<DiagonalSequence> diagonal_sequence() const {
        if (const auto* d = std::get_if<Diagonal>(&form_)) return d->lambda;
        if (const auto* r = std::get_if<Restriction>(&form_)) {
            if (auto s = r->inner->diagonal_sequence()) {
                auto tail = s->drop_front(r->offset);
                return r->count ? tail.take(*r->count) : tail;
            }
        }
        if (const auto* m = std::get_if<IdentityMinus>(&form_)) {
            if (auto s = m->inner->diagonal_sequence(); s && !s->is_product()) return s->one_minus();
        }
        return std::nullopt;
    }

    bool is_normal() const {
        return std::visit(
            [](const auto& f) -> bool {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal>) return true;
                else if constexpr (std::is_same_v<F, FiniteRank>) {
                    // Real diagonal plus a Hermitian finite-rank part is self-adjoint.
                    const Matrix k = f.u * f.w.adjoint();
                    return (k - k.adjoint()).norm() <= 1e-14 * (1.0 + k.norm());
                } else if constexpr (std::is_same_v<F, EntryOracle>) return f.normal;
                else if constexpr (std::is_same_v<F, IdentityMinus>) return f.inner->is_normal();
                else if constexpr (std::is_same_v<F, BlockDiag>) {
                    for (const auto& b : f.blocks)
                        if (!b->is_normal()) return false;
                    return true;
                } else {
                    return f.inner->diagonal_sequence().has_value();
                }
            },
            form_);
    }

    /// An upper bound on the operator norm.
    double norm_bound() const {
        return std::visit(
            [](const auto& f) -> double {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal>) return f.lambda.sup_abs();
                else if constexpr (std::is_same_v<F, FiniteRank>) {
                    double fr = 0.0;
                    for (Eigen::Index k = 0; k < f.u.cols(); ++k) fr += f.u.col(k).norm() * f.w.col(k).norm();
                    return f.lambda.sup_abs() + fr;
                } else if constexpr (std::is_same_v<F, EntryOracle>) return f.norm_bound;
                else if constexpr (std::is_same_v<F, IdentityMinus>) return 1.0 + f.inner->norm_bound();
                else if constexpr (std::is_same_v<F, BlockDiag>) {
                    double m = 0.0;
                    for (const auto& b : f.blocks) m = std::max(m, b->norm_bound());
                    return m;
                } else {
                    return f.inner->norm_bound();
                }
            },
            form_);
    }

    /// Whether T maps E_s into itself and E_s^perp into itself (checked structurally; entry
    /// oracles are checked on the coupling block up to `probe` rows and columns past s).
    bool respects_split(std::size_t s, std::size_t probe = 256) const {
        if (auto d = dim(); d && s >= *d) return true;
        return std::visit(
            [&](const auto& f) -> bool {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Diagonal>) return true;
                else if constexpr (std::is_same_v<F, FiniteRank>) {
                    const auto L = static_cast<std::size_t>(f.u.rows());
                    if (s >= L) return true;
                    for (std::size_t i = 0; i < L; ++i)
                        for (std::size_t j = 0; j < L; ++j)
                            if ((i < s) != (j < s) && entry(i, j) != Scalar(0.0)) return false;
                    return true;
                } else if constexpr (std::is_same_v<F, EntryOracle>) {
                    std::size_t upto = s + probe;
                    if (f.dim) upto = std::min(upto, *f.dim);
                    for (std::size_t i = 0; i < s; ++i)
                        for (std::size_t j = s; j < upto; ++j)
                            if (entry(i, j) != Scalar(0.0) || entry(j, i) != Scalar(0.0)) return false;
                    return true;
                } else if constexpr (std::is_same_v<F, IdentityMinus>) return f.inner->respects_split(s, probe);
                else if constexpr (std::is_same_v<F, BlockDiag>) {
                    std::size_t off = 0;
                    for (const auto& b : f.blocks) {
                        const auto d = b->dim();
                        if (!d || s < off + *d) return b->respects_split(s - off, probe);
                        off += *d;
                    }
                    return true;
                } else {
                    return f.inner->respects_split(s + f.offset, probe);
                }
            },
            form_);
    }

    /// Smallest truncation N with an admissible tail: for decay-bounded oracles the neglected
    /// part must contribute < tol/10 to trace and trace norm. Empty when every N works.
    std::optional<std::size_t> required_truncation(double tol) const {
        if (const auto* e = std::get_if<EntryOracle>(&form_)) {
            if (!e->decay && e->dim) return *e->dim;
            if (!e->decay) throw DomainError("entry oracle has no decay bound; its truncation error is unknown");
            std::size_t n = e->decay->truncation_for(tol / 10.0);
            if (e->dim) n = std::min(n, *e->dim);
            return n;
        }
        if (const auto* m = std::get_if<IdentityMinus>(&form_)) return m->inner->required_truncation(tol);
        if (const auto* r = std::get_if<Restriction>(&form_)) {
            auto n = r->inner->required_truncation(tol);
            if (!n) return n;
            return *n > r->offset ? *n - r->offset : 0;
        }
        if (const auto* b = std::get_if<BlockDiag>(&form_)) {
            std::optional<std::size_t> need;
            std::size_t off = 0;
            for (const auto& blk : b->blocks) {
                if (auto n = blk->required_truncation(tol)) need = std::max(need.value_or(0), off + *n);
                off += blk->dim().value_or(0);
            }
            return need;
        }
        return std::nullopt;
    }

    /// The complement of T_N.
    TailInfo tail(std::size_t N) const {
        if (auto d = dim(); d && N >= *d) return TailInfo{};
        if (auto s = diagonal_sequence()) {
            TailInfo t;
            if (s->is_product()) {
                t.trace = Scalar(not_a_number);
                t.trace_norm = not_a_number;
            } else {
                t.trace = s->tail_sum(N);
                t.trace_norm = s->tail_abs_sum(N);
            }
            t.log_det = s->tail_log(N);
            return t;
        }
        return std::visit(
            [&](const auto& f) -> TailInfo {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, FiniteRank>) {
                    const auto L = static_cast<std::size_t>(f.u.rows());
                    if (N >= L) return diagonal(f.lambda).tail(N);
                    return inexact();
                } else if constexpr (std::is_same_v<F, EntryOracle>) {
                    if (f.dim && N >= *f.dim) return TailInfo{};
                    if (!f.decay) throw DomainError("entry oracle has no decay bound; its truncation error is unknown");
                    TailInfo t = inexact();
                    t.trace_error = f.decay->diagonal_tail(N);
                    t.trace_norm_error = f.decay->trace_norm_tail(N);
                    return t;
                } else if constexpr (std::is_same_v<F, IdentityMinus>) {
                    TailInfo in = f.inner->tail(N);
                    TailInfo t;
                    t.exact = in.exact;
                    t.trace = Scalar(infinity);
                    t.trace_norm = infinity;
                    t.trace_error = in.trace_error;
                    t.trace_norm_error = in.trace_norm_error;
                    // log det(1 - X) for the complement: not available from the inner summaries.
                    t.log_det = in.exact ? Scalar(not_a_number) : Scalar(0.0);
                    return t;
                } else if constexpr (std::is_same_v<F, BlockDiag>) {
                    TailInfo t;
                    std::size_t off = 0;
                    for (const auto& b : f.blocks) {
                        const auto d = b->dim();
                        const std::size_t end = d ? off + *d : static_cast<std::size_t>(-1);
                        if (end > N) {
                            const TailInfo bt = b->tail(N > off ? N - off : 0);
                            if (N <= off) {
                                // Whole block lies outside: its full trace and determinant.
                                const auto full = block_totals(*b);
                                t.trace += full.trace;
                                t.trace_norm += full.trace_norm;
                                t.log_det += full.log_det;
                                t.exact = t.exact && full.exact;
                            } else {
                                t.trace += bt.trace;
                                t.trace_norm += bt.trace_norm;
                                t.log_det += bt.log_det;
                                t.exact = t.exact && bt.exact;
                                t.trace_error += bt.trace_error;
                                t.trace_norm_error += bt.trace_norm_error;
                            }
                        }
                        off = end;
                    }
                    return t;
                } else if constexpr (std::is_same_v<F, Restriction>) {
                    const std::size_t base = f.offset + N;
                    if (f.count) {
                        // Finite restriction: complement is the block [offset+N, offset+count).
                        const OperatorSpec rest = f.inner->restrict(base, *f.count - N);
                        return block_totals(rest);
                    }
                    return f.inner->tail(base);
                } else {
                    return TailInfo{};
                }
            },
            form_);
    }

private:
    explicit OperatorSpec(Form f) : form_(std::move(f)) {}

    static TailInfo inexact() {
        TailInfo t;
        t.exact = false;
        return t;
    }

    /// Trace, trace norm and log det of a finite (or diagonal) operator as a whole.
    static TailInfo block_totals(const OperatorSpec& b) {
        if (!b.dim()) return b.tail(0);
        const auto d = static_cast<Eigen::Index>(*b.dim());
        if (d > 2048) throw DomainError("finite block too large for dense evaluation");
        const Matrix m = Matrix(b.truncated(static_cast<std::size_t>(d)));
        TailInfo t;
        t.trace = m.trace();
        t.trace_norm = singular_value_sum(m);
        t.log_det = std::log(determinant(m));
        return t;
    }

    void check_index(std::size_t i) const {
        if (auto d = dim(); d && i >= *d)
            throw DomainError("index " + std::to_string(i) + " outside dimension " + std::to_string(*d));
    }

    Form form_;
};

}  // namespace netcalc
