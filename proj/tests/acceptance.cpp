// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <netcalc/bochner.hpp>
#include <netcalc/netcore.hpp>
#include <netcalc/opcalc.hpp>

#include "support.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace netcalc;

namespace {

// 30-digit oracles.
constexpr double kEuler2Head60 = 0.288788095086602421529383465994;  // prod_{j<=60} (1 - 2^-j)
constexpr double kEuler2 = 0.288788095086602421278899721929;        // prod_{j>=1} (1 - 2^-j)
constexpr double kEuler2From4 = 0.880116099311550236278551533499;   // prod_{j>=4} (1 - 2^-j)
constexpr double kEuler3Plus = 1.56493401856701153793884910673;     // prod_{j>=1} (1 + 3^-j)
constexpr double kLn2 = 0.693147180559945309417232121458;

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

OperatorSpec diag(const std::string& text) { return OperatorSpec::diagonal(DiagonalSequence::parse(text)); }

ProbeOptions probe(std::size_t n_max, double tol = 1e-6, std::uint64_t seed = 7) {
    ProbeOptions o;
    o.n_max = n_max;
    o.tol = tol;
    o.seed = seed;
    return o;
}

Outcome trace_minor_convergence() {
    Outcome o;
    MinorNetOptions opt;
    opt.n_max = 40;
    opt.tol = 1e-10;
    const auto r = minor_net(diag("2^-j"), opt);
    o.check(r.verdict() == Verdict::converged, "verdict " + std::string(to_string(r.verdict())));
    bool seen = false;
    for (const auto& row : r.rows)
        if (row.strategy == "coordinate" && row.n == 40) {
            seen = true;
            o.check(std::abs(row.estimate - 1.0) <= 1e-10, fmt("|estimate - 1| = %.3g", std::abs(row.estimate - 1.0)));
        }
    o.check(seen, "no sample at n = 40");
    return o;
}

Outcome trace_minor_divergence() {
    Outcome o;
    MinorNetOptions opt;
    opt.strategies = {Strategy{StrategyKind::coordinate}, Strategy{StrategyKind::adversarial_plus}};
    const auto r = minor_net(diag("(-1)^(j+1)/j"), opt);
    o.check(r.verdict() == Verdict::diverged, "verdict " + std::string(to_string(r.verdict())));
    std::size_t plus = 0, coord = 0;
    for (const auto& row : r.rows) {
        if (row.n < 100 || row.n > 500) continue;
        if (row.strategy == "adversarial+") {
            ++plus;
            o.check(row.value.real() > 2.0, fmt("adversarial+ sample %.6f at n = %.0f", row.value.real(), double(row.n)));
        } else if (row.strategy == "coordinate") {
            ++coord;
            o.check(std::abs(row.value.real() - kLn2) <= 0.05,
                    fmt("coordinate sample %.6f at n = %.0f", row.value.real(), double(row.n)));
        }
    }
    o.check(plus > 0 && coord > 0, "no samples in [100, 500]");
    return o;
}

Outcome fredholm_determinant() {
    Outcome o;
    const auto r = fredholm_det(diag("2^-j"));
    o.check(std::abs(r.value.real() - kEuler2Head60) <= 1e-8 && std::abs(r.value.imag()) <= 1e-8,
            fmt("det = %.12f", r.value.real()));
    o.check(r.series && r.eigen, "missing method");
    if (r.series && r.eigen)
        o.check(std::abs(*r.series - *r.eigen) <= 2e-8, fmt("series/eigen gap %.3g", std::abs(*r.series - *r.eigen)));
    return o;
}

Outcome determinant_class() {
    Outcome o;
    ProbeOptions p = probe(4096);
    for (const char* s : {"coordinate", "eigen-sorted", "adversarial+", "adversarial-", "random"})
        p.strategies.push_back(Strategy::parse(s));
    const auto r = det_class_probe(diag("1 - 1/(j+1)^2"), p);
    o.check(r.positive(), "not determinant class");
    for (std::size_t i = 0; i < r.strategies.size(); ++i) {
        Scalar last;
        for (const auto& row : r.rows)
            if (row.strategy == r.strategies[i]) last = row.estimate;
        o.check(std::abs(last - 0.5) <= 1e-8, r.strategies[i] + fmt(" estimate %.15f", last.real()));
    }
    // The finite minors themselves follow the telescoping product (n+2)/(2(n+1)).
    for (const auto& row : r.rows)
        if (row.strategy == "coordinate")
            o.check(std::abs(row.value.real() - (row.n + 2.0) / (2.0 * (row.n + 1.0))) <= 1e-12,
                    fmt("minor at n = %.0f is %.15f", double(row.n), row.value.real()));
    return o;
}

Outcome normal_equivalence() {
    Outcome o;
    const char* summable[] = {"1 - 2^-j",       "1 - 1/(j+1)^2", "1 + 1/j^2",      "1 - (-1)^j/(j+1)^2",
                              "1 + 3^-j",       "1 - 0.5/j^2.5", "1 + (-1)^j/(j+1)^3", "1 - 0.9^j",
                              "1 + 1/(j+2)^2", "1 - 0.3*(-0.5)^j"};
    const char* non_summable[] = {"1 - 1/j",          "1 - 1/(j+1)",   "1 + 1/j",  "1 - (-1)^j/j",
                                  "1 - (-1)^j/j^0.6", "1 - 1/(j+1)^0.5", "0.5",      "1 + 1/(j+1)^0.9",
                                  "1 - 0.5/j",        "2 - 1/j"};
    const ProbeOptions p = probe(4096, 1e-6, 11);
    auto run = [&](const char* text, bool expected) {
        const auto e = det_class_to_trace_class_check(diag(text), p);
        o.check(e.verdicts_match, std::string(text) + ": det-class " + (e.det_class ? "yes" : "no") + ", trace-class " +
                                      (e.trace_class ? "yes" : "no"));
        o.check(e.det_class == expected, std::string(text) + ": unexpected determinant-class verdict");
    };
    for (const char* s : summable) run(s, true);
    for (const char* s : non_summable) run(s, false);
    return o;
}

Outcome block_law() {
    Outcome o;
    const auto a = block_factor_check(diag("1 - 1/(j+1)^2"), 1, probe(4096));
    o.check(a.residual <= 1e-7, fmt("telescoping residual %.3g", a.residual));
    o.check(std::abs(a.det_whole - 0.5) <= 1e-8, fmt("telescoping det %.12f", a.det_whole.real()));
    for (std::size_t split : {1, 7}) {
        const auto id = block_factor_check(OperatorSpec::identity(), split, probe(64));
        o.check(id.residual <= 1e-7, fmt("identity residual %.3g", id.residual));
    }
    const auto b = block_factor_check(
        OperatorSpec::block_diag({OperatorSpec::diagonal(DiagonalSequence::from_list({2.0})), diag("1 - 2^-j")}), 1,
        probe(2048));
    o.check(b.residual <= 1e-7, fmt("block residual %.3g", b.residual));
    o.check(std::abs(b.det_whole - 2.0 * kEuler2) <= 1e-8, fmt("block det %.12f", b.det_whole.real()));
    const auto c = block_factor_check(diag("1 - 2^-j"), 3, probe(2048));
    o.check(std::abs(c.det_rest - kEuler2From4) <= 1e-8, fmt("tail det %.12f", c.det_rest.real()));
    return o;
}

Outcome product_law() {
    Outcome o;
    const auto id = product_rule_check(OperatorSpec::identity(), OperatorSpec::identity(), probe(64));
    o.check(id.residual <= 1e-7, fmt("identity residual %.3g", id.residual));
    const auto a = product_rule_check(diag("1 - 2^-j"), diag("1 - 3^-j"), probe(2048));
    o.check(a.valid && a.residual <= 1e-7, fmt("geometric residual %.3g", a.residual));
    const auto b = product_rule_check(diag("1 - 1/(j+1)^2"), OperatorSpec::identity(), probe(4096));
    o.check(b.valid && b.residual <= 1e-7, fmt("identity-factor residual %.3g", b.residual));
    const auto c = product_rule_check(diag("1 - 2^-j"), diag("1 + 3^-j"), probe(2048, 1e-9));
    o.check(std::abs(limit_or_last(c.ab) - kEuler2 * kEuler3Plus) <= 1e-8,
            fmt("product det %.12f", limit_or_last(c.ab).real()));
    return o;
}

Outcome exterior_trace_oracle() {
    Outcome o;
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + trial % 7);
        FiniteSection s;
        s.matrix = random_matrix(rng, n, n);
        for (std::size_t k = 0; k <= static_cast<std::size_t>(n); ++k)
            worst = std::max(worst, testing::relative_gap(exterior_trace(s, k), testing::principal_minor_sum(s.matrix, k)));
    }
    o.check(worst <= 1e-9, fmt("worst relative gap %.3g", worst));
    return o;
}

// Sum of a(alpha_big, k) over k with the dominator tail below 1e-13.
Scalar large_alpha_oracle(const std::function<Scalar(double, std::size_t)>& a, double rate, double scale) {
    Scalar s(0.0);
    for (std::size_t k = 1; scale * std::pow(rate, double(k)) / (1.0 - rate) > 1e-13; ++k) s += a(1e15, k);
    return s;
}

Outcome dominated_convergence() {
    Outcome o;
    Rng rng(31);
    // Head terms must settle within tol / 2^(k+1); for ratios near 0.8 that needs alpha far beyond 2^62.
    DominatedSumOptions opts;
    for (int i = 0; i <= 250; ++i) opts.alphas.push_back(std::ldexp(1.0, 4 * i));
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double r = rng.uniform(0.2, 0.8);
        const double beta = rng.uniform(-1.0, 1.0);
        const double theta = rng.uniform(0.0, M_PI);
        const double scale = 1.0 + std::fabs(beta);
        std::function<Scalar(double, std::size_t)> a;
        switch (i % 5) {
            case 0: a = [=](double al, std::size_t k) { return Scalar(std::pow(r, double(k)) * (std::cos(theta * k) + beta / al)); }; break;
            case 1: a = [=](double al, std::size_t k) { return Scalar(std::pow(r, double(k)) * double(k) / (double(k) + al)); }; break;
            case 2: a = [=](double al, std::size_t k) { return Scalar(std::pow(r, double(k)) * al / (al + double(k))); }; break;
            case 3: a = [=](double al, std::size_t k) { return std::polar(std::pow(r, double(k)), theta * k) * (1.0 + beta * std::exp(-al)) / scale; }; break;
            default: a = [=](double al, std::size_t k) { return Scalar(std::pow(r, double(k)) * std::sin(k + beta * std::atan(al))); }; break;
        }
        const Dominator g{[=](std::size_t k) { return scale * std::pow(r, double(k)); },
                          [=](std::size_t k) { return scale * std::pow(r, double(k + 1)) / (1.0 - r); }};
        const auto res = dominated_net_sum(a, g, 1e-8, opts);
        worst = std::max(worst, std::abs(res.value - large_alpha_oracle(a, r, scale)));
    }
    o.check(worst <= 1e-8, fmt("worst gap to the large-alpha oracle %.3g", worst));

    const Dominator g{[](std::size_t k) { return std::ldexp(1.0, -int(k)); },
                      [](std::size_t k) { return std::ldexp(1.0, -int(k)); }};
    try {
        dominated_net_sum([](double al, std::size_t k) { return Scalar(std::ldexp(1.0, -int(k)) * (k == 3 ? al : 1.0)); },
                          g, 1e-8);
        o.check(false, "non-dominated family accepted");
    } catch (const DominationError& e) {
        o.check(e.k() == 3 && e.alpha() == 2.0, fmt("violation reported at alpha %.3g, k %.0f", e.alpha(), double(e.k())));
    }
    return o;
}

LcsVector random_vector(Rng& rng, const SeminormFamily& fam) {
    if (fam.space_id() == "continuous01")
        return LcsVector::polynomial({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const std::size_t len = fam.dimension() ? *fam.dimension() : 5;
    std::vector<double> c(len);
    for (auto& x : c) x = rng.uniform(-2, 2);
    return LcsVector::sequence(c);
}

Outcome bochner_integrator() {
    Outcome o;
    const auto e2 = SeminormFamily::euclidean(2);
    auto coord_gap = [](const LcsVector& v, std::vector<double> want) {
        double m = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i) m = std::max(m, std::fabs(v.coord(i + 1) - want[i]));
        return m;
    };

    const auto two = MeasureSpace::discrete(std::vector<double>{1, 2});
    MeasurableFn f2;
    f2.eval = [](double x) { return x == 1.0 ? LcsVector::sequence({1, 0}) : LcsVector::sequence({0, 1}); };
    const auto d = bochner_integrate(two, f2, e2, 1e-12);
    o.check(coord_gap(d.value, {1, 2}) <= 1e-12, fmt("two-point integral off by %.3g", coord_gap(d.value, {1, 2})));

    const auto geo = MeasureSpace::discrete(DiagonalSequence::parse("2^-j"));
    MeasurableFn units;
    units.eval = [](double x) { return LcsVector::unit(static_cast<std::size_t>(x)); };
    units.bound = [](std::size_t) { return 1.0; };
    const auto u = bochner_integrate(geo, units, SeminormFamily::frechet_sequences(), 1e-12);
    o.check(coord_gap(u.value, {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}) <= 1e-12, "unit-vector integral");

    MeasurableFn curve;
    curve.eval = [](double x) { return LcsVector::sequence({x, x * x}); };
    curve.bound = [](std::size_t) { return std::sqrt(2.0); };
    const auto c = bochner_integrate(MeasureSpace::interval01(), curve, e2, 1e-6);
    o.check(coord_gap(c.value, {0.5, 1.0 / 3.0}) <= 1e-6, fmt("(x, x^2) integral off by %.3g", coord_gap(c.value, {0.5, 1.0 / 3.0})));

    // Seminorm bound on randomized integrands over every built-in space.
    Rng rng(99);
    const std::vector<SeminormFamily> spaces{SeminormFamily::euclidean(3), SeminormFamily::frechet_sequences(),
                                             SeminormFamily::continuous_on_01(),
                                             SeminormFamily::weighted_l1({1.0, 0.5, 0.25})};
    const double tol = 1e-9;
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto& fam = spaces[static_cast<std::size_t>(trial) % spaces.size()];
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform(0, 5));
        std::vector<double> w(m);
        for (auto& x : w) x = rng.uniform(0.1, 2.0);
        std::vector<LcsVector> vals;
        for (std::size_t i = 0; i < m; ++i) vals.push_back(random_vector(rng, fam));
        const auto space = MeasureSpace::discrete(w);
        MeasurableFn f;
        f.eval = [vals](double x) { return vals[static_cast<std::size_t>(x) - 1]; };
        const auto r = bochner_integrate(space, f, fam, tol);
        for (std::size_t k = 1; k <= fam.top(BochnerOptions{}.depth); ++k)
            if (fam.eval(k, r.value) > seminorm_integral(space, f, fam, k, tol) + 2 * tol) ++violations;
    }
    o.check(violations == 0, fmt("%.0f seminorm-bound violations", double(violations)));

    // Scalar consistency.
    MeasurableFn ex;
    ex.eval = [](double x) { return LcsVector::sequence({std::exp(x)}); };
    ex.bound = [](std::size_t) { return std::exp(1.0); };
    const double stol = 1e-6;
    const auto s = bochner_integrate(MeasureSpace::interval01(), ex, SeminormFamily::euclidean(1), stol);
    const double direct = scalar_integral(MeasureSpace::interval01(), [](double x) { return std::exp(x); }, stol);
    o.check(std::fabs(s.value.coord(1) - direct) <= stol, fmt("scalar mismatch %.3g", std::fabs(s.value.coord(1) - direct)));

    // Pushforward.
    Eigen::MatrixXd rot(2, 2);
    rot << 0, -1, 1, 0;
    const double p1 = pushforward_check(LinearMap::identity(), two, f2, e2, e2, 1e-10);
    const double p2 = pushforward_check(LinearMap::coordinate(1), MeasureSpace::interval01(), curve, e2,
                                        SeminormFamily::euclidean(1), 1e-7);
    const double p3 = pushforward_check(LinearMap::matrix(rot), two, f2, e2, e2, 1e-12);
    o.check(p1 <= 1e-6 && p2 <= 1e-6 && p3 <= 1e-12, fmt("pushforward residuals %.3g, %.3g", std::max(p1, p2), p3));
    return o;
}

Outcome approximant_construction() {
    Outcome o;
    Rng rng(5);
    struct Case {
        MeasureSpace space;
        MeasurableFn f;
        SeminormFamily fam;
        std::size_t k;
        std::vector<std::size_t> points;
    };
    std::vector<Case> cases;
    for (int i = 0; i < 8; ++i) {
        const std::size_t m = 3 + static_cast<std::size_t>(i);
        const std::size_t d = 1 + static_cast<std::size_t>(i % 3);
        std::vector<double> w(m);
        for (auto& x : w) x = rng.uniform(0.2, 3.0);
        // With delta = 1/n, image values closer than 1/50 (or nearer 0) leave a defect of that order at n = 50.
        const auto fam = SeminormFamily::euclidean(d);
        std::vector<LcsVector> vals;
        std::vector<std::size_t> pts;
        while (vals.size() < m) {
            std::vector<double> c(d);
            for (auto& x : c) x = rng.uniform(-3, 3);
            const LcsVector v = LcsVector::sequence(c);
            bool separated = fam.eval(1, v) >= 0.05;
            for (const auto& u : vals) separated = separated && fam.eval(1, v - u) >= 0.05;
            if (!separated) continue;
            vals.push_back(v);
            pts.push_back(vals.size());
        }
        MeasurableFn f;
        f.eval = [vals](double x) { return vals[static_cast<std::size_t>(x) - 1]; };
        cases.push_back({MeasureSpace::discrete(w), f, fam, 1, pts});
    }
    {
        MeasurableFn units;
        units.eval = [](double x) { return LcsVector::unit(static_cast<std::size_t>(x)); };
        units.bound = [](std::size_t) { return 1.0; };
        cases.push_back({MeasureSpace::discrete(DiagonalSequence::parse("2^-j")), units,
                         SeminormFamily::frechet_sequences(), 4, {1, 2, 3, 4, 5, 6, 7, 8}});
    }

    const double tol = 1e-12;
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const auto& cs = cases[ci];
        const auto basis = image_bases(cs.space, cs.f, cs.fam, tol)(cs.k);
        std::vector<double> defects;
        for (std::size_t n = 1; n <= 50; ++n) {
            const SimpleFunction s = build_approximant(cs.space, cs.f, basis, cs.fam, n, tol);
            defects.push_back(approximation_defect(cs.space, cs.f, s, cs.fam, cs.k, tol));

            // Brute-force A_j and D_j = A_j minus earlier A_i.
            const double delta = 1.0 / double(n);
            for (std::size_t x : cs.points) {
                const LcsVector fx = cs.f(double(x));
                LcsVector expected;
                if (cs.fam.eval(cs.k, fx) > delta)
                    for (std::size_t j = 1; j <= n; ++j)
                        if (cs.fam.eval(cs.k, fx - basis.dense.enumerate(j)) < delta) {
                            expected = basis.dense.enumerate(j);
                            break;
                        }
                if (!(s(double(x)) == expected)) {
                    o.check(false, fmt("case %.0f: D-set membership differs at n = %.0f", double(ci), double(n)));
                    break;
                }
            }
        }
        std::size_t first_below = defects.size();
        for (std::size_t i = 0; i < defects.size(); ++i)
            if (defects[i] < 1.0) {
                first_below = i;
                break;
            }
        bool eventually = first_below < defects.size();
        for (std::size_t i = first_below; eventually && i < defects.size(); ++i) {
            eventually = defects[i] < 1.0;
            if (i > first_below && defects[i] > defects[i - 1] + 1e-12) eventually = false;
        }
        o.check(eventually, fmt("case %.0f: defects not eventually below 1 and non-increasing", double(ci)));
        o.check(defects.back() < 1e-6, fmt("case %.0f: defect at n = 50 is %.3g", double(ci), defects.back()));
    }
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    Outcome o;
    const auto dir = std::filesystem::temp_directory_path() / "netcalc-acceptance";
    std::filesystem::create_directories(dir);
    for (const char* cfg : {"det_class_telescoping.toml", "open_question_jordan.toml"}) {
        const std::string command = std::string(cfg).rfind("det", 0) == 0 ? "det-class" : "probe-open-question";
        std::string out[2];
        for (int run = 0; run < 2; ++run) {
            const auto path = dir / ("run" + std::to_string(run) + ".csv");
            std::filesystem::remove(path);
            const std::string cmd = std::string(NETCALC_CLI) + " " + command + " --spec " + NETCALC_CONFIGS + "/" + cfg +
                                    " --seed 11 --out " + path.string();
            const int status = std::system(cmd.c_str());
            o.check(WIFEXITED(status) && WEXITSTATUS(status) == 0, std::string(cfg) + ": CLI failed");
            out[run] = slurp(path);
        }
        o.check(!out[0].empty() && out[0] == out[1], std::string(cfg) + ": outputs differ");
    }
    return o;
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "trace minors of diag(2^-j) converge to 1", 1.0, trace_minor_convergence},
        {2, "trace minors of diag((-1)^(j+1)/j) diverge", 2.0, trace_minor_divergence},
        {3, "Fredholm determinant of diag(2^-j)", 1.0, fredholm_determinant},
        {4, "determinant class of diag(1 - 1/(j+1)^2)", 5.0, determinant_class},
        {5, "determinant class iff trace class on 20 normal operators", 30.0, normal_equivalence},
        {6, "block and product laws", 10.0, [] {
             Outcome o;
             for (auto* f : {&block_law, &product_law}) {
                 const auto start = std::chrono::steady_clock::now();
                 Outcome part = f();
                 const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                 part.check(t < 5.0, fmt("part took %.2f s", t));
                 o.check(part.pass, part.detail);
             }
             return o;
         }},
        {7, "exterior traces match principal-minor sums", 10.0, exterior_trace_oracle},
        {8, "dominated convergence for nets", 5.0, dominated_convergence},
        {9, "Bochner integrator", 60.0, bochner_integrator},
        {10, "approximant construction", 10.0, approximant_construction},
        {11, "CLI determinism", 0.0, cli_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0.0) o.check(t < c.budget_seconds, fmt("runtime %.2f s over budget %.0f s", t, c.budget_seconds));
        std::printf("%s %d: %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, t, o.detail.empty() ? "" : " - ",
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
