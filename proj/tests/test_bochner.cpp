#include <netcalc/bochner.hpp>
#include <netcalc/linalg.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace netcalc;

namespace {

MeasurableFn fn(std::function<LcsVector(double)> eval, std::function<double(std::size_t)> bound = {}) {
    MeasurableFn f;
    f.eval = std::move(eval);
    f.bound = std::move(bound);
    return f;
}

LcsVector vec(std::vector<double> c) { return LcsVector::sequence(std::move(c)); }

double dist(const LcsVector& a, const LcsVector& b) {
    const LcsVector d = a - b;
    double m = 0.0;
    for (std::size_t i = 1; i <= 8; ++i) m = std::max(m, std::fabs(d.coord(i)));
    return m;
}

}  // namespace

TEST(SimpleIntegral, Examples) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 2});
    SimpleFunction s;
    s.atoms = {{DiscreteSet::of({1}), vec({1, 0})}, {DiscreteSet::of({2}), vec({0, 1})}};
    EXPECT_EQ(simple_integral(m, s), vec({1, 2}));
    EXPECT_TRUE(simple_integral(m, SimpleFunction{}).is_zero());

    SimpleFunction halves;
    halves.atoms = {{IntervalSet::of({{0.0, 0.5}}), vec({3, -1})}, {IntervalSet::of({{0.5, 1.0}}), vec({3, -1})}};
    EXPECT_EQ(simple_integral(MeasureSpace::interval01(), canonicalize(halves)), vec({3, -1}));
}

TEST(SimpleIntegral, InfiniteMeasureAtomRejected) {
    const auto m = MeasureSpace::discrete(DiagonalSequence::parse("1"));
    SimpleFunction s;
    s.atoms = {{DiscreteSet::all(), vec({1})}};
    EXPECT_THROW(simple_integral(m, s), Error);
}

TEST(BuildApproximant, IdentityOnThreePoints) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 1, 1});
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double x) { return vec({x}); });
    const ApproximationBasis basis{1, CountableDenseSet::cycling({vec({1}), vec({2}), vec({3})}), std::nullopt};
    const auto s = build_approximant(m, f, basis, fam, 10, 1e-12);
    ASSERT_EQ(s.atoms.size(), 3u);
    for (double x : {1.0, 2.0, 3.0}) EXPECT_EQ(s(x), f(x));
    EXPECT_EQ(approximation_defect(m, f, s, fam, 1, 1e-12), 0.0);
}

TEST(BuildApproximant, ZeroFunctionHasNoAtoms) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 1, 1});
    const auto fam = SeminormFamily::euclidean(2);
    const auto f = fn([](double) { return vec({0, 0}); });
    const ApproximationBasis basis{1, CountableDenseSet::cycling({vec({0, 0})}), std::nullopt};
    EXPECT_TRUE(build_approximant(m, f, basis, fam, 5, 1e-12).atoms.empty());
}

TEST(BuildApproximant, ConstantFunctionGivesOneAtom) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 1});
    const auto fam = SeminormFamily::euclidean(2);
    const auto v = vec({0.6, -0.8});
    const auto f = fn([v](double) { return v; });
    const ApproximationBasis basis{1, CountableDenseSet::cycling({v}), std::nullopt};
    const auto s = build_approximant(m, f, basis, fam, 2, 1e-12);
    ASSERT_EQ(s.atoms.size(), 1u);
    EXPECT_EQ(s.atoms[0].set, MeasurableSet(DiscreteSet::of({1, 2})));
    EXPECT_EQ(s.atoms[0].value, v);
}

TEST(BuildApproximant, TiesGoToTheFirstDensePoint) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1});
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double) { return vec({1.0}); });
    // Both 1.1 and 0.95 are within 1/4 of f(1); the earlier one wins.
    const ApproximationBasis basis{1, CountableDenseSet::cycling({vec({1.1}), vec({0.95})}), std::nullopt};
    const auto s = build_approximant(m, f, basis, fam, 4, 1e-12);
    ASSERT_EQ(s.atoms.size(), 1u);
    EXPECT_EQ(s.atoms[0].value, vec({1.1}));
}

TEST(BuildApproximant, NullsetIsExcluded) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 1, 1});
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double x) { return vec({x}); });
    const ApproximationBasis basis{1, CountableDenseSet::cycling({vec({1}), vec({2}), vec({3})}),
                                   DiscreteSet::of({2})};
    const auto s = build_approximant(m, f, basis, fam, 10, 1e-12);
    EXPECT_TRUE(s(2.0).is_zero());
    EXPECT_EQ(s(3.0), vec({3}));
}

TEST(ApproximationDefect, ConstantTwoAgainstIdentity) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 1, 1});
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double x) { return vec({x}); });
    SimpleFunction s;
    s.atoms = {{DiscreteSet::of({1, 2, 3}), vec({2})}};
    EXPECT_NEAR(approximation_defect(m, f, s, fam, 1, 1e-12), 2.0, 1e-12);
}

TEST(ApproximationDefect, ShrinksOnTheUnitInterval) {
    const auto m = MeasureSpace::interval01();
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double x) { return vec({x}); }, [](std::size_t) { return 1.0; });
    const auto bases = image_bases(m, f, fam, 1e-8);
    double prev = INFINITY;
    for (std::size_t n : {4, 16, 64}) {
        const auto s = build_approximant(m, f, bases(1), fam, n, 1e-8);
        const double d = approximation_defect(m, f, s, fam, 1, 1e-8);
        EXPECT_LT(d, 1.0 / double(n) + 1e-8) << n;
        EXPECT_LE(d, prev + 1e-8);
        prev = d;
    }
}

TEST(BochnerIntegrate, DiscreteTwoPoints) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 2});
    const auto f = fn([](double x) { return x == 1.0 ? vec({1, 0}) : vec({0, 1}); });
    const auto r = bochner_integrate(m, f, SeminormFamily::euclidean(2), 1e-10);
    EXPECT_LE(dist(r.value, vec({1, 2})), 1e-12);
    for (const auto& [k, d] : r.per_seminorm_defect) EXPECT_LT(d, 1.0) << k;
}

TEST(BochnerIntegrate, PolynomialCurveOnUnitInterval) {
    const auto f = fn([](double x) { return vec({x, x * x}); }, [](std::size_t) { return std::sqrt(2.0); });
    const auto r = bochner_integrate(MeasureSpace::interval01(), f, SeminormFamily::euclidean(2), 1e-6);
    EXPECT_NEAR(r.value.coord(1), 0.5, 1e-6);
    EXPECT_NEAR(r.value.coord(2), 1.0 / 3.0, 1e-6);
}

TEST(BochnerIntegrate, UnitVectorsInFrechetSpace) {
    const auto m = MeasureSpace::discrete(DiagonalSequence::parse("2^-j"));
    auto f = fn(
        [](double x) {
            std::vector<double> c(static_cast<std::size_t>(x), 0.0);
            c.back() = 1.0;
            return vec(c);
        },
        [](std::size_t) { return 1.0; });
    BochnerOptions opt;
    opt.depth = 6;
    const auto fam = SeminormFamily::frechet_sequences();
    const auto r = bochner_integrate(m, f, fam, 1e-8, opt);
    for (std::size_t j = 1; j <= 6; ++j) EXPECT_NEAR(r.value.coord(j), std::ldexp(1.0, -int(j)), 1e-8) << j;
}

TEST(BochnerIntegrate, SeminormBound) {
    Rng rng(21);
    const auto m = MeasureSpace::discrete(std::vector<double>{0.5, 1.5, 0.25, 2.0});
    const auto fam = SeminormFamily::euclidean(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<LcsVector> pts;
        for (int i = 0; i < 4; ++i) pts.push_back(vec({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)}));
        const auto f = fn([pts](double x) { return pts[static_cast<std::size_t>(x) - 1]; });
        const double tol = 1e-9;
        const auto r = bochner_integrate(m, f, fam, tol);
        EXPECT_LE(fam.eval(1, r.value), seminorm_integral(m, f, fam, 1, tol) + 2 * tol);
    }
}

TEST(BochnerIntegrate, Linearity) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 0.5, 3});
    const auto fam = SeminormFamily::euclidean(2);
    const auto f = fn([](double x) { return vec({x, 1.0 / x}); });
    const auto g = fn([](double x) { return vec({-x * x, 2.0}); });
    const double a = -1.75, tol = 1e-10;
    const auto h = fn([&](double x) { return a * f(x) + g(x); });
    const auto lhs = bochner_integrate(m, h, fam, tol).value;
    const auto rhs = a * bochner_integrate(m, f, fam, tol).value + bochner_integrate(m, g, fam, tol).value;
    EXPECT_LE(fam.eval(1, lhs - rhs), 3 * tol);
}

TEST(BochnerIntegrate, AgreesWithScalarIntegral) {
    const auto m = MeasureSpace::interval01();
    const auto fam = SeminormFamily::euclidean(1);
    const auto f = fn([](double x) { return vec({std::exp(x)}); }, [](std::size_t) { return std::exp(1.0); });
    const double tol = 1e-6;
    const auto r = bochner_integrate(m, f, fam, tol);
    EXPECT_NEAR(r.value.coord(1), scalar_integral(m, [](double x) { return std::exp(x); }, tol), tol);
}

TEST(BochnerIntegrate, ProbabilityIntegralStaysInConvexHull) {
    // The image of [0,1] under x -> (cos x, sin x) is an arc; its hull is the segment between arc and chord.
    const auto f = fn([](double x) { return vec({std::cos(x), std::sin(x)}); }, [](std::size_t) { return 1.0; });
    const auto r = bochner_integrate(MeasureSpace::interval01(), f, SeminormFamily::euclidean(2), 1e-6);
    const double c = r.value.coord(1), s = r.value.coord(2);
    EXPECT_NEAR(c, std::sin(1.0), 1e-6);
    EXPECT_NEAR(s, 1.0 - std::cos(1.0), 1e-6);
    EXPECT_LE(std::hypot(c, s), 1.0 + 1e-6);
    const double nx = std::cos(0.5), ny = std::sin(0.5);
    EXPECT_GE(c * nx + s * ny, std::cos(0.5) - 1e-6);
}

TEST(BochnerIntegrate, NotIntegrallyBoundedRejected) {
    const auto m = MeasureSpace::discrete(DiagonalSequence::parse("1/j^2"));
    const auto f = fn([](double x) { return vec({x}); });
    EXPECT_THROW(bochner_integrate(m, f, SeminormFamily::euclidean(1), 1e-6), Error);
}

TEST(Pushforward, IdentityHasZeroResidual) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 2});
    const auto fam = SeminormFamily::euclidean(2);
    const auto f = fn([](double x) { return x == 1.0 ? vec({1, 0}) : vec({0, 1}); });
    EXPECT_LE(pushforward_check(LinearMap::identity(), m, f, fam, fam, 1e-10), 1e-10);
}

TEST(Pushforward, CoordinateFunctional) {
    const auto f = fn([](double x) { return vec({x, x * x}); }, [](std::size_t) { return std::sqrt(2.0); });
    const double tol = 1e-6;
    EXPECT_LE(pushforward_check(LinearMap::coordinate(2), MeasureSpace::interval01(), f, SeminormFamily::euclidean(2),
                                SeminormFamily::euclidean(1), tol),
              2 * tol);
}

TEST(Pushforward, RotationOnDiscreteSpace) {
    const auto m = MeasureSpace::discrete(std::vector<double>{1, 2});
    const auto fam = SeminormFamily::euclidean(2);
    const auto f = fn([](double x) { return x == 1.0 ? vec({1, 0}) : vec({0, 1}); });
    Eigen::MatrixXd rot(2, 2);
    rot << 0, -1, 1, 0;
    EXPECT_LE(pushforward_check(LinearMap::matrix(rot), m, f, fam, fam, 1e-12), 1e-12);
}

TEST(Pushforward, EvaluationFunctional) {
    const auto m = MeasureSpace::discrete(std::vector<double>{0.5, 0.5});
    const auto fam = SeminormFamily::continuous_on_01();
    const auto f = fn([](double x) { return LcsVector::polynomial({0.0, x}); }, [](std::size_t) { return 2.0; });
    EXPECT_LE(pushforward_check(LinearMap::evaluation(0.5), m, f, fam, SeminormFamily::euclidean(1), 1e-10), 1e-10);
}

TEST(LinearMap, Validation) {
    EXPECT_THROW(LinearMap::coordinate(0), DomainError);
    EXPECT_THROW(LinearMap::evaluation(1.5), DomainError);
    EXPECT_THROW(LinearMap::matrix(Eigen::MatrixXd::Identity(2, 2))(vec({1, 2, 3})), DomainError);
}
