#include <netcalc/netcore.hpp>
#include <netcalc/linalg.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace netcalc;

namespace {

std::vector<std::pair<std::size_t, double>> chain(std::size_t n, const std::function<double(std::size_t)>& f) {
    std::vector<std::pair<std::size_t, double>> s;
    for (std::size_t i = 1; i <= n; ++i) s.emplace_back(i, f(i));
    return s;
}

auto abs_metric = [](double a, double b) { return std::abs(a - b); };

}  // namespace

TEST(DirectedSets, ChainJoinIsUpperBound) {
    for (std::size_t a = 0; a < 20; ++a)
        for (std::size_t b = 0; b < 20; ++b) {
            const ChainIndex j = join(ChainIndex{a}, ChainIndex{b});
            EXPECT_TRUE(leq(ChainIndex{a}, j));
            EXPECT_TRUE(leq(ChainIndex{b}, j));
        }
}

TEST(DirectedSets, SubsetJoinIsUnion) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        SubsetIndex a, b;
        for (int i = 0; i < 6; ++i) {
            if (rng.uniform() < 0.5) a.members.insert(static_cast<std::size_t>(rng.uniform(0, 12)));
            if (rng.uniform() < 0.5) b.members.insert(static_cast<std::size_t>(rng.uniform(0, 12)));
        }
        const SubsetIndex j = join(a, b);
        EXPECT_TRUE(leq(a, j));
        EXPECT_TRUE(leq(b, j));
        EXPECT_EQ(j.members.size(), DirectedTraits<SubsetIndex>::rank(j));
        for (std::size_t m : j.members) EXPECT_TRUE(a.members.count(m) || b.members.count(m));
    }
}

TEST(DirectedSets, SubspaceJoinContainsBoth) {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const SubspaceIndex a = SubspaceIndex::span(random_matrix(rng, 8, 2));
        const SubspaceIndex b = SubspaceIndex::span(random_matrix(rng, 8, 3));
        const SubspaceIndex j = join(a, b);
        EXPECT_TRUE(leq(a, j));
        EXPECT_TRUE(leq(b, j));
        EXPECT_EQ(j.dim(), 5);
    }
}

TEST(DirectedSets, SubspacesOfDifferentAmbientSpacesRejected) {
    Rng rng(1);
    const SubspaceIndex a = SubspaceIndex::span(random_matrix(rng, 4, 1));
    const SubspaceIndex b = SubspaceIndex::span(random_matrix(rng, 5, 1));
    EXPECT_THROW(join(a, b), DomainError);
}

TEST(ClassifyChain, GeometricSequenceConverges) {
    const auto r = classify_chain(chain(60, [](std::size_t n) { return 1.0 - std::ldexp(1.0, -int(n)); }), 1e-12, 1.0,
                                  abs_metric);
    EXPECT_EQ(r.verdict, Verdict::converged);
    ASSERT_TRUE(r.limit);
    EXPECT_NEAR(*r.limit, 1.0, 1e-12);
    EXPECT_LE(r.oscillation, 1e-12);
}

TEST(ClassifyChain, OscillationIsDivergence) {
    const auto r = classify_chain(chain(40, [](std::size_t n) { return n % 2 ? 1.0 : -1.0; }), 1e-6, 1.0, abs_metric);
    EXPECT_EQ(r.verdict, Verdict::diverged);
    ASSERT_TRUE(r.witness);
    EXPECT_GT(r.witness->distance, 1.0);
    EXPECT_FALSE(r.limit);
}

TEST(ClassifyChain, SlowDriftIsInconclusive) {
    const auto r = classify_chain(chain(50, [](std::size_t n) { return std::log(double(n)); }), 1e-6, 10.0, abs_metric);
    EXPECT_EQ(r.verdict, Verdict::inconclusive);
    EXPECT_FALSE(r.limit);
}

TEST(ClassifyChain, NonFiniteTailIsDivergence) {
    const auto r = classify_chain(chain(10, [](std::size_t n) { return n < 9 ? 0.0 : INFINITY; }), 1e-6, 1.0, abs_metric);
    EXPECT_EQ(r.verdict, Verdict::diverged);
}

TEST(ClassifyChain, NeedsThreeSamplesAndPositiveTolerances) {
    EXPECT_THROW(classify_chain(chain(2, [](std::size_t) { return 0.0; }), 1e-6, 1.0, abs_metric), DomainError);
    EXPECT_THROW(classify_chain(chain(5, [](std::size_t) { return 0.0; }), 0.0, 1.0, abs_metric), DomainError);
    EXPECT_THROW(classify_chain(chain(5, [](std::size_t) { return 0.0; }), 1e-6, -1.0, abs_metric), DomainError);
}

TEST(ClassifyChain, ConvergedLimitIsWithinTolOfStableWindow) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double c = rng.uniform(-5, 5), rate = rng.uniform(0.1, 0.9);
        const auto s = chain(80, [&](std::size_t n) { return c + std::pow(rate, double(n)); });
        const auto r = classify_chain(s, 1e-8, 1.0, abs_metric);
        if (r.verdict != Verdict::converged) continue;
        for (std::size_t i = r.stable_from; i < s.size(); ++i) EXPECT_LE(std::abs(s[i].second - *r.limit), 1e-8);
    }
}

TEST(ProbeConvergence, ChainNet) {
    const Net<ChainIndex, double> net = [](const ChainIndex& i) { return 1.0 / double(i.value); };
    const auto r = probe_convergence(net, chain_schedule(1, 2000000, 100000), 1e-6, 1.0);
    EXPECT_EQ(r.verdict, Verdict::converged);
    EXPECT_NEAR(*r.limit, 0.0, 1e-6);
}

TEST(ProbeConvergence, RejectsNonMonotoneSchedule) {
    const Net<ChainIndex, double> net = [](const ChainIndex& i) { return double(i.value); };
    EXPECT_THROW(probe_convergence(net, std::vector<ChainIndex>{{1}, {3}, {2}}, 1e-6, 1.0), DomainError);
}

TEST(ProbeConvergence, SubsetNetOfSeminormSums) {
    // Sum of 2^-m over a finite subset: the net over finite subsets converges to 1.
    const Net<SubsetIndex, double> net = [](const SubsetIndex& s) {
        double acc = 0.0;
        for (std::size_t m : s.members) acc += std::ldexp(1.0, -int(m));
        return acc;
    };
    std::vector<SubsetIndex> schedule;
    SubsetIndex cur;
    for (std::size_t m = 1; m <= 60; ++m) {
        cur.members.insert(m);
        schedule.push_back(cur);
    }
    const auto r = probe_convergence(net, schedule, 1e-12, 1.0);
    EXPECT_EQ(r.verdict, Verdict::converged);
    EXPECT_NEAR(*r.limit, 1.0, 1e-12);
}

TEST(Schedules, DoublingEndsAtLast) {
    const auto s = doubling_schedule(100);
    EXPECT_EQ(s.front().value, 1u);
    EXPECT_EQ(s.back().value, 100u);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) EXPECT_LT(s[i].value, s[i + 1].value);
}

TEST(DominatedSum, GeometricFamily) {
    const Dominator g{[](std::size_t k) { return std::ldexp(1.0, -int(k)); },
                      [](std::size_t k) { return std::ldexp(1.0, -int(k)); }};
    const auto r = dominated_net_sum([](double a, std::size_t k) { return Scalar((1.0 - 1.0 / a) * std::ldexp(1.0, -int(k))); },
                                     g, 1e-8);
    EXPECT_NEAR(r.value.real(), 1.0, 1e-8);
    EXPECT_LT(std::ldexp(1.0, -int(r.k0)), 1e-8 / 4);
}

TEST(DominatedSum, ViolationNamesAlphaAndK) {
    const Dominator g{[](std::size_t k) { return std::ldexp(1.0, -int(k)); },
                      [](std::size_t k) { return std::ldexp(1.0, -int(k)); }};
    try {
        dominated_net_sum([](double a, std::size_t k) { return Scalar(k == 3 && a >= 8 ? 1.0 : 0.0); }, g, 1e-6);
        FAIL() << "domination violation not detected";
    } catch (const DominationError& e) {
        EXPECT_EQ(e.k(), 3u);
        EXPECT_EQ(e.alpha(), 8.0);
    }
}

TEST(DominatedSum, MissingTailBoundRejected) {
    const Dominator g{[](std::size_t k) { return 1.0 / double(k * k); }, {}};
    EXPECT_THROW(dominated_net_sum([](double, std::size_t) { return Scalar(0.0); }, g, 1e-6), DomainError);
}

TEST(ProbeConvergence, NullSequenceAtCoarseTolerance) {
    const Net<ChainIndex, double> net = [](const ChainIndex& i) { return 1.0 / double(i.value); };
    const auto r = probe_convergence(net, chain_schedule(1, 100), 1e-1, 1.0);
    EXPECT_EQ(r.verdict, Verdict::converged);
    EXPECT_NEAR(*r.limit, 0.0, 1e-1);
}

TEST(ProbeConvergence, ConstantNet) {
    const Net<ChainIndex, double> net = [](const ChainIndex&) { return 7.0; };
    const auto r = probe_convergence(net, chain_schedule(1, 20), 1e-12, 1.0);
    EXPECT_EQ(r.verdict, Verdict::converged);
    EXPECT_EQ(*r.limit, 7.0);
    EXPECT_EQ(r.oscillation, 0.0);
}

TEST(ProbeConvergence, OddHarmonicPartialSumsDiverge) {
    const Net<ChainIndex, double> net = [](const ChainIndex& i) {
        double s = 0.0;
        for (std::size_t k = 1; k <= i.value; k += 2) s += 1.0 / double(k);
        return s;
    };
    const auto r = probe_convergence(net, doubling_schedule(1 << 20), 1e-3, 1.0);
    EXPECT_EQ(r.verdict, Verdict::diverged);
    ASSERT_TRUE(r.witness);
    EXPECT_LT(r.samples[r.witness->first].first, r.samples[r.witness->second].first);
}

TEST(DirectedSets, JoinIsIdempotentOnComparablePairs) {
    SubsetIndex small{{1, 4}}, big{{1, 2, 4, 9}};
    ASSERT_TRUE(leq(small, big));
    EXPECT_EQ(join(small, big), big);
    EXPECT_EQ(join(ChainIndex{3}, ChainIndex{5}), ChainIndex{5});
    EXPECT_EQ(join(SubsetIndex{{1}}, SubsetIndex{{2}}), (SubsetIndex{{1, 2}}));
}

TEST(DominatedSum, SpecFamilies) {
    const Dominator twice{[](std::size_t k) { return std::ldexp(1.0, 1 - int(k)); },
                          [](std::size_t k) { return std::ldexp(1.0, 1 - int(k)); }};
    const auto a = dominated_net_sum(
        [](double al, std::size_t k) { return Scalar((1.0 + 1.0 / al) * std::ldexp(1.0, -int(k))); }, twice, 1e-8);
    EXPECT_NEAR(a.value.real(), 1.0, 1e-8);

    const auto z = dominated_net_sum([](double, std::size_t) { return Scalar(0.0); }, twice, 1e-8);
    EXPECT_EQ(z.value, Scalar(0.0));

    const Dominator g{[](std::size_t k) { return std::ldexp(1.0, -int(k)); },
                      [](std::size_t k) { return std::ldexp(1.0, -int(k)); }};
    const auto v = dominated_net_sum(
        [](double al, std::size_t k) { return Scalar(std::ldexp(1.0, -int(k)) * double(k) / (double(k) + al)); }, g, 1e-8);
    EXPECT_NEAR(v.value.real(), 0.0, 1e-8);
}
