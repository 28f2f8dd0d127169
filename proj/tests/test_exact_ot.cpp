#include "robustot/exact_ot.hpp"
#include "robustot/simplex.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace robustot;
using robustot::testing::line_measure;
using robustot::testing::line_points;
using robustot::testing::random_measure;

namespace {

// Transport problem written out as a generic equality LP.
double transport_by_lp(const Vector& a, const Vector& b, const Matrix& C) {
    const Index m = a.size();
    const Index n = b.size();
    LinearProgram lp;
    lp.A = Matrix::Zero(m + n, m * n);
    lp.b.resize(m + n);
    lp.c.resize(m * n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
            lp.A(i, i * n + j) = 1.0;
            lp.A(m + j, i * n + j) = 1.0;
            lp.c(i * n + j) = C(i, j);
        }
    lp.b << a / a.sum(), b / b.sum();
    const auto sol = solve_lp(lp);
    EXPECT_EQ(sol.status, LpStatus::optimal);
    return sol.objective;
}

// Closed-form quantile coupling for untruncated 1-D transport.
double quantile_cost(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
    auto atoms = [](const DiscreteMeasure& m) {
        std::vector<std::pair<double, double>> v;
        for (Index i = 0; i < m.size(); ++i) v.emplace_back(m.points()(0, i), m.weight(i));
        std::sort(v.begin(), v.end());
        return v;
    };
    auto xa = atoms(a), xb = atoms(b);
    std::size_t i = 0, j = 0;
    double cost = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double t = std::min(xa[i].second, xb[j].second);
        cost += t * std::pow(std::abs(xa[i].first - xb[j].first), p);
        xa[i].second -= t;
        xb[j].second -= t;
        if (xa[i].second <= 1e-15) ++i;
        if (j < xb.size() && xb[j].second <= 1e-15) ++j;
    }
    return cost;
}

}  // namespace

TEST(Simplex, SmallKnownOptimum) {
    // min -x1 - 2 x2  s.t. x1 + x2 + s1 = 4, x2 + s2 = 3
    LinearProgram lp;
    lp.A.resize(2, 4);
    lp.A << 1, 1, 1, 0, 0, 1, 0, 1;
    lp.b.resize(2);
    lp.b << 4, 3;
    lp.c.resize(4);
    lp.c << -1, -2, 0, 0;
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, -7.0, 1e-12);
    EXPECT_NEAR(sol.x(0), 1.0, 1e-12);
    EXPECT_NEAR(sol.x(1), 3.0, 1e-12);
}

TEST(Simplex, InfeasibleAndUnbounded) {
    LinearProgram infeasible;
    infeasible.A.resize(2, 2);
    infeasible.A << 1, 1, 1, 1;
    infeasible.b.resize(2);
    infeasible.b << 1, 2;
    infeasible.c = Vector::Ones(2);
    EXPECT_EQ(solve_lp(infeasible).status, LpStatus::infeasible);

    LinearProgram unbounded;
    unbounded.A.resize(1, 2);
    unbounded.A << 1, -1;
    unbounded.b = Vector::Ones(1);
    unbounded.c.resize(2);
    unbounded.c << -1, 0;
    EXPECT_EQ(solve_lp(unbounded).status, LpStatus::unbounded);
}

TEST(Simplex, RedundantRowsAreHandled) {
    LinearProgram lp;
    lp.A.resize(3, 3);
    lp.A << 1, 1, 1, 2, 2, 2, 1, 0, 0;
    lp.b.resize(3);
    lp.b << 1, 2, 0.25;
    lp.c.resize(3);
    lp.c << 0, 1, 2;
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, 0.75, 1e-12);
    EXPECT_LE((sol.x.array() > 1e-12).count(), 2);
}

TEST(ExactDistance, ForcedCouplings) {
    const auto d0 = line_measure({0}, {1});
    const auto d10 = line_measure({10}, {1});
    EXPECT_DOUBLE_EQ(exact_distance(d0, d10, CostSpec(1, 3)).distance, 3.0);

    const auto mix = line_measure({0, 10}, {0.5, 0.5});
    const auto res = exact_distance(mix, d0, CostSpec(2, 3));
    EXPECT_NEAR(res.cost, 4.5, 1e-12);
    EXPECT_NEAR(res.distance, std::sqrt(4.5), 1e-12);
}

TEST(ExactDistance, TwoByTwoMatchesEnumeration) {
    const auto a = line_measure({0, 2}, {0.5, 0.5});
    const auto b = line_measure({1, 3}, {0.5, 0.5});
    const CostSpec spec(1, 1.5);
    const auto res = exact_distance(a, b, spec);
    // One-parameter family pi = [[t, .5-t], [.5-t, t]], cost linear in t.
    const Matrix C = cost_matrix(a, b, spec).entries;
    auto cost_at = [&](double t) { return t * C(0, 0) + (0.5 - t) * (C(0, 1) + C(1, 0)) + t * C(1, 1); };
    EXPECT_NEAR(res.distance, std::min(cost_at(0.0), cost_at(0.5)), 1e-12);
    EXPECT_NEAR(res.distance, 1.0, 1e-12);
    EXPECT_NEAR(res.plan.matrix(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(res.plan.matrix(1, 1), 0.5, 1e-12);
}

TEST(ExactDistance, RandomTwoByTwoEnumeration) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_measure(rng, 2, 2, 2.0);
        const auto b = random_measure(rng, 2, 2, 2.0);
        const CostSpec spec(t % 2 ? 1.0 : 2.0, t % 3 ? 1.0 : kInf);
        const Matrix C = cost_matrix(a, b, spec).entries;
        const double lo = std::max(0.0, b.weight(0) - a.weight(1));
        const double hi = std::min(a.weight(0), b.weight(0));
        auto cost_at = [&](double x) {
            return x * C(0, 0) + (a.weight(0) - x) * C(0, 1) + (b.weight(0) - x) * C(1, 0) +
                   (a.weight(1) - b.weight(0) + x) * C(1, 1);
        };
        EXPECT_NEAR(exact_distance(a, b, spec).cost, std::min(cost_at(lo), cost_at(hi)), 1e-12);
    }
}

TEST(ExactDistance, AgreesWithDenseLp) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 60; ++t) {
        const Index m = 1 + t % 7;
        const Index n = 1 + (t * 3) % 8;
        const auto a = random_measure(rng, m, 2, 3.0);
        const auto b = random_measure(rng, n, 2, 3.0);
        const CostSpec spec(t % 2 ? 1.0 : 2.0, (t % 3 == 0) ? kInf : 0.5 + 0.1 * t);
        const Matrix C = cost_matrix(a, b, spec).entries;
        const auto res = exact_transport(a.weights(), b.weights(), C, {}, spec.p);
        EXPECT_NEAR(res.cost, transport_by_lp(a.weights(), b.weights(), C), 1e-9);
        EXPECT_TRUE(res.plan.feasible(1e-9));
        EXPECT_LE(res.plan.nonzeros(), m + n - 1);
    }
}

TEST(ExactDistance, AgreesWithQuantileCouplingInOneDimension) {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 40; ++t) {
        const auto a = random_measure(rng, 3 + t % 6, 1, 5.0);
        const auto b = random_measure(rng, 2 + t % 5, 1, 5.0);
        for (double p : {1.0, 2.0}) {
            EXPECT_NEAR(exact_distance(a, b, CostSpec(p, kInf)).cost, quantile_cost(a, b, p), 1e-9);
        }
    }
}

TEST(ExactDistance, MetricProperties) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 30; ++t) {
        const auto a = random_measure(rng, 4, 2);
        const auto b = random_measure(rng, 5, 2);
        const auto c = random_measure(rng, 3, 2);
        const CostSpec spec(t % 2 ? 1.0 : 2.0, t % 3 ? 0.7 : kInf);
        const double ab = exact_distance(a, b, spec).distance;
        EXPECT_NEAR(ab, exact_distance(b, a, spec).distance, 1e-12);
        EXPECT_LE(ab, exact_distance(a, c, spec).distance + exact_distance(c, b, spec).distance + 1e-9);
        EXPECT_NEAR(exact_distance(a, a, spec).distance, 0.0, 1e-12);
        if (spec.truncated()) EXPECT_LE(ab, spec.lambda + 1e-12);
    }
}

TEST(ExactDistance, SaturationAndMonotonicity) {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_measure(rng, 5, 2);
        const auto b = random_measure(rng, 4, 2);
        const double diam = 2.0 * std::sqrt(2.0);
        EXPECT_NEAR(exact_distance(a, b, CostSpec(1, diam)).distance, exact_distance(a, b, CostSpec(1, kInf)).distance,
                    1e-12);
        double prev = 0.0;
        for (double lam : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0}) {
            const double d = exact_distance(a, b, CostSpec(2, lam)).distance;
            EXPECT_GE(d + 1e-12, prev);
            prev = d;
        }
    }
}

TEST(ExactDistance, TranslationInvariance) {
    std::mt19937_64 rng(41);
    const auto a = random_measure(rng, 6, 3);
    const auto b = random_measure(rng, 5, 3);
    const Vector shift = (Vector(3) << 10.0, -4.0, 0.5).finished();
    const CostSpec spec(1, 0.8);
    EXPECT_NEAR(exact_distance(a, b, spec).distance, exact_distance(a.shifted(shift), b.shifted(shift), spec).distance,
                1e-9);
}

TEST(ExactDistance, CellCap) {
    std::mt19937_64 rng(1);
    const auto a = random_measure(rng, 50, 1);
    const auto b = random_measure(rng, 50, 1);
    ExactOptions opts;
    opts.cell_cap = 100;
    EXPECT_THROW(exact_distance(a, b, CostSpec(), opts), CapExceeded);
}

TEST(ExactBarycenter, SingleInputIsItself) {
    const auto mu = line_measure({0, 1, 3}, {0.2, 0.5, 0.3});
    const BarycenterProblem problem({mu}, CostSpec(2, kInf));
    const auto res = exact_barycenter_lp(problem, mu.points());
    EXPECT_NEAR(res.objective, 0.0, 1e-12);
    EXPECT_TRUE(res.barycenter.weights().isApprox(mu.weights(), 1e-12));
}

TEST(ExactBarycenter, MidpointOfTwoDiracs) {
    const BarycenterProblem problem({line_measure({0}, {1}), line_measure({1}, {1})}, CostSpec(2, kInf));
    const auto res = exact_barycenter_lp(problem, line_points({0, 0.5, 1}));
    EXPECT_NEAR(res.objective, 0.25, 1e-12);
    EXPECT_NEAR(res.barycenter.weight(1), 1.0, 1e-12);
}

TEST(ExactBarycenter, FullySaturatedObjective) {
    const BarycenterProblem problem({line_measure({0}, {1}), line_measure({1}, {1})}, CostSpec(1, 0.2));
    const auto res = exact_barycenter_lp(problem, line_points({0, 0.5, 1}));
    EXPECT_NEAR(res.objective, 0.1, 1e-12);
    // No single candidate does better.
    for (Index r = 0; r < 3; ++r) {
        double f = 0.0;
        for (double x : {0.0, 1.0}) f += 0.5 * std::min(std::abs(x - 0.5 * r), 0.2);
        EXPECT_GE(f + 1e-12, res.objective);
    }
}

TEST(ExactBarycenter, PlansAreFeasible) {
    std::mt19937_64 rng(43);
    std::vector<DiscreteMeasure> inputs{random_measure(rng, 3, 2), random_measure(rng, 2, 2),
                                        random_measure(rng, 3, 2)};
    const BarycenterProblem problem(inputs, CostSpec(1, 0.9));
    Matrix candidates(2, 8);
    candidates = Matrix::Random(2, 8);
    const auto res = exact_barycenter_lp(problem, candidates);
    double f = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        EXPECT_TRUE(res.plans[i].feasible(1e-9));
        EXPECT_TRUE(res.plans[i].row_marginal.isApprox(res.barycenter.weights(), 1e-9));
        f += problem.weights(static_cast<Index>(i)) *
             res.plans[i].cost(cost_matrix(candidates, inputs[i].points(), problem.spec).entries);
    }
    EXPECT_NEAR(f, res.objective, 1e-9);
}
