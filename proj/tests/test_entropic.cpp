#include "robustot/entropic.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace robustot;
using robustot::testing::line_measure;
using robustot::testing::line_points;
using robustot::testing::random_measure;

namespace {

SinkhornParams sharp(double eps, std::optional<bool> log_domain = std::nullopt) {
    SinkhornParams p;
    p.epsilon = eps;
    p.log_domain = log_domain;
    return p;
}

}  // namespace

TEST(Sinkhorn, ParamsValidate) {
    SinkhornParams p;
    p.epsilon = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = {};
    p.max_iter = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = {};
    EXPECT_DOUBLE_EQ(p.absolute_epsilon(4.0), 0.02);
    EXPECT_TRUE(p.use_log_domain(4.0));
}

TEST(Sinkhorn, ForcedCouplingIsExact) {
    const auto res = sinkhorn_distance(line_measure({0}, {1}), line_measure({10}, {1}), CostSpec(1, 3), {});
    EXPECT_DOUBLE_EQ(res.distance, 3.0);
}

TEST(Sinkhorn, SelfDistanceIsSmall) {
    std::mt19937_64 rng(3);
    const auto a = random_measure(rng, 6, 2, 2.0);
    const CostSpec spec(1, 1.0);
    EXPECT_LT(sinkhorn_distance(a, a, spec, sharp(1e-3)).distance, 0.05 * spec.lambda);
}

TEST(Sinkhorn, TwoByTwoApproachesExact) {
    const auto a = line_measure({0, 2}, {0.5, 0.5});
    const auto b = line_measure({1, 3}, {0.5, 0.5});
    const auto res = sinkhorn_distance(a, b, CostSpec(1, 1.5), sharp(1e-3));
    EXPECT_NEAR(res.distance, 1.0, 0.01);
}

TEST(Sinkhorn, LogAndLinearDomainsAgree) {
    std::mt19937_64 rng(5);
    const auto a = random_measure(rng, 7, 2);
    const auto b = random_measure(rng, 5, 2);
    const CostSpec spec(2, 1.0);
    const auto lin = sinkhorn_distance(a, b, spec, sharp(0.05, false));
    const auto log = sinkhorn_distance(a, b, spec, sharp(0.05, true));
    EXPECT_NEAR(lin.cost, log.cost, 1e-7);
}

TEST(Sinkhorn, LinearDomainUnderflowIsReported) {
    const auto a = line_measure({0, 100}, {0.5, 0.5});
    const auto b = line_measure({50, 200}, {0.5, 0.5});
    EXPECT_THROW(sinkhorn_distance(a, b, CostSpec(2, kInf), sharp(1e-5, false)), SolverError);
    EXPECT_NO_THROW(sinkhorn_distance(a, b, CostSpec(2, kInf), sharp(1e-5, true)));
}

TEST(Sinkhorn, WithinOnePercentOfExact) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 15; ++t) {
        const auto a = random_measure(rng, 2 + t % 6, 2, 3.0);
        const auto b = random_measure(rng, 2 + (t * 5) % 7, 2, 3.0);
        const CostSpec spec(t % 2 ? 1.0 : 2.0, 1.0 + 0.3 * t);
        const double exact = exact_distance(a, b, spec).distance;
        const double ent = sinkhorn_distance(a, b, spec, sharp(1e-3, true)).distance;
        EXPECT_NEAR(ent, exact, 0.01 * exact + 1e-9);
    }
}

TEST(Rounding, ProducesFeasiblePlan) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const Index m = 1 + t % 5, n = 1 + t % 4;
        Matrix plan(m, n);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) plan(i, j) = (t % 3 == 0 && i == 0) ? 0.0 : u(rng);
        Vector row = Vector::NullaryExpr(m, [&](Index) { return u(rng) + 0.1; });
        Vector col = Vector::NullaryExpr(n, [&](Index) { return u(rng) + 0.1; });
        row /= row.sum();
        col /= col.sum();
        const auto rounded = round_to_feasible(plan, row, col);
        EXPECT_TRUE(rounded.feasible(1e-12));
    }
}

TEST(Ibp, SingleInputReturnsIt) {
    const auto mu = line_measure({0, 1, 2, 4}, {0.1, 0.4, 0.3, 0.2});
    const BarycenterProblem problem({mu}, CostSpec(2, kInf));
    const auto res = ibp_barycenter(problem, mu.points(), sharp(1e-3));
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR((res.mass - mu.weights()).lpNorm<1>(), 0.0, 1e-6);
}

TEST(Ibp, MirroredGaussiansGiveSymmetricMass) {
    const Index G = 41;
    const Matrix grid = Matrix(Eigen::RowVectorXd::LinSpaced(G, -4.0, 4.0));
    Vector left(G), right(G);
    for (Index k = 0; k < G; ++k) {
        left(k) = std::exp(-0.5 * std::pow(grid(0, k) + 1.5, 2) / 0.25);
        right(k) = std::exp(-0.5 * std::pow(grid(0, k) - 1.5, 2) / 0.25);
    }
    const BarycenterProblem problem({DiscreteMeasure(grid, left, true), DiscreteMeasure(grid, right, true)},
                                    CostSpec(2, kInf));
    const auto res = ibp_barycenter(problem, grid, sharp(5e-3));
    EXPECT_NEAR((res.mass - res.mass.reverse()).cwiseAbs().maxCoeff(), 0.0, 1e-6);
}

TEST(Ibp, TwoDiracsConcentrateAtMidpoint) {
    const BarycenterProblem problem({line_measure({0}, {1}), line_measure({1}, {1})}, CostSpec(2, kInf));
    SinkhornParams params = sharp(1e-3);
    params.relative = false;
    const auto res = ibp_barycenter(problem, line_points({0, 0.5, 1}), params);
    const auto pruned = prune(DiscreteMeasure(line_points({0, 0.5, 1}), res.mass, true), 1e-3);
    ASSERT_EQ(pruned.size(), 1);
    EXPECT_DOUBLE_EQ(pruned.points()(0, 0), 0.5);
    EXPECT_GT(res.mass(1), 0.99);
    const auto lp = exact_barycenter_lp(problem, line_points({0, 0.5, 1}));
    EXPECT_NEAR(res.objective, lp.objective, 1e-3);
}

TEST(Ibp, LogAndLinearDomainsAgree) {
    std::mt19937_64 rng(13);
    std::vector<DiscreteMeasure> inputs{random_measure(rng, 6, 1), random_measure(rng, 5, 1),
                                        random_measure(rng, 7, 1)};
    const BarycenterProblem problem(inputs, CostSpec(1, 0.8));
    const Matrix grid = Matrix(Eigen::RowVectorXd::LinSpaced(30, -1.0, 1.0));
    const auto lin = ibp_barycenter(problem, grid, sharp(0.05, false));
    const auto log = ibp_barycenter(problem, grid, sharp(0.05, true));
    EXPECT_NEAR((lin.mass - log.mass).lpNorm<1>(), 0.0, 1e-6);
}

TEST(Ibp, StabilizedPathSurvivesTinyEpsilon) {
    // Absolute epsilon 1e-3 against costs up to 50: only the absorbed kernel
    // keeps this finite.
    const BarycenterProblem problem({line_measure({0, 50}, {0.5, 0.5}), line_measure({1, 49}, {0.5, 0.5})},
                                    CostSpec(1, kInf));
    SinkhornParams params = sharp(1e-3, true);
    params.relative = false;
    const Matrix grid = Matrix(Eigen::RowVectorXd::LinSpaced(51, 0.0, 50.0));
    const auto res = ibp_barycenter(problem, grid, params);
    EXPECT_TRUE(res.mass.allFinite());
    EXPECT_NEAR(res.mass.sum(), 1.0, 1e-12);
    for (const auto& plan : res.plans) EXPECT_TRUE(plan.feasible(1e-9));
}

TEST(Ibp, ShapeValidation) {
    const BarycenterProblem problem({line_measure({0}, {1})}, CostSpec());
    EXPECT_THROW(ibp_barycenter(problem, Matrix(2, 3), {}), ValidationError);
    EXPECT_THROW(ibp_barycenter(problem, std::vector<Matrix>{}, {}), ValidationError);
}
