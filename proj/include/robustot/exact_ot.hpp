#pragma once

#include "robustot/problem.hpp"

#include <vector>

namespace robustot {

/// Nonnegative matrix together with the marginals it is meant to carry.
struct CouplingPlan {
    Matrix matrix;
    Vector row_marginal;
    Vector col_marginal;

    [[nodiscard]] double cost(const Matrix& costs) const { return matrix.cwiseProduct(costs).sum(); }

    /// max(|row sums - row_marginal|_inf, |col sums - col_marginal|_inf)
    [[nodiscard]] double marginal_error() const {
        const double r = (matrix.rowwise().sum() - row_marginal).cwiseAbs().maxCoeff();
        const double c = (matrix.colwise().sum().transpose() - col_marginal).cwiseAbs().maxCoeff();
        return std::max(r, c);
    }

    [[nodiscard]] Index nonzeros(double threshold = 1e-12) const {
        return (matrix.array() > threshold).count();
    }

    [[nodiscard]] bool feasible(double tol = 1e-9) const {
        return (matrix.array() >= 0).all() && marginal_error() <= tol;
    }
};

struct ExactOptions {
    /// Largest admitted number of transport cells (rows x cols); for the
    /// barycenter LP, candidates x total input support.
    Index cell_cap = 10'000;
    double pivot_tol = 1e-11;
};

struct ExactResult {
    double cost = 0.0;      ///< <plan, M>, i.e. distance^p
    double distance = 0.0;  ///< cost^(1/p)
    CouplingPlan plan;
    bool is_vertex = true;
    Index pivots = 0;
};

/// Transportation simplex on a dense cost matrix. Marginals are normalized
/// to unit mass before solving; the returned plan is a basic solution with
/// at most rows + cols - 1 nonzeros.
ExactResult exact_transport(const Vector& row_mass, const Vector& col_mass, const Matrix& costs,
                            const ExactOptions& opts = {}, double p = 1.0);

/// Robust Wasserstein distance W_p^(lambda)(a, b) by exact transport.
ExactResult exact_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& spec,
                           const ExactOptions& opts = {});

struct ExactBarycenter {
    DiscreteMeasure barycenter;  ///< mass on the candidate support (zeros kept)
    double objective = 0.0;      ///< sum_i w_i <plan_i, M_i>
    std::vector<CouplingPlan> plans;
    Index pivots = 0;
};

/// Barycenter over a fixed candidate support as one LP, jointly in the mass
/// vector and all n plans. Solved by the Bland-rule simplex, so the mass is
/// read off a vertex of the feasible polytope.
ExactBarycenter exact_barycenter_lp(const BarycenterProblem& problem, const Matrix& candidate_support,
                                    const ExactOptions& opts = {});

}  // namespace robustot
