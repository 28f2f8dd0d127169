#pragma once

#include "robustot/exact_ot.hpp"

#include <optional>
#include <vector>

namespace robustot {

struct SinkhornParams {
    /// Entropic regularization. When `relative` is set it is a multiple of the
    /// cost scale: lambda^p for truncated costs, the largest cost entry when
    /// lambda is infinite.
    double epsilon = 5e-3;
    bool relative = true;
    Index max_iter = 10'000;
    double tol = 1e-8;
    /// nullopt picks log-domain whenever epsilon / scale < 1e-2.
    std::optional<bool> log_domain;

    void validate() const {
        if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
        if (!(tol > 0)) throw ValidationError("tolerance must be > 0");
        if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
    }

    /// Absolute epsilon for a problem whose costs are bounded by `scale`.
    [[nodiscard]] double absolute_epsilon(double scale) const {
        return relative ? epsilon * (scale > 0 ? scale : 1.0) : epsilon;
    }

    [[nodiscard]] bool use_log_domain(double scale) const {
        if (log_domain) return *log_domain;
        return absolute_epsilon(scale) / (scale > 0 ? scale : 1.0) < 1e-2;
    }
};

/// Cost scale used to resolve relative epsilon.
double cost_scale(const CostSpec& spec, const Matrix& costs);

struct SinkhornResult {
    double distance = 0.0;  ///< <plan, M>^(1/p) over the rounded plan
    double cost = 0.0;
    CouplingPlan plan;
    Index iterations = 0;
    double marginal_error = 0.0;  ///< L1 violation before rounding
    bool converged = false;
};

/// Projects a nonnegative matrix onto the couplings of (row, col): rows are
/// rescaled to match exactly, then column surplus is moved, row by row, to
/// the deficit columns in proportion to their deficit. Both marginals must
/// have equal total mass.
CouplingPlan round_to_feasible(const Matrix& plan, const Vector& row, const Vector& col);

/// Sinkhorn scaling on a precomputed cost matrix.
SinkhornResult sinkhorn(const Vector& a, const Vector& b, const Matrix& costs, double epsilon,
                        const SinkhornParams& params, bool log_domain, double p = 1.0);

/// Entropic robust Wasserstein distance.
SinkhornResult sinkhorn_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& spec,
                                 const SinkhornParams& params = {});

struct FixedSupportResult {
    Vector mass;       ///< barycenter weights on the given support, sums to 1
    double objective;  ///< sum_i w_i <plan_i, M_i> over rounded plans, no entropy
    Index iterations = 0;
    double marginal_error = 0.0;  ///< max L1 row-marginal violation before rounding
    bool converged = false;
    std::vector<CouplingPlan> plans;  ///< rounded, support x input
};

/// Iterative Bregman projections for the fixed-support barycenter.
FixedSupportResult ibp_barycenter(const BarycenterProblem& problem, const Matrix& support,
                                  const SinkhornParams& params = {});

/// Same, with the cost matrices (support x input) already built.
FixedSupportResult ibp_barycenter(const BarycenterProblem& problem, const std::vector<Matrix>& costs,
                                  const SinkhornParams& params);

}  // namespace robustot
