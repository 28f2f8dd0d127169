#pragma once

#include "robustot/entropic.hpp"
#include "robustot/exact_ot.hpp"

#include <cstdint>
#include <vector>

namespace robustot {

// ---------------------------------------------------------------------------
// Per-point support update
// ---------------------------------------------------------------------------

/// Weighted target points for one support location: g(z) = sum_k c_k *
/// min{|z - x_k|, lambda}^p. Targets are columns, in tie-break order.
struct PointTargets {
    Matrix points;
    Vector weights;
};

struct PointUpdate {
    Vector point;
    double value = 0.0;  ///< g at `point`
    Index iterations = 0;
};

/// Evaluates g(z).
double truncated_objective(const PointTargets& targets, const Eigen::Ref<const Vector>& z, const CostSpec& spec);

/// Majorize-minimize descent on g from `start`, for p in [1, 2].
///
/// Each step freezes saturated targets (distance >= lambda) at lambda^p and
/// minimizes the remaining convex sum: a weighted mean for p = 2, Weiszfeld
/// (reweighted mean) iterations otherwise, with an explicit optimality test
/// when the iterate sits on a target. With every target saturated the point
/// jumps to the heaviest target (lowest index on ties). Stops once the
/// active set is stable and the move is below 1e-10, or after 100 steps.
/// The returned value never exceeds g(start).
PointUpdate minimize_truncated(const PointTargets& targets, const Vector& start, const CostSpec& spec);

/// One application of the support map: every support point y_r moves to the
/// MM minimizer of sum_i w_i sum_s plan_i(r, s) [c(z, x_s^i)]^p started at
/// y_r. Rows carrying no mass stay put.
Matrix update_support(const Matrix& support, const std::vector<CouplingPlan>& plans,
                      const BarycenterProblem& problem);

/// Candidate locations: for every tuple of one support point per input, the
/// best MM minimizer of sum_i w_i [c(z, x^i)]^p over starts at each target
/// (heaviest first) and at the weighted mean. Near-duplicates within 1e-9
/// are merged. Throws CapExceeded when the tuple count exceeds `cap`.
Matrix candidate_supports(const BarycenterProblem& problem, Index cap = 100'000);

// ---------------------------------------------------------------------------
// Objective and outer loop
// ---------------------------------------------------------------------------

enum class ObjectiveMethod { exact, sinkhorn };

/// f(nu) = sum_i w_i <plan_i, M_i> with exact or entropic (rounded) plans.
double objective_f(const DiscreteMeasure& candidate, const BarycenterProblem& problem, ObjectiveMethod method,
                   const SinkhornParams& params = {}, const ExactOptions& exact = {});

enum class MassSolver { ibp, exact };

struct FreeSupportOptions {
    SinkhornParams sinkhorn;
    ExactOptions exact;
    MassSolver mass_solver = MassSolver::ibp;
    Index outer_max = 50;
    double outer_tol = 1e-6;
    double prune_threshold = 1e-12;
};

struct FreeSupportResult {
    DiscreteMeasure barycenter;
    /// Objective after each outer iteration. Exact mass solves record the
    /// exact f of the updated measure; IBP solves record the cost of the
    /// rounded (feasible) plans at the updated support, an upper bound on f.
    std::vector<double> objective_trace;
    Index outer_iterations = 0;
    bool converged = false;
};

FreeSupportResult free_support_barycenter(const BarycenterProblem& problem, const Matrix& init_support,
                                          const FreeSupportOptions& options = {});

/// R initial support points from weighted k-means over the pooled supports
/// (input i's atoms weighted by w_i q_s). Fewer points come back if the pool
/// has fewer distinct locations.
Matrix kmeans_init_support(const BarycenterProblem& problem, Index R, std::uint64_t seed);

}  // namespace robustot
