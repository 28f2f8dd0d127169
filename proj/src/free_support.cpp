#include "robustot/free_support.hpp"

#include "robustot/kmeans.hpp"

#include <cmath>
#include <numeric>

namespace robustot {

namespace {

constexpr double kCoincident = 1e-12;
constexpr double kMoveTol = 1e-10;
constexpr Index kMaxSteps = 100;

// h(z) = sum over `active` of c_k |z - x_k|^p
double active_objective(const PointTargets& t, const std::vector<Index>& active, const Vector& z, double p) {
    double h = 0.0;
    for (const Index k : active) {
        const double d = (t.points.col(k) - z).norm();
        h += t.weights(k) * (p == 2.0 ? d * d : std::pow(d, p));
    }
    return h;
}

Vector weighted_mean(const PointTargets& t, const std::vector<Index>& idx) {
    Vector acc = Vector::Zero(t.points.rows());
    double mass = 0.0;
    for (const Index k : idx) {
        acc += t.weights(k) * t.points.col(k);
        mass += t.weights(k);
    }
    return acc / mass;
}

// Minimizes the convex surrogate over the active targets starting at z.
Vector minimize_active(const PointTargets& t, const std::vector<Index>& active, Vector z, double p) {
    if (p == 2.0) return weighted_mean(t, active);

    double h = active_objective(t, active, z, p);
    for (Index inner = 0; inner < kMaxSteps; ++inner) {
        Vector num = Vector::Zero(z.size());
        double den = 0.0;
        double pinned = 0.0;
        Vector grad = Vector::Zero(z.size());
        for (const Index k : active) {
            const double d = (t.points.col(k) - z).norm();
            if (d < kCoincident) {
                pinned += t.weights(k);
                continue;
            }
            const double omega = t.weights(k) * std::pow(d, p - 2.0);
            num += omega * t.points.col(k);
            den += omega;
            grad += p * omega * (z - t.points.col(k));
        }
        if (den == 0.0) return z;  // every active target coincides with z

        Vector next = num / den;
        if (pinned > 0.0) {
            // z sits on a target. For p = 1 the subgradient of that term
            // covers a ball of radius (its weight); for p > 1 it is zero.
            const double slack = p == 1.0 ? pinned : 0.0;
            if (grad.norm() <= slack * (1.0 + 1e-12) + 1e-15) return z;
            double step = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
                const Vector trial = z + step * (next - z);
                const double ht = active_objective(t, active, trial, p);
                if (ht < h) {
                    next = trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) return z;
        }
        const double h_next = active_objective(t, active, next, p);
        if (h_next > h) return z;
        const double move = (next - z).norm();
        z = std::move(next);
        h = h_next;
        if (move < kMoveTol) break;
    }
    return z;
}

std::vector<Index> active_set(const PointTargets& t, const Vector& z, double lambda) {
    std::vector<Index> out;
    for (Index k = 0; k < t.points.cols(); ++k)
        if (t.weights(k) > 0 && (t.points.col(k) - z).norm() < lambda) out.push_back(k);
    return out;
}

}  // namespace

double truncated_objective(const PointTargets& targets, const Eigen::Ref<const Vector>& z, const CostSpec& spec) {
    double g = 0.0;
    for (Index k = 0; k < targets.points.cols(); ++k)
        g += targets.weights(k) * spec.apply((targets.points.col(k) - z).norm());
    return g;
}

PointUpdate minimize_truncated(const PointTargets& targets, const Vector& start, const CostSpec& spec) {
    spec.validate();
    if (spec.p > 2.0) throw ValidationError("support update supports p in [1, 2]");
    if (targets.points.cols() != targets.weights.size())
        throw ValidationError("minimize_truncated: one weight per target required");
    if (targets.points.rows() != start.size()) throw ValidationError("minimize_truncated: dimension mismatch");

    PointUpdate out{start, truncated_objective(targets, start, spec), 0};
    if (targets.points.cols() == 0 || !(targets.weights.sum() > 0)) return out;

    std::vector<Index> active = active_set(targets, out.point, spec.lambda);
    for (out.iterations = 1; out.iterations <= kMaxSteps; ++out.iterations) {
        Vector next;
        if (active.empty()) {
            Index heaviest = 0;
            targets.weights.maxCoeff(&heaviest);
            next = targets.points.col(heaviest);
        } else {
            next = minimize_active(targets, active, out.point, spec.p);
        }
        const double value = truncated_objective(targets, next, spec);
        if (value > out.value) break;
        const double move = (next - out.point).norm();
        out.point = std::move(next);
        out.value = value;
        std::vector<Index> next_active = active_set(targets, out.point, spec.lambda);
        const bool stable = next_active == active;
        active = std::move(next_active);
        if (stable && move < kMoveTol) break;
    }
    out.iterations = std::min(out.iterations, kMaxSteps);
    return out;
}

Matrix update_support(const Matrix& support, const std::vector<CouplingPlan>& plans,
                      const BarycenterProblem& problem) {
    const auto n = static_cast<std::size_t>(problem.count());
    if (plans.size() != n) throw ValidationError("update_support: one plan per input required");
    if (support.rows() != problem.dim()) throw ValidationError("update_support: dimension mismatch");
    const Index R = support.cols();
    for (std::size_t i = 0; i < n; ++i) {
        if (plans[i].matrix.rows() != R || plans[i].matrix.cols() != problem.inputs[i].size())
            throw ValidationError("update_support: plan shape mismatch");
    }

    Matrix out = support;
    for (Index r = 0; r < R; ++r) {
        Index count = 0;
        for (std::size_t i = 0; i < n; ++i) count += (plans[i].matrix.row(r).array() > 0).count();
        if (count == 0) continue;

        PointTargets targets{Matrix(problem.dim(), count), Vector(count)};
        Index k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mu = problem.inputs[i];
            for (Index s = 0; s < mu.size(); ++s) {
                const double pi = plans[i].matrix(r, s);
                if (!(pi > 0)) continue;
                targets.points.col(k) = mu.point(s);
                targets.weights(k) = problem.weights(static_cast<Index>(i)) * pi;
                ++k;
            }
        }
        if (!(targets.weights.sum() > 0)) continue;
        out.col(r) = minimize_truncated(targets, support.col(r), problem.spec).point;
    }
    return out;
}

Matrix candidate_supports(const BarycenterProblem& problem, Index cap) {
    const auto n = static_cast<std::size_t>(problem.count());
    double tuples = 1.0;
    for (const auto& mu : problem.inputs) tuples *= static_cast<double>(mu.size());
    if (tuples > static_cast<double>(cap)) {
        throw CapExceeded("candidate_supports: " + std::to_string(static_cast<long long>(tuples)) +
                          " tuples exceed cap " + std::to_string(cap));
    }

    // Heaviest input first; stable so equal weights keep input order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return problem.weights(static_cast<Index>(a)) >
                                                                problem.weights(static_cast<Index>(b)); });

    std::vector<Vector> found;
    std::vector<Index> digit(n, 0);
    PointTargets targets{Matrix(problem.dim(), static_cast<Index>(n)), Vector(static_cast<Index>(n))};
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto i = order[j];
            targets.points.col(static_cast<Index>(j)) = problem.inputs[i].point(digit[i]);
            targets.weights(static_cast<Index>(j)) = problem.weights(static_cast<Index>(i));
        }
        std::vector<Vector> starts;
        for (Index j = 0; j < static_cast<Index>(n); ++j)
            if (targets.weights(j) > 0) starts.emplace_back(targets.points.col(j));
        starts.push_back(targets.points * targets.weights / targets.weights.sum());

        PointUpdate best = minimize_truncated(targets, starts.front(), problem.spec);
        for (std::size_t k = 1; k < starts.size(); ++k) {
            auto cand = minimize_truncated(targets, starts[k], problem.spec);
            if (cand.value < best.value - 1e-12 * std::max(1.0, std::abs(best.value))) best = std::move(cand);
        }
        found.push_back(std::move(best.point));

        std::size_t pos = 0;
        while (pos < n && ++digit[pos] == problem.inputs[pos].size()) digit[pos++] = 0;
        if (pos == n) break;
    }
    return stack_columns(dedupe_points(found, 1e-9));
}

double objective_f(const DiscreteMeasure& candidate, const BarycenterProblem& problem, ObjectiveMethod method,
                   const SinkhornParams& params, const ExactOptions& exact) {
    if (candidate.dim() != problem.dim()) throw ValidationError("objective_f: dimension mismatch");
    double f = 0.0;
    for (Index i = 0; i < problem.count(); ++i) {
        const auto& mu = problem.inputs[static_cast<std::size_t>(i)];
        const double cost = method == ObjectiveMethod::exact ? exact_distance(candidate, mu, problem.spec, exact).cost
                                                             : sinkhorn_distance(candidate, mu, problem.spec, params).cost;
        f += problem.weights(i) * cost;
    }
    return f;
}

namespace {

struct MassStep {
    Vector mass;
    std::vector<CouplingPlan> plans;
    double objective = 0.0;
};

std::vector<Matrix> support_costs(const BarycenterProblem& problem, const Matrix& support) {
    std::vector<Matrix> costs;
    costs.reserve(problem.inputs.size());
    for (const auto& mu : problem.inputs) costs.push_back(cost_matrix(support, mu.points(), problem.spec).entries);
    return costs;
}

double plans_cost(const BarycenterProblem& problem, const std::vector<CouplingPlan>& plans,
                  const std::vector<Matrix>& costs) {
    double f = 0.0;
    for (std::size_t i = 0; i < plans.size(); ++i) f += problem.weights(static_cast<Index>(i)) * plans[i].cost(costs[i]);
    return f;
}

}  // namespace

FreeSupportResult free_support_barycenter(const BarycenterProblem& problem, const Matrix& init_support,
                                          const FreeSupportOptions& options) {
    if (init_support.cols() < 1) throw ValidationError("free support needs R >= 1 initial points");
    if (init_support.rows() != problem.dim()) throw ValidationError("initial support dimension mismatch");
    if (!(options.outer_tol > 0)) throw ValidationError("outer_tol must be > 0");
    if (options.outer_max < 1) throw ValidationError("outer_max must be >= 1");
    if (problem.spec.p > 2.0) throw ValidationError("free support supports p in [1, 2]");

    Matrix support = init_support;
    std::optional<MassStep> previous;
    FreeSupportResult out{DiscreteMeasure::dirac(init_support.col(0)), {}, 0, false};
    Vector mass;

    for (out.outer_iterations = 1; out.outer_iterations <= options.outer_max; ++out.outer_iterations) {
        const auto costs = support_costs(problem, support);
        MassStep step;
        if (options.mass_solver == MassSolver::exact) {
            auto lp = exact_barycenter_lp(problem, support, options.exact);
            step = {lp.barycenter.weights(), std::move(lp.plans), lp.objective};
        } else {
            auto ibp = ibp_barycenter(problem, costs, options.sinkhorn);
            step = {std::move(ibp.mass), std::move(ibp.plans), ibp.objective};
        }
        // Plans do not depend on the support, so the previous couplings stay
        // feasible here; keep them when the new mass solve is worse.
        if (previous) {
            const double carried = plans_cost(problem, previous->plans, costs);
            if (carried < step.objective) step = {previous->mass, previous->plans, carried};
        }

        const Matrix moved = update_support(support, step.plans, problem);
        double f = 0.0;
        if (options.mass_solver == MassSolver::exact) {
            const DiscreteMeasure nu(moved, step.mass, true);
            f = objective_f(nu, problem, ObjectiveMethod::exact, options.sinkhorn, options.exact);
        } else {
            f = plans_cost(problem, step.plans, support_costs(problem, moved));
        }

        support = moved;
        mass = step.mass;
        step.objective = f;
        previous = std::move(step);
        out.objective_trace.push_back(f);

        if (f <= 0.0) {
            out.converged = true;
            break;
        }
        if (out.objective_trace.size() >= 2) {
            const double before = out.objective_trace[out.objective_trace.size() - 2];
            if (before - f <= options.outer_tol * std::max(before, 1e-300)) {
                out.converged = true;
                break;
            }
        }
    }
    out.outer_iterations = std::min(out.outer_iterations, options.outer_max);
    out.barycenter = prune(DiscreteMeasure(support, mass, true), options.prune_threshold);
    return out;
}

Matrix kmeans_init_support(const BarycenterProblem& problem, Index R, std::uint64_t seed) {
    if (R < 1) throw ValidationError("R must be >= 1");
    const Index total = problem.total_support();
    Matrix pooled(problem.dim(), total);
    Vector weight(total);
    Index k = 0;
    for (Index i = 0; i < problem.count(); ++i) {
        const auto& mu = problem.inputs[static_cast<std::size_t>(i)];
        const double wsum = mu.weights().sum();
        for (Index s = 0; s < mu.size(); ++s, ++k) {
            pooled.col(k) = mu.point(s);
            weight(k) = problem.weights(i) * mu.weight(s) / wsum;
        }
    }
    return kmeans(pooled, weight, R, seed).centers;
}

}  // namespace robustot
