#include "robustot/entropic.hpp"

#include <cmath>
#include <limits>

namespace robustot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr Index kCheckEvery = 10;

using Array = Eigen::ArrayXd;
using Array2 = Eigen::ArrayXXd;

// log(sum_r exp(F_r - X_rs)) for every column s.
Array col_logsumexp(const Array2& X, const Array& F) {
    Array out(X.cols());
    for (Index s = 0; s < X.cols(); ++s) {
        const Array t = F - X.col(s);
        const double mx = t.maxCoeff();
        out(s) = std::isfinite(mx) ? mx + std::log((t - mx).exp().sum()) : mx;
    }
    return out;
}

// log(sum_s exp(G_s - X_rs)) for every row r.
Array row_logsumexp(const Array2& X, const Array& G) {
    Array2 t = (-X).rowwise() + G.transpose();
    Array mx = t.rowwise().maxCoeff();
    Array out(X.rows());
    for (Index r = 0; r < X.rows(); ++r) {
        out(r) = std::isfinite(mx(r)) ? mx(r) + std::log((t.row(r) - mx(r)).exp().sum()) : mx(r);
    }
    return out;
}

Array safe_log(const Vector& w) {
    Array out(w.size());
    for (Index k = 0; k < w.size(); ++k) out(k) = w(k) > 0 ? std::log(w(k)) : kNegInf;
    return out;
}

// 0/0 -> 0; positive / 0 is reported as non-finite.
bool safe_divide(const Vector& num, const Vector& den, Vector& out) {
    out.resize(num.size());
    for (Index k = 0; k < num.size(); ++k) {
        if (num(k) == 0.0) {
            out(k) = 0.0;
        } else {
            out(k) = num(k) / den(k);
            if (!std::isfinite(out(k))) return false;
        }
    }
    return true;
}

Matrix plan_from_potentials(const Array2& X, const Array& F, const Array& G) {
    Array2 t = (-X).colwise() + F;
    t.rowwise() += G.transpose();
    return t.exp().matrix();
}

// Whether some positive entry lies outside [e^-limit, e^limit].
bool drifted(const Vector& x, double limit) {
    const double hi = std::exp(limit);
    const double lo = 1.0 / hi;
    for (Index k = 0; k < x.size(); ++k)
        if (x(k) > 0 && (x(k) > hi || x(k) < lo)) return true;
    return false;
}

// Zeroes entries too small to matter; subnormal arithmetic is very slow.
Matrix flush_tiny(Matrix m) {
    m = (m.array() < 1e-200).select(0.0, m);
    return m;
}

Vector unit_mass(const Vector& w) { return w / w.sum(); }

[[noreturn]] void non_finite() {
    throw SolverError("non-finite Sinkhorn scaling; epsilon is too small for the linear-domain path, enable log_domain");
}

}  // namespace

double cost_scale(const CostSpec& spec, const Matrix& costs) {
    if (spec.truncated()) return spec.ceiling();
    const double top = costs.size() ? costs.maxCoeff() : 0.0;
    return top > 0 ? top : 1.0;
}

CouplingPlan round_to_feasible(const Matrix& plan, const Vector& row, const Vector& col) {
    const Index m = plan.rows();
    const Index n = plan.cols();
    CouplingPlan out;
    out.matrix = plan.cwiseMax(0.0);
    out.row_marginal = row;
    out.col_marginal = col;

    for (Index i = 0; i < m; ++i) {
        const double s = out.matrix.row(i).sum();
        if (s > 0) {
            out.matrix.row(i) *= row(i) / s;
        } else {
            out.matrix.row(i) = row(i) * col.transpose() / col.sum();
        }
    }

    Vector excess = out.matrix.colwise().sum().transpose() - col;
    double deficit_total = 0.0;
    for (Index j = 0; j < n; ++j)
        if (excess(j) < 0) deficit_total -= excess(j);
    if (deficit_total <= 0) return out;

    const Vector colsum = out.matrix.colwise().sum().transpose();
    for (Index i = 0; i < m; ++i) {
        double moved = 0.0;
        for (Index j = 0; j < n; ++j) {
            if (excess(j) > 0 && colsum(j) > 0) {
                const double take = out.matrix(i, j) * excess(j) / colsum(j);
                out.matrix(i, j) -= take;
                moved += take;
            }
        }
        if (moved == 0.0) continue;
        for (Index j = 0; j < n; ++j)
            if (excess(j) < 0) out.matrix(i, j) += moved * (-excess(j)) / deficit_total;
    }
    out.matrix = out.matrix.cwiseMax(0.0);
    return out;
}

SinkhornResult sinkhorn(const Vector& a_in, const Vector& b_in, const Matrix& costs, double epsilon,
                        const SinkhornParams& params, bool log_domain, double p) {
    params.validate();
    if (costs.rows() != a_in.size() || costs.cols() != b_in.size())
        throw ValidationError("sinkhorn: cost matrix shape does not match marginals");
    if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0");
    const Vector a = unit_mass(a_in);
    const Vector b = unit_mass(b_in);

    SinkhornResult res;
    Matrix plan;
    if (log_domain) {
        const Array2 X = costs.array() / epsilon;
        const Array log_a = safe_log(a);
        const Array log_b = safe_log(b);
        Array F = Array::Zero(a.size());
        Array G = Array::Zero(b.size());
        for (res.iterations = 1; res.iterations <= params.max_iter; ++res.iterations) {
            F = log_a - row_logsumexp(X, G);
            G = log_b - col_logsumexp(X, F);
            if (res.iterations % kCheckEvery == 0 || res.iterations == params.max_iter) {
                const Array rows = (row_logsumexp(X, G) + F).exp();
                res.marginal_error = (rows.matrix() - a).lpNorm<1>();
                if (res.marginal_error < params.tol) {
                    res.converged = true;
                    break;
                }
            }
        }
        plan = plan_from_potentials(X, F, G);
    } else {
        const Matrix K = flush_tiny((-costs.array() / epsilon).exp().matrix());
        Vector u = Vector::Ones(a.size());
        Vector v = Vector::Ones(b.size());
        for (res.iterations = 1; res.iterations <= params.max_iter; ++res.iterations) {
            if (!safe_divide(a, K * v, u)) non_finite();
            if (!safe_divide(b, K.transpose() * u, v)) non_finite();
            if (res.iterations % kCheckEvery == 0 || res.iterations == params.max_iter) {
                res.marginal_error = (u.cwiseProduct(K * v) - a).lpNorm<1>();
                if (!std::isfinite(res.marginal_error)) non_finite();
                if (res.marginal_error < params.tol) {
                    res.converged = true;
                    break;
                }
            }
        }
        plan = u.asDiagonal() * K * v.asDiagonal();
    }
    res.iterations = std::min(res.iterations, params.max_iter);
    if (!plan.allFinite()) non_finite();

    res.plan = round_to_feasible(plan, a, b);
    res.cost = std::max(0.0, res.plan.cost(costs));
    res.distance = p == 1.0 ? res.cost : std::pow(res.cost, 1.0 / p);
    return res;
}

SinkhornResult sinkhorn_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& spec,
                                 const SinkhornParams& params) {
    if (a.dim() != b.dim()) throw ValidationError("sinkhorn_distance: dimension mismatch");
    const auto m = cost_matrix(a, b, spec);
    const double scale = cost_scale(spec, m.entries);
    return sinkhorn(a.weights(), b.weights(), m.entries, params.absolute_epsilon(scale), params,
                    params.use_log_domain(scale), spec.p);
}

FixedSupportResult ibp_barycenter(const BarycenterProblem& problem, const Matrix& support,
                                  const SinkhornParams& params) {
    if (support.cols() < 1) throw ValidationError("ibp_barycenter: empty support");
    if (support.rows() != problem.dim()) throw ValidationError("ibp_barycenter: support dimension mismatch");
    std::vector<Matrix> costs;
    costs.reserve(problem.inputs.size());
    for (const auto& mu : problem.inputs) costs.push_back(cost_matrix(support, mu.points(), problem.spec).entries);
    return ibp_barycenter(problem, costs, params);
}

FixedSupportResult ibp_barycenter(const BarycenterProblem& problem, const std::vector<Matrix>& costs,
                                  const SinkhornParams& params) {
    params.validate();
    const auto n = static_cast<std::size_t>(problem.count());
    if (costs.size() != n) throw ValidationError("ibp_barycenter: one cost matrix per input required");
    const Index R = costs.front().rows();
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (costs[i].rows() != R || costs[i].cols() != problem.inputs[i].size())
            throw ValidationError("ibp_barycenter: cost matrix shape mismatch");
        top = std::max(top, costs[i].maxCoeff());
    }
    const double scale = problem.spec.truncated() ? problem.spec.ceiling() : (top > 0 ? top : 1.0);
    const double eps = params.absolute_epsilon(scale);
    const bool log_domain = params.use_log_domain(scale);
    const Vector& w = problem.weights;

    std::vector<Vector> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = unit_mass(problem.inputs[i].weights());

    FixedSupportResult res;
    Array log_mass = Array::Constant(R, -std::log(static_cast<double>(R)));
    Vector mass = log_mass.exp().matrix();
    std::vector<Matrix> plans(n);

    if (log_domain) {
        // Scaling iterations on an absorbed kernel Kt = exp(F + G - X): the
        // log potentials F, G hold everything but the factors u, v, which are
        // folded in once they drift far from 1. Steps the absorbed kernel
        // cannot represent (underflowed columns) run in log-sum-exp form.
        std::vector<Array2> X(n);
        std::vector<Array> log_q(n), F(n), G(n);
        std::vector<Matrix> Kt(n);
        std::vector<Vector> u(n), v(n), kv(n);
        for (std::size_t i = 0; i < n; ++i) {
            X[i] = costs[i].array() / eps;
            log_q[i] = safe_log(q[i]);
            F[i] = Array::Zero(R);
            G[i] = Array::Zero(X[i].cols());
            u[i] = Vector::Ones(R);
            v[i] = Vector::Ones(X[i].cols());
        }
        auto absorb = [&](std::size_t i) {
            F[i] += u[i].array().log();
            G[i] += v[i].array().log();
            u[i].setOnes();
            v[i].setOnes();
            Kt[i] = flush_tiny(plan_from_potentials(X[i], F[i], G[i]));
        };
        auto lse_step = [&]() {
            Array next = Array::Zero(R);
            std::vector<Array> log_kv(n);
            for (std::size_t i = 0; i < n; ++i) {
                F[i] += u[i].array().log();
                G[i] = log_q[i] - col_logsumexp(X[i], F[i]);
                log_kv[i] = row_logsumexp(X[i], G[i]);
                if (w(static_cast<Index>(i)) > 0) next += w(static_cast<Index>(i)) * log_kv[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                F[i] = log_kv[i].isFinite().select(next - log_kv[i], kNegInf);
                u[i].setOnes();
                v[i].setOnes();
                Kt[i] = flush_tiny(plan_from_potentials(X[i], F[i], G[i]));
            }
            return next;
        };
        auto scaling_step = [&](Array& next) {
            next = Array::Zero(R);
            std::vector<Vector> v_new(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vector den = Kt[i].transpose() * u[i];
                v_new[i].resize(den.size());
                for (Index s = 0; s < den.size(); ++s) {
                    if (q[i](s) == 0.0) {
                        v_new[i](s) = 0.0;
                    } else if (den(s) > 0 && std::isfinite(den(s))) {
                        v_new[i](s) = q[i](s) / den(s);
                    } else {
                        return false;
                    }
                }
                kv[i] = Kt[i] * v_new[i];
                if (!kv[i].allFinite()) return false;
                if (w(static_cast<Index>(i)) > 0) {
                    const Array log_kv = (kv[i].array() > 0).select(kv[i].array().log() - F[i], kNegInf);
                    next += w(static_cast<Index>(i)) * log_kv;
                }
            }
            const Array next_mass = next.exp();
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = std::move(v_new[i]);
                for (Index r = 0; r < R; ++r) {
                    // Rows whose kernel underflowed carry no mass.
                    if (kv[i](r) > 0 && next_mass(r) > 0) {
                        u[i](r) = next_mass(r) / kv[i](r);
                    } else if (kv[i](r) > 0 && std::isfinite(next(r))) {
                        u[i](r) = std::exp(next(r) - std::log(kv[i](r)));
                    } else {
                        u[i](r) = 0.0;
                    }
                }
            }
            return true;
        };

        constexpr double kAbsorbAbove = 50.0;
        for (res.iterations = 1; res.iterations <= params.max_iter; ++res.iterations) {
            Array next;
            if (res.iterations <= kCheckEvery || !scaling_step(next)) next = lse_step();
            for (std::size_t i = 0; i < n; ++i) {
                if (drifted(u[i], kAbsorbAbove) || drifted(v[i], kAbsorbAbove)) absorb(i);
            }
            const Vector next_mass = next.exp().matrix();
            if (!next_mass.allFinite()) non_finite();
            const double change = (next_mass - mass).lpNorm<1>();
            mass = next_mass;
            if (change < params.tol) {
                res.converged = true;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            plans[i] = u[i].asDiagonal() * Kt[i] * v[i].asDiagonal();
        }
    } else {
        std::vector<Matrix> K(n);
        std::vector<Vector> u(n), v(n), kv(n);
        for (std::size_t i = 0; i < n; ++i) {
            K[i] = flush_tiny((-costs[i].array() / eps).exp().matrix());
            u[i] = Vector::Ones(R);
        }
        for (res.iterations = 1; res.iterations <= params.max_iter; ++res.iterations) {
            Array next = Array::Zero(R);
            for (std::size_t i = 0; i < n; ++i) {
                if (!safe_divide(q[i], K[i].transpose() * u[i], v[i])) non_finite();
                kv[i] = K[i] * v[i];
                if (w(static_cast<Index>(i)) > 0) next += w(static_cast<Index>(i)) * kv[i].array().log();
            }
            const Vector next_mass = next.exp().matrix();
            if (!next_mass.allFinite() || (next_mass.array() <= 0).any()) non_finite();
            for (std::size_t i = 0; i < n; ++i) {
                if (!safe_divide(next_mass, kv[i], u[i])) non_finite();
            }
            const double change = (next_mass - mass).lpNorm<1>();
            mass = next_mass;
            if (change < params.tol) {
                res.converged = true;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) plans[i] = u[i].asDiagonal() * K[i] * v[i].asDiagonal();
    }
    res.iterations = std::min(res.iterations, params.max_iter);

    const double total = mass.sum();
    if (!(total > 0) || !std::isfinite(total)) non_finite();
    res.mass = mass / total;

    res.objective = 0.0;
    res.marginal_error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!plans[i].allFinite()) non_finite();
        const double err = (plans[i].rowwise().sum() - mass).lpNorm<1>() +
                           (plans[i].colwise().sum().transpose() - q[i]).lpNorm<1>();
        res.marginal_error = std::max(res.marginal_error, err);
        auto rounded = round_to_feasible(plans[i], res.mass, q[i]);
        res.objective += w(static_cast<Index>(i)) * rounded.cost(costs[i]);
        res.plans.push_back(std::move(rounded));
    }
    res.objective = std::max(0.0, res.objective);
    return res;
}

}  // namespace robustot
