#include "robustot/exact_ot.hpp"

#include "robustot/simplex.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace robustot {

namespace {

// Spanning-tree basis of the bipartite transport graph. Node k < m is row
// k, node m + j is column j.
class TransportSimplex {
public:
    TransportSimplex(const Vector& a, const Vector& b, const Matrix& c, double tol)
        : m_(a.size()), n_(b.size()), a_(a), b_(b), c_(c), tol_(tol) {
        scale_ = std::max(1.0, c_.cwiseAbs().maxCoeff());
    }

    CouplingPlan solve(Index& pivots) {
        northwest_corner();
        Index degenerate_streak = 0;
        const Index max_pivots = 50 * (m_ + n_) * (m_ + n_) + 1000;
        for (;;) {
            compute_potentials();
            const bool bland = degenerate_streak > m_ + n_;
            Index ei = -1;
            Index ej = -1;
            double best = -tol_ * scale_;
            for (Index i = 0; i < m_ && !(bland && ei >= 0); ++i) {
                for (Index j = 0; j < n_; ++j) {
                    if (in_basis_(i, j)) continue;
                    const double rc = c_(i, j) - u_(i) - v_(j);
                    if (rc < best) {
                        best = rc;
                        ei = i;
                        ej = j;
                        if (bland) break;
                    }
                }
            }
            if (ei < 0) break;
            const double theta = pivot(ei, ej);
            degenerate_streak = theta > 0 ? 0 : degenerate_streak + 1;
            if (++pivots > max_pivots) throw SolverError("transport simplex exceeded its pivot limit");
        }

        CouplingPlan plan;
        plan.matrix = Matrix::Zero(m_, n_);
        for (const auto& cell : basis_) plan.matrix(cell.i, cell.j) = std::max(0.0, cell.flow);
        plan.row_marginal = a_;
        plan.col_marginal = b_;
        return plan;
    }

private:
    struct Cell {
        Index i;
        Index j;
        double flow;
    };

    void northwest_corner() {
        Vector ra = a_;
        Vector rb = b_;
        in_basis_ = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m_, n_, false);
        Index i = 0;
        Index j = 0;
        for (;;) {
            const double f = std::min(ra(i), rb(j));
            basis_.push_back({i, j, f});
            in_basis_(i, j) = true;
            ra(i) -= f;
            rb(j) -= f;
            if (i == m_ - 1 && j == n_ - 1) break;
            if (j == n_ - 1 || (i < m_ - 1 && ra(i) <= rb(j))) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    void build_adjacency() {
        adj_.assign(static_cast<std::size_t>(m_ + n_), {});
        for (std::size_t k = 0; k < basis_.size(); ++k) {
            adj_[static_cast<std::size_t>(basis_[k].i)].push_back(k);
            adj_[static_cast<std::size_t>(m_ + basis_[k].j)].push_back(k);
        }
    }

    [[nodiscard]] Index other_end(std::size_t cell, Index node) const {
        const auto& e = basis_[cell];
        return node < m_ ? m_ + e.j : e.i;
    }

    void compute_potentials() {
        build_adjacency();
        u_ = Vector::Zero(m_);
        v_ = Vector::Zero(n_);
        std::vector<bool> seen(static_cast<std::size_t>(m_ + n_), false);
        std::vector<Index> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const Index node = stack.back();
            stack.pop_back();
            for (const auto k : adj_[static_cast<std::size_t>(node)]) {
                const Index next = other_end(k, node);
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = true;
                const auto& e = basis_[k];
                if (next >= m_) {
                    v_(e.j) = c_(e.i, e.j) - u_(e.i);
                } else {
                    u_(e.i) = c_(e.i, e.j) - v_(e.j);
                }
                stack.push_back(next);
            }
        }
    }

    // Adds cell (ei, ej) to the basis, pushes flow around the unique cycle
    // and removes the blocking cell. Returns the amount of flow moved.
    double pivot(Index ei, Index ej) {
        // Tree path from column node of ej back to row node ei.
        const Index start = m_ + ej;
        const Index goal = ei;
        std::vector<std::ptrdiff_t> via(static_cast<std::size_t>(m_ + n_), -1);
        std::vector<bool> seen(static_cast<std::size_t>(m_ + n_), false);
        std::vector<Index> queue{start};
        seen[static_cast<std::size_t>(start)] = true;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const Index node = queue[h];
            if (node == goal) break;
            for (const auto k : adj_[static_cast<std::size_t>(node)]) {
                const Index next = other_end(k, node);
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = true;
                via[static_cast<std::size_t>(next)] = static_cast<std::ptrdiff_t>(k);
                queue.push_back(next);
            }
        }
        // Walk goal -> start collecting cells; the cell touching start is a
        // donor (-), then signs alternate.
        std::vector<std::size_t> path;
        for (Index node = goal; node != start;) {
            const auto k = static_cast<std::size_t>(via[static_cast<std::size_t>(node)]);
            path.push_back(k);
            node = other_end(k, node);
        }
        // path[0] touches the row node ei and is a donor, as is path.back().
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = 0;
        for (std::size_t t = 0; t < path.size(); t += 2) {
            const auto& e = basis_[path[t]];
            const double f = e.flow;
            const Index key = e.i * n_ + e.j;
            if (f < theta || (f == theta && key < basis_[leave].i * n_ + basis_[leave].j)) {
                theta = f;
                leave = path[t];
            }
        }
        theta = std::max(theta, 0.0);
        for (std::size_t t = 0; t < path.size(); ++t) {
            basis_[path[t]].flow += (t % 2 == 0) ? -theta : theta;
        }
        in_basis_(basis_[leave].i, basis_[leave].j) = false;
        basis_[leave] = {ei, ej, theta};
        in_basis_(ei, ej) = true;
        return theta;
    }

    Index m_;
    Index n_;
    Vector a_;
    Vector b_;
    const Matrix& c_;
    double tol_;
    double scale_ = 1.0;
    std::vector<Cell> basis_;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_basis_;
    std::vector<std::vector<std::size_t>> adj_;
    Vector u_;
    Vector v_;
};

Vector normalized_mass(const Vector& w, const char* what) {
    if (w.size() == 0) throw ValidationError(std::string(what) + " is empty");
    if (!w.allFinite() || (w.array() < 0).any()) throw ValidationError(std::string(what) + " must be nonnegative");
    const double total = w.sum();
    if (!(total > 0)) throw ValidationError(std::string(what) + " has no mass");
    return w / total;
}

}  // namespace

ExactResult exact_transport(const Vector& row_mass, const Vector& col_mass, const Matrix& costs,
                            const ExactOptions& opts, double p) {
    if (costs.rows() != row_mass.size() || costs.cols() != col_mass.size())
        throw ValidationError("exact_transport: cost matrix shape does not match marginals");
    if (costs.size() > opts.cell_cap) {
        throw CapExceeded("exact oracle cap exceeded: " + std::to_string(costs.size()) + " cells > " +
                          std::to_string(opts.cell_cap));
    }
    if (!costs.allFinite()) throw ValidationError("exact_transport: non-finite cost");

    ExactResult result;
    TransportSimplex solver(normalized_mass(row_mass, "row marginal"), normalized_mass(col_mass, "column marginal"),
                            costs, opts.pivot_tol);
    result.plan = solver.solve(result.pivots);
    result.cost = std::max(0.0, result.plan.cost(costs));
    result.distance = p == 1.0 ? result.cost : std::pow(result.cost, 1.0 / p);
    result.is_vertex = true;
    return result;
}

ExactResult exact_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& spec,
                           const ExactOptions& opts) {
    if (a.dim() != b.dim()) throw ValidationError("exact_distance: dimension mismatch");
    if (a.size() * b.size() > opts.cell_cap) {
        throw CapExceeded("exact oracle cap exceeded: " + std::to_string(a.size() * b.size()) + " cells > " +
                          std::to_string(opts.cell_cap));
    }
    const auto m = cost_matrix(a, b, spec);
    return exact_transport(a.weights(), b.weights(), m.entries, opts, spec.p);
}

ExactBarycenter exact_barycenter_lp(const BarycenterProblem& problem, const Matrix& candidate_support,
                                    const ExactOptions& opts) {
    const Index R = candidate_support.cols();
    if (R < 1) throw ValidationError("exact_barycenter_lp: empty candidate support");
    if (candidate_support.rows() != problem.dim())
        throw ValidationError("exact_barycenter_lp: candidate dimension mismatch");
    const Index total = problem.total_support();
    if (R * total > opts.cell_cap) {
        throw CapExceeded("exact barycenter LP cap exceeded: " + std::to_string(R * total) + " cells > " +
                          std::to_string(opts.cell_cap));
    }

    const Index n = problem.count();
    std::vector<Index> offset(static_cast<std::size_t>(n));
    Index vars = R;
    for (Index i = 0; i < n; ++i) {
        offset[static_cast<std::size_t>(i)] = vars;
        vars += R * problem.inputs[static_cast<std::size_t>(i)].size();
    }
    const Index rows = n * R + total;

    LinearProgram lp;
    lp.A = Matrix::Zero(rows, vars);
    lp.b = Vector::Zero(rows);
    lp.c = Vector::Zero(vars);
    std::vector<Matrix> costs;
    Index col_row = n * R;
    for (Index i = 0; i < n; ++i) {
        const auto& mu = problem.inputs[static_cast<std::size_t>(i)];
        const Index S = mu.size();
        const Index off = offset[static_cast<std::size_t>(i)];
        costs.push_back(cost_matrix(candidate_support, mu.points(), problem.spec).entries);
        const Vector q = normalized_mass(mu.weights(), "input mass");
        for (Index r = 0; r < R; ++r) {
            const Index row = i * R + r;
            lp.A(row, r) = -1.0;
            for (Index s = 0; s < S; ++s) {
                const Index var = off + r * S + s;
                lp.A(row, var) = 1.0;
                lp.A(col_row + s, var) = 1.0;
                lp.c(var) = problem.weights(i) * costs.back()(r, s);
            }
        }
        for (Index s = 0; s < S; ++s) lp.b(col_row + s) = q(s);
        col_row += S;
    }

    const auto sol = solve_lp(lp, opts.pivot_tol);
    if (sol.status != LpStatus::optimal) throw SolverError("exact barycenter LP did not reach optimality");

    Vector mass = sol.x.head(R).cwiseMax(0.0);
    ExactBarycenter out{DiscreteMeasure(candidate_support, mass, true), 0.0, {}, sol.pivots};
    for (Index i = 0; i < n; ++i) {
        const auto& mu = problem.inputs[static_cast<std::size_t>(i)];
        const Index S = mu.size();
        CouplingPlan plan;
        plan.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            sol.x.data() + offset[static_cast<std::size_t>(i)], R, S);
        plan.matrix = plan.matrix.cwiseMax(0.0);
        plan.row_marginal = out.barycenter.weights();
        plan.col_marginal = normalized_mass(mu.weights(), "input mass");
        out.objective += problem.weights(i) * plan.cost(costs[static_cast<std::size_t>(i)]);
        out.plans.push_back(std::move(plan));
    }
    return out;
}

}  // namespace robustot
