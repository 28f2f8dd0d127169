#include "robustot/simplex.hpp"

#include <vector>

namespace robustot {

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class TableauSimplex {
public:
    TableauSimplex(const LinearProgram& lp, double pivot_tol, Index max_pivots)
        : m_(lp.A.rows()), n_(lp.A.cols()), tol_(pivot_tol), max_pivots_(max_pivots) {
        // Columns: [original n | artificial m | rhs], last row is the objective.
        t_ = Tableau::Zero(m_ + 1, n_ + m_ + 1);
        basis_.resize(static_cast<std::size_t>(m_));
        active_.assign(static_cast<std::size_t>(m_), true);
        for (Index i = 0; i < m_; ++i) {
            const double sign = lp.b(i) < 0 ? -1.0 : 1.0;
            t_.row(i).head(n_) = sign * lp.A.row(i);
            t_(i, n_ + i) = 1.0;
            t_(i, rhs()) = sign * lp.b(i);
            basis_[static_cast<std::size_t>(i)] = n_ + i;
        }
        cost_ = lp.c;
        cost_scale_ = std::max(1.0, lp.c.size() ? lp.c.cwiseAbs().maxCoeff() : 0.0);
    }

    LpSolution run() {
        LpSolution sol;

        // Phase one: minimize the sum of artificials.
        t_.row(m_).setZero();
        for (Index i = 0; i < m_; ++i) {
            t_.row(m_).head(n_) -= t_.row(i).head(n_);
            t_(m_, rhs()) -= t_(i, rhs());
        }
        const double b_scale = std::max(1.0, t_.col(rhs()).head(m_).cwiseAbs().sum());
        if (!iterate(n_ + m_, 1.0, sol.pivots)) {
            sol.status = LpStatus::iteration_limit;
            return sol;
        }
        if (-t_(m_, rhs()) > 1e-9 * b_scale) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        drive_out_artificials(sol.pivots);

        // Phase two on the original columns only.
        t_.row(m_).setZero();
        t_.row(m_).head(n_) = cost_.transpose();
        for (Index i = 0; i < m_; ++i) {
            if (!active_[static_cast<std::size_t>(i)]) continue;
            const Index bv = basis_[static_cast<std::size_t>(i)];
            const double cb = bv < n_ ? cost_(bv) : 0.0;
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
        const auto status = iterate(n_, cost_scale_, sol.pivots);
        if (!status) {
            sol.status = unbounded_ ? LpStatus::unbounded : LpStatus::iteration_limit;
            return sol;
        }

        sol.x = Vector::Zero(n_);
        for (Index i = 0; i < m_; ++i) {
            if (!active_[static_cast<std::size_t>(i)]) continue;
            const Index bv = basis_[static_cast<std::size_t>(i)];
            if (bv < n_) sol.x(bv) = std::max(0.0, t_(i, rhs()));
        }
        sol.objective = cost_.dot(sol.x);
        sol.status = LpStatus::optimal;
        return sol;
    }

private:
    [[nodiscard]] Index rhs() const { return n_ + m_; }

    void pivot(Index row, Index col) {
        t_.row(row) /= t_(row, col);
        t_(row, col) = 1.0;
        for (Index i = 0; i <= m_; ++i) {
            if (i == row) continue;
            const double f = t_(i, col);
            if (f != 0.0) {
                t_.row(i) -= f * t_.row(row);
                t_(i, col) = 0.0;
            }
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    // Bland's rule over columns [0, ncols). Returns false on iteration limit
    // or unboundedness.
    bool iterate(Index ncols, double scale, Index& pivots) {
        const double rc_tol = tol_ * scale;
        for (;;) {
            Index enter = -1;
            for (Index j = 0; j < ncols; ++j) {
                if (t_(m_, j) < -rc_tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;

            Index leave = -1;
            double best = 0.0;
            for (Index i = 0; i < m_; ++i) {
                if (!active_[static_cast<std::size_t>(i)]) continue;
                const double a = t_(i, enter);
                if (a <= tol_) continue;
                const double ratio = t_(i, rhs()) / a;
                if (leave < 0 || ratio < best - 1e-15 ||
                    (ratio <= best + 1e-15 &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0) {
                unbounded_ = true;
                return false;
            }
            pivot(leave, enter);
            if (++pivots > max_pivots_) return false;
        }
    }

    void drive_out_artificials(Index& pivots) {
        for (Index i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_) continue;
            Index col = -1;
            for (Index j = 0; j < n_; ++j) {
                if (std::abs(t_(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col < 0) {
                active_[static_cast<std::size_t>(i)] = false;  // redundant row
                continue;
            }
            pivot(i, col);
            ++pivots;
        }
    }

    Index m_;
    Index n_;
    double tol_;
    Index max_pivots_;
    Tableau t_;
    Vector cost_;
    double cost_scale_ = 1.0;
    std::vector<Index> basis_;
    std::vector<bool> active_;
    bool unbounded_ = false;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double pivot_tol, Index max_pivots) {
    if (lp.A.rows() != lp.b.size() || lp.A.cols() != lp.c.size())
        throw ValidationError("solve_lp: inconsistent LP dimensions");
    if (lp.A.rows() == 0) {
        LpSolution sol;
        sol.x = Vector::Zero(lp.c.size());
        if ((lp.c.array() < 0).any()) {
            sol.status = LpStatus::unbounded;
        } else {
            sol.status = LpStatus::optimal;
        }
        return sol;
    }
    return TableauSimplex(lp, pivot_tol, max_pivots).run();
}

}  // namespace robustot
