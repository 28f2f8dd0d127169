#pragma once

#include "robustot/types.hpp"

namespace robustot {

/// Equality-form linear program: minimize c'x subject to A x = b, x >= 0.
struct LinearProgram {
    Matrix A;
    Vector b;
    Vector c;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
    LpStatus status = LpStatus::iteration_limit;
    Vector x;
    double objective = 0.0;
    Index pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's rule (lowest index enters,
/// lowest basis index leaves on ratio ties). Returns a basic solution, so
/// at most rank(A) entries of x are nonzero. Redundant equality rows are
/// detected after phase one and dropped.
LpSolution solve_lp(const LinearProgram& lp, double pivot_tol = 1e-11, Index max_pivots = 1'000'000);

}  // namespace robustot
