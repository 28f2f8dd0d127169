#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace robustot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad files, inconsistent dimensions, invalid parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a solver (non-finite scalings, LP breakdown).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Exact oracle asked to solve an instance above its size cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace robustot
