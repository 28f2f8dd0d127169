#pragma once

#include "robustot/measure.hpp"

#include <cmath>

namespace robustot {

enum class GroundMetric { euclidean };

/// Truncated ground cost min{d(x, y), lambda}^p. `lambda == kInf` turns the
/// truncation off so the classical and the robust problems share one path.
struct CostSpec {
    GroundMetric ground = GroundMetric::euclidean;
    double p = 1.0;
    double lambda = kInf;

    CostSpec() = default;
    CostSpec(double p_, double lambda_) : p(p_), lambda(lambda_) { validate(); }

    void validate() const {
        if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("cost exponent p must be >= 1");
        if (!(lambda > 0.0)) throw ValidationError("truncation lambda must be > 0");
    }

    [[nodiscard]] bool truncated() const { return std::isfinite(lambda); }

    /// Upper bound on any entry, lambda^p (infinite when untruncated).
    [[nodiscard]] double ceiling() const { return truncated() ? std::pow(lambda, p) : kInf; }

    /// Applies truncation and exponent to an already computed distance.
    template <typename Scalar>
    [[nodiscard]] Scalar apply(Scalar distance) const {
        const Scalar d = truncated() ? std::min(distance, static_cast<Scalar>(lambda)) : distance;
        if (p == 1.0) return d;
        if (p == 2.0) return d * d;
        return std::pow(d, static_cast<Scalar>(p));
    }
};

template <typename DerivedX, typename DerivedY>
[[nodiscard]] typename DerivedX::Scalar truncated_cost(const Eigen::MatrixBase<DerivedX>& x,
                                                       const Eigen::MatrixBase<DerivedY>& y,
                                                       const CostSpec& spec) {
    if (x.size() != y.size()) throw ValidationError("truncated_cost: dimension mismatch");
    return spec.apply((x - y).norm());
}

/// Pairwise truncated costs between two point sets (columns are points).
/// Entry (i, j) depends only on rows(i) and cols(j).
template <typename DerivedA, typename DerivedB>
[[nodiscard]] Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_cost(
    const Eigen::MatrixBase<DerivedA>& rows, const Eigen::MatrixBase<DerivedB>& cols, const CostSpec& spec) {
    using Scalar = typename DerivedA::Scalar;
    if (rows.rows() != cols.rows()) throw ValidationError("cost_matrix: dimension mismatch");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows.cols(), cols.cols());
    for (Index j = 0; j < cols.cols(); ++j)
        for (Index i = 0; i < rows.cols(); ++i) out(i, j) = spec.apply((rows.col(i) - cols.col(j)).norm());
    return out;
}

struct CostMatrix {
    Matrix entries;
    CostSpec spec;

    [[nodiscard]] Index rows() const { return entries.rows(); }
    [[nodiscard]] Index cols() const { return entries.cols(); }
    double operator()(Index i, Index j) const { return entries(i, j); }
};

inline CostMatrix cost_matrix(const DiscreteMeasure& a, const DiscreteMeasure& b, const CostSpec& spec) {
    spec.validate();
    return CostMatrix{pairwise_cost(a.points(), b.points(), spec), spec};
}

inline CostMatrix cost_matrix(const Matrix& a_points, const Matrix& b_points, const CostSpec& spec) {
    spec.validate();
    return CostMatrix{pairwise_cost(a_points, b_points, spec), spec};
}

}  // namespace robustot
