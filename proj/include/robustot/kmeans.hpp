#pragma once

#include "robustot/types.hpp"

#include <cstdint>
#include <vector>

namespace robustot {

struct KMeansResult {
    Matrix centers;             ///< d x k', k' <= k (coincident seeds are never duplicated)
    std::vector<Index> labels;  ///< nearest center per point, ties to the lower index
    Index iterations = 0;
};

/// Weighted k-means: k-means++ seeding (D^2 sampling scaled by weight) then
/// Lloyd iterations until assignments stop changing or `max_iter` is hit.
/// Points are columns; weights must be nonnegative with positive total.
KMeansResult kmeans(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed,
                    Index max_iter = 100);

/// Index of the nearest center to `x` (lowest index on ties).
Index nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& x);

}  // namespace robustot
