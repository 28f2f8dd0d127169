#include "robustot/kmeans.hpp"

#include <random>

namespace robustot {

namespace {

Index sample_index(const Vector& mass, std::mt19937_64& rng) {
    const double total = mass.sum();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double target = unit(rng) * total;
    double acc = 0.0;
    Index last_positive = -1;
    for (Index i = 0; i < mass.size(); ++i) {
        if (mass(i) <= 0) continue;
        last_positive = i;
        acc += mass(i);
        if (acc > target) return i;
    }
    return last_positive;
}

}  // namespace

Index nearest_center(const Matrix& centers, const Eigen::Ref<const Vector>& x) {
    Index best = 0;
    double best_d = (centers.col(0) - x).squaredNorm();
    for (Index c = 1; c < centers.cols(); ++c) {
        const double d = (centers.col(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

KMeansResult kmeans(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed, Index max_iter) {
    const Index n = points.cols();
    if (n < 1) throw ValidationError("kmeans: no points");
    if (weights.size() != n) throw ValidationError("kmeans: one weight per point required");
    if ((weights.array() < 0).any() || !(weights.sum() > 0)) throw ValidationError("kmeans: invalid weights");
    if (k < 1) throw ValidationError("kmeans: k must be >= 1");

    std::mt19937_64 rng(seed);
    std::vector<Index> chosen;
    chosen.push_back(sample_index(weights, rng));
    Vector d2 = (points.colwise() - points.col(chosen.back())).colwise().squaredNorm().transpose();
    while (static_cast<Index>(chosen.size()) < k) {
        const Vector mass = weights.cwiseProduct(d2);
        if (!(mass.sum() > 0)) break;  // fewer distinct points than k
        chosen.push_back(sample_index(mass, rng));
        d2 = d2.cwiseMin((points.colwise() - points.col(chosen.back())).colwise().squaredNorm().transpose());
    }

    KMeansResult out;
    out.centers.resize(points.rows(), static_cast<Index>(chosen.size()));
    for (std::size_t c = 0; c < chosen.size(); ++c) out.centers.col(static_cast<Index>(c)) = points.col(chosen[c]);
    out.labels.assign(static_cast<std::size_t>(n), -1);

    for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            const Index c = nearest_center(out.centers, points.col(i));
            if (c != out.labels[static_cast<std::size_t>(i)]) {
                out.labels[static_cast<std::size_t>(i)] = c;
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums = Matrix::Zero(points.rows(), out.centers.cols());
        Vector mass = Vector::Zero(out.centers.cols());
        for (Index i = 0; i < n; ++i) {
            const Index c = out.labels[static_cast<std::size_t>(i)];
            sums.col(c) += weights(i) * points.col(i);
            mass(c) += weights(i);
        }
        for (Index c = 0; c < out.centers.cols(); ++c)
            if (mass(c) > 0) out.centers.col(c) = sums.col(c) / mass(c);
    }
    out.iterations = std::min(out.iterations, max_iter);
    return out;
}

}  // namespace robustot
