#pragma once

#include "robustot/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace robustot {

/// Finite discrete probability measure on R^d.
///
/// Support points are stored column-wise in a d x S matrix, masses in a
/// length-S vector. Instances are immutable once constructed and always
/// satisfy: S >= 1, finite coordinates, nonnegative weights summing to one
/// within 1e-8.
template <typename Scalar>
class Measure {
public:
    using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using WeightVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    static constexpr double kSumTolerance = 1e-8;

    /// Builds a measure, rejecting invalid data. With `renormalize` the
    /// weights are divided once by their computed sum.
    Measure(PointMatrix points, WeightVector weights, bool renormalize = false)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.cols() < 1) throw ValidationError("measure needs at least one support point");
        if (points_.rows() < 1) throw ValidationError("measure dimension must be positive");
        if (weights_.size() != points_.cols())
            throw ValidationError("weight count does not match point count");
        if (!points_.allFinite()) throw ValidationError("non-finite support coordinate");
        if (!weights_.allFinite()) throw ValidationError("non-finite weight");
        if ((weights_.array() < Scalar(0)).any()) throw ValidationError("negative weight");
        const Scalar total = weights_.sum();
        if (!(total > Scalar(0))) throw ValidationError("nonpositive total mass");
        if (renormalize) {
            weights_ /= total;
        } else if (std::abs(static_cast<double>(total) - 1.0) > kSumTolerance) {
            throw ValidationError("weights sum to " + std::to_string(static_cast<double>(total)) +
                                  ", expected 1");
        }
    }

    /// Uniform empirical measure on the given points.
    static Measure uniform(PointMatrix points) {
        const Index n = points.cols();
        WeightVector w = WeightVector::Constant(n, Scalar(1) / Scalar(n > 0 ? n : 1));
        return Measure(std::move(points), std::move(w), true);
    }

    static Measure dirac(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& at) {
        return Measure(PointMatrix(at), WeightVector::Ones(1));
    }

    [[nodiscard]] Index dim() const { return points_.rows(); }
    [[nodiscard]] Index size() const { return points_.cols(); }
    [[nodiscard]] const PointMatrix& points() const { return points_; }
    [[nodiscard]] const WeightVector& weights() const { return weights_; }
    [[nodiscard]] auto point(Index i) const { return points_.col(i); }
    [[nodiscard]] Scalar weight(Index i) const { return weights_(i); }

    /// Same masses on a translated support.
    [[nodiscard]] Measure shifted(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& t) const {
        if (t.size() != dim()) throw ValidationError("shift dimension mismatch");
        PointMatrix moved = points_.colwise() + t;
        return Measure(std::move(moved), weights_);
    }

    /// Largest pairwise Euclidean distance between support points.
    [[nodiscard]] Scalar diameter() const {
        Scalar best = 0;
        for (Index i = 0; i < size(); ++i)
            for (Index j = i + 1; j < size(); ++j)
                best = std::max(best, (points_.col(i) - points_.col(j)).norm());
        return best;
    }

private:
    PointMatrix points_;
    WeightVector weights_;
};

using DiscreteMeasure = Measure<double>;

enum class MeasureSource { file, generated, derived };

struct MeasureMeta {
    std::string label;
    MeasureSource source = MeasureSource::derived;

    MeasureMeta(std::string l, MeasureSource s) : label(std::move(l)), source(s) {
        if (label.empty()) throw ValidationError("measure label must be nonempty");
    }
};

/// Grayscale image, row-major semantics: pixels(r, c).
using Image = Matrix;

// Measure CSV: header `weight,x0,...,x{d-1}`, one row per support point.
DiscreteMeasure parse_measure_csv(const std::string& text, bool renormalize);
DiscreteMeasure load_measure(const std::filesystem::path& path, bool renormalize);
std::string format_measure_csv(const DiscreteMeasure& m);
void save_measure(const DiscreteMeasure& m, const std::filesystem::path& path);

/// Support is the pixel grid {0..rows-1} x {0..cols-1} restricted to positive
/// pixels, point = (row, col), weight proportional to intensity.
DiscreteMeasure image_to_measure(const Image& pixels);

/// Bilinear splat of each support point's mass onto its four neighbouring
/// grid pixels. Mass falling outside the grid is clamped to the border.
Image measure_to_image(const DiscreteMeasure& m, Index rows, Index cols);

/// Drops atoms lighter than `threshold` and renormalizes. Keeps the heaviest
/// atom if everything would be dropped.
DiscreteMeasure prune(const DiscreteMeasure& m, double threshold = 1e-12);

/// Sums the weights of exactly equal support points (first occurrence order).
DiscreteMeasure merge_duplicates(const DiscreteMeasure& m);

/// Merges points closer than `tol` (Euclidean) into the first occurrence.
std::vector<Vector> dedupe_points(const std::vector<Vector>& points, double tol);

/// Packs column vectors into a d x n matrix.
Matrix stack_columns(const std::vector<Vector>& points);
std::vector<Vector> split_columns(const Matrix& points);

// PGM images: reads P2 and P5, writes P5 scaled so that the maximum is 255
// (or P2 when `ascii`).
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const Image& img, const std::filesystem::path& path, bool ascii = false);

}  // namespace robustot
