#pragma once

#include "robustot/measure.hpp"

#include <random>

namespace robustot::testing {

/// Random measure with S atoms in [-scale, scale]^d and Dirichlet-ish weights.
inline DiscreteMeasure random_measure(std::mt19937_64& rng, Index S, Index d, double scale = 1.0) {
    std::uniform_real_distribution<double> coord(-scale, scale);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    Matrix pts(d, S);
    Vector w(S);
    for (Index j = 0; j < S; ++j) {
        for (Index k = 0; k < d; ++k) pts(k, j) = coord(rng);
        w(j) = mass(rng);
    }
    return DiscreteMeasure(std::move(pts), std::move(w), true);
}

inline DiscreteMeasure line_measure(std::initializer_list<double> xs, std::initializer_list<double> ws) {
    Matrix pts(1, static_cast<Index>(xs.size()));
    Vector w(static_cast<Index>(ws.size()));
    Index k = 0;
    for (double x : xs) pts(0, k++) = x;
    k = 0;
    for (double v : ws) w(k++) = v;
    return DiscreteMeasure(std::move(pts), std::move(w), true);
}

inline Matrix line_points(std::initializer_list<double> xs) {
    Matrix pts(1, static_cast<Index>(xs.size()));
    Index k = 0;
    for (double x : xs) pts(0, k++) = x;
    return pts;
}

}  // namespace robustot::testing
