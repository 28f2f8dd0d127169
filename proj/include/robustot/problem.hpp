#pragma once

#include "robustot/cost.hpp"

#include <vector>

namespace robustot {

/// Weighted collection of input measures sharing one ambient dimension, plus
/// the truncated cost. The barycenter objective uses exponent k = p.
struct BarycenterProblem {
    std::vector<DiscreteMeasure> inputs;
    Vector weights;
    CostSpec spec;

    BarycenterProblem(std::vector<DiscreteMeasure> in, Vector w, CostSpec s)
        : inputs(std::move(in)), weights(std::move(w)), spec(s) {
        validate();
    }

    /// Equal weights 1/n.
    BarycenterProblem(std::vector<DiscreteMeasure> in, CostSpec s)
        : BarycenterProblem(std::move(in), Vector(), s) {}

    [[nodiscard]] Index count() const { return static_cast<Index>(inputs.size()); }
    [[nodiscard]] Index dim() const { return inputs.front().dim(); }

    [[nodiscard]] Index total_support() const {
        Index total = 0;
        for (const auto& m : inputs) total += m.size();
        return total;
    }

    /// Same problem with every input translated by `t`.
    [[nodiscard]] BarycenterProblem shifted(const Vector& t) const {
        std::vector<DiscreteMeasure> moved;
        moved.reserve(inputs.size());
        for (const auto& m : inputs) moved.push_back(m.shifted(t));
        return {std::move(moved), weights, spec};
    }

private:
    void validate() {
        spec.validate();
        if (inputs.empty()) throw ValidationError("barycenter problem needs at least one input");
        if (weights.size() == 0) {
            weights = Vector::Constant(count(), 1.0 / static_cast<double>(count()));
        }
        if (weights.size() != count()) throw ValidationError("one weight per input measure required");
        if (!weights.allFinite() || (weights.array() < 0).any())
            throw ValidationError("input weights must be finite and nonnegative");
        if (std::abs(weights.sum() - 1.0) > 1e-8) throw ValidationError("input weights must sum to 1");
        for (const auto& m : inputs)
            if (m.dim() != dim()) throw ValidationError("input measures have mixed dimensions");
    }
};

}  // namespace robustot
