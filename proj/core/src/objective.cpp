#include "autogm/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace autogm {

const char* to_string(ConstraintMode mode) {
    return mode == ConstraintMode::min_time_given_acc ? "min-time" : "max-acc";
}

void BudgetConstraint::validate() const {
    if (!std::isfinite(bound)) throw std::invalid_argument("BudgetConstraint: non-finite bound");
    if (mode == ConstraintMode::min_time_given_acc) {
        // Bounds above 1 are allowed: they simply make every point infeasible.
        if (bound < 0.0) throw std::invalid_argument("BudgetConstraint: acc bound < 0");
    } else {
        if (bound <= 0.0) throw std::invalid_argument("BudgetConstraint: time bound <= 0");
    }
    if (lambda <= 0.0) throw std::invalid_argument("BudgetConstraint: lambda <= 0");
    if (barrier_floor <= 0.0) throw std::invalid_argument("BudgetConstraint: barrier_floor <= 0");
}

double infeasible_penalty(ConstraintMode mode) {
    const double g_worst = mode == ConstraintMode::min_time_given_acc ? 1e3 : 0.0;
    return g_worst + 1.0;
}

ObjectiveValue evaluate_objective(const EvalResult& result, const BudgetConstraint& constraint) {
    constraint.validate();
    if (std::isnan(result.accuracy) || std::isnan(result.inference_seconds)) {
        throw std::invalid_argument("evaluate_objective: NaN input");
    }

    double g, slack;
    if (constraint.mode == ConstraintMode::min_time_given_acc) {
        g = result.inference_seconds;
        slack = result.accuracy - constraint.bound;
    } else {
        g = -result.accuracy;
        slack = constraint.bound - result.inference_seconds;
    }

    if (slack > 0.0) {
        const double barrier = std::log(std::max(slack, constraint.barrier_floor));
        return {g - constraint.lambda * barrier, true};
    }
    return {infeasible_penalty(constraint.mode), false};
}

}  // namespace autogm
