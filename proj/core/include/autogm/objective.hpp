#pragma once

#include "autogm/trainer.hpp"

namespace autogm {

enum class ConstraintMode {
    min_time_given_acc,  // minimize inference time subject to accuracy >= bound
    max_acc_given_time,  // maximize accuracy subject to inference time <= bound
};

const char* to_string(ConstraintMode mode);

struct BudgetConstraint {
    ConstraintMode mode = ConstraintMode::min_time_given_acc;
    double bound = 0.0;             // acc_min or time_max, per mode
    double lambda = 1e-19;          // log-barrier penalty coefficient
    double barrier_floor = 1e-12;   // clamps log underflow, never changes ranking

    void validate() const;
};

struct ObjectiveValue {
    double f_gm = 0.0;
    bool feasible = false;
};

// Finite stand-in for the indicator's infinity so the surrogate can regress
// on infeasible points. Strictly dominates every feasible score with
// g <= g_worst (min_time: 1e3 s cap; max_acc: 0).
double infeasible_penalty(ConstraintMode mode);

// f_GM = g - lambda * log(slack) on the feasible region (slack > 0), the
// penalty otherwise. min_time: g = time, slack = acc - bound. max_acc:
// g = -acc, slack = bound - time.
ObjectiveValue evaluate_objective(const EvalResult& result, const BudgetConstraint& constraint);

}  // namespace autogm
