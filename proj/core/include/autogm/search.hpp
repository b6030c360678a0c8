#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autogm/bayesopt.hpp"
#include "autogm/objective.hpp"

namespace autogm {

// One evaluated algorithm. f_gm and feasible are unset only for preset
// evaluations run without a constraint.
struct TraceRecord {
    std::int32_t iteration = 0;
    ParamSet params;
    double accuracy = 0.0;
    double inference_seconds = 0.0;
    std::optional<double> f_gm;
    std::optional<bool> feasible;
    double train_seconds = 0.0;
};

struct SearchTrace {
    std::vector<TraceRecord> records;
    std::size_t best_index = 0;  // argmin f_GM
    double total_search_seconds = 0.0;
};

// The full search loop: propose, instantiate, train on the train split,
// measure accuracy and inference time on the validation split, score, update
// the surrogate. Runs exactly `budget` evaluations (fewer only when
// wall_budget_seconds runs out). Failed trainings become infeasible records.
SearchTrace autogm_search(const Dataset& dataset, const BudgetConstraint& constraint,
                          std::int32_t budget, const TrainConfig& train_config,
                          std::uint64_t seed,
                          std::optional<double> wall_budget_seconds = std::nullopt);

// Identical loop with uniform proposals over the search space.
SearchTrace random_search(const Dataset& dataset, const BudgetConstraint& constraint,
                          std::int32_t budget, const TrainConfig& train_config,
                          std::uint64_t seed,
                          std::optional<double> wall_budget_seconds = std::nullopt);

// Trains and evaluates one named preset exactly as a search iteration would.
TraceRecord evaluate_preset(const Dataset& dataset, std::string_view name,
                            const TrainConfig& train_config, std::uint64_t seed,
                            std::optional<std::int32_t> pixie_steps = std::nullopt,
                            const BudgetConstraint* constraint = nullptr);

// Vary exactly one parameter while holding the base set fixed.
enum class SweepParam { d, k, w, l, a };

std::optional<SweepParam> sweep_param_from_string(std::string_view name);

struct SweepPoint {
    std::string value;
    double accuracy = 0.0;
    double inference_seconds = 0.0;
};

std::vector<SweepPoint> sweep_parameter(const Dataset& dataset, const ParamSet& base,
                                        SweepParam which, std::span<const std::string> values,
                                        const TrainConfig& train_config, std::uint64_t seed);

// Trace serialization (field names are part of the interface):
// {"mode", "bound", "lambda", "budget", "seed", "records": [{"iter", "d",
//  "k", "w", "l", "a", "acc", "time_s", "f_gm", "feasible", "train_s"}...],
//  "best_index", "search_s"}
std::string trace_to_json(const SearchTrace& trace, const BudgetConstraint& constraint,
                          std::int32_t budget, std::uint64_t seed);
std::string record_to_json(const TraceRecord& record);

namespace detail {

// Evaluation outcome of a single proposed algorithm, injectable for tests.
struct EvalOutcome {
    double accuracy = 0.0;
    double inference_seconds = 0.0;
    double train_seconds = 0.0;
    bool failed = false;
};

using EvalFn = std::function<EvalOutcome(const ParamSet&, std::uint64_t eval_seed)>;

enum class Proposals { bayesopt, uniform };

SearchTrace search_loop(Proposals proposals, const SearchSpace& space,
                        const BudgetConstraint& constraint, std::int32_t budget,
                        std::uint64_t seed, std::optional<double> wall_budget_seconds,
                        const EvalFn& evaluate);

}  // namespace detail

}  // namespace autogm
