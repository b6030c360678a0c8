#include "autogm/search.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "autogm/rng.hpp"

namespace autogm {

namespace {

constexpr std::uint64_t kProposeTag = 0x50524f50;
constexpr std::uint64_t kAccTag = 0x41434355;
constexpr std::uint64_t kTimeTag = 0x54494d45;

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

detail::EvalOutcome evaluate_on_dataset(const Dataset& dataset, const ParamSet& params,
                                        const TrainConfig& base_config, std::uint64_t eval_seed) {
    TrainConfig config = base_config;
    config.seed = eval_seed;
    try {
        TrainedModel model = train(dataset, params, config);
        auto acc_rng = make_rng(mix_seed(eval_seed, kAccTag));
        const double accuracy = evaluate_accuracy(model, dataset, Split::val, acc_rng);
        auto time_rng = make_rng(mix_seed(eval_seed, kTimeTag));
        const double inference = measure_inference_time(model, dataset, time_rng);
        return {accuracy, inference, model.train_seconds, false};
    } catch (const std::exception&) {
        // Diverged or errored runs turn into infeasible records; the
        // surrogate still learns the region is bad.
        return {0.0, 0.0, 0.0, true};
    }
}

TraceRecord make_record(std::int32_t iteration, const ParamSet& params,
                        const detail::EvalOutcome& outcome, const BudgetConstraint& constraint) {
    TraceRecord rec;
    rec.iteration = iteration;
    rec.params = params;
    rec.accuracy = outcome.accuracy;
    rec.inference_seconds = outcome.inference_seconds;
    rec.train_seconds = outcome.train_seconds;
    if (outcome.failed) {
        rec.f_gm = infeasible_penalty(constraint.mode);
        rec.feasible = false;
    } else {
        const ObjectiveValue obj =
            evaluate_objective({outcome.accuracy, outcome.inference_seconds}, constraint);
        rec.f_gm = obj.f_gm;
        rec.feasible = obj.feasible;
    }
    return rec;
}

nlohmann::ordered_json record_json(const TraceRecord& r) {
    nlohmann::ordered_json j;
    j["iter"] = r.iteration;
    j["d"] = r.params.dim;
    j["k"] = r.params.steps;
    j["w"] = r.params.width;
    j["l"] = r.params.nonlinear;
    j["a"] = to_string(r.params.aggregation);
    j["acc"] = r.accuracy;
    j["time_s"] = r.inference_seconds;
    if (r.f_gm) j["f_gm"] = *r.f_gm;
    else j["f_gm"] = nullptr;
    if (r.feasible) j["feasible"] = *r.feasible;
    else j["feasible"] = nullptr;
    j["train_s"] = r.train_seconds;
    return j;
}

}  // namespace

namespace detail {

SearchTrace search_loop(Proposals proposals, const SearchSpace& space,
                        const BudgetConstraint& constraint, std::int32_t budget,
                        std::uint64_t seed, std::optional<double> wall_budget_seconds,
                        const EvalFn& evaluate) {
    if (budget < 1) throw std::invalid_argument("search: budget must be >= 1");
    constraint.validate();

    const double t_start = now_seconds();
    auto propose_rng = make_rng(mix_seed(seed, kProposeTag));

    // GP fitting starts only after a handful of space-filling evaluations:
    // a Latin-hypercube design, so the initial points stratify every
    // dimension instead of clustering the way iid draws can.
    const std::int32_t init_count =
        proposals == Proposals::bayesopt ? std::min<std::int32_t>(5, budget) : budget;
    std::vector<EncodedPoint> init_points;
    if (proposals == Proposals::bayesopt) {
        std::array<std::vector<std::int32_t>, 5> strata;
        for (int dim = 0; dim < 5; ++dim) {
            for (std::int32_t s = 0; s < init_count; ++s) strata[dim].push_back(s);
            std::shuffle(strata[dim].begin(), strata[dim].end(), propose_rng);
        }
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::int32_t i = 0; i < init_count; ++i) {
            EncodedPoint x;
            for (int dim = 0; dim < 5; ++dim) {
                const double cell = (strata[dim][i] + unit(propose_rng)) /
                                    static_cast<double>(init_count);
                x[dim] = cell * space.upper[dim];
            }
            init_points.push_back(x);
        }
    }

    SearchTrace trace;
    std::vector<Observation> observations;
    std::set<std::array<long, 5>> evaluated;
    auto key_of = [&](const EncodedPoint& x) {
        std::array<long, 5> key;
        for (int i = 0; i < 5; ++i) key[i] = std::lround(x[i]);
        return key;
    };

    for (std::int32_t iter = 0; iter < budget; ++iter) {
        if (iter > 0 && wall_budget_seconds &&
            now_seconds() - t_start >= *wall_budget_seconds) {
            break;
        }

        ParamSet params;
        if (iter < init_count) {
            EncodedPoint x =
                proposals == Proposals::bayesopt ? init_points[iter] : space.sample(propose_rng);
            if (proposals == Proposals::bayesopt) {
                for (int tries = 0;
                     tries < 100 && evaluated.count(key_of(encode(decode(x, space), space)));
                     ++tries) {
                    x = space.sample(propose_rng);
                }
            }
            params = decode(x, space);
        } else {
            const GpState gp = gp_fit(observations, space);
            params = propose_next(gp, space, propose_rng);
        }

        const std::uint64_t eval_seed = mix_seed(seed, static_cast<std::uint64_t>(iter));
        const EvalOutcome outcome = evaluate(params, eval_seed);
        trace.records.push_back(make_record(iter, params, outcome, constraint));

        const EncodedPoint x = encode(params, space);
        observations.push_back({x, *trace.records.back().f_gm});
        evaluated.insert(key_of(x));
    }

    // Ties on f_GM (all-infeasible traces share the flat penalty) break
    // toward the least-bad g; failed runs rank last.
    auto tiebreak_g = [&](const TraceRecord& r) {
        if (r.feasible && !*r.feasible && r.inference_seconds <= 0.0) {
            return std::numeric_limits<double>::infinity();  // failed training
        }
        return constraint.mode == ConstraintMode::min_time_given_acc ? r.inference_seconds
                                                                     : -r.accuracy;
    };
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& cur = trace.records[i];
        const auto& best = trace.records[trace.best_index];
        if (*cur.f_gm < *best.f_gm ||
            (*cur.f_gm == *best.f_gm && tiebreak_g(cur) < tiebreak_g(best))) {
            trace.best_index = i;
        }
    }
    trace.total_search_seconds = now_seconds() - t_start;
    return trace;
}

}  // namespace detail

SearchTrace autogm_search(const Dataset& dataset, const BudgetConstraint& constraint,
                          std::int32_t budget, const TrainConfig& train_config,
                          std::uint64_t seed, std::optional<double> wall_budget_seconds) {
    return detail::search_loop(
        detail::Proposals::bayesopt, SearchSpace{}, constraint, budget, seed,
        wall_budget_seconds, [&](const ParamSet& params, std::uint64_t eval_seed) {
            return evaluate_on_dataset(dataset, params, train_config, eval_seed);
        });
}

SearchTrace random_search(const Dataset& dataset, const BudgetConstraint& constraint,
                          std::int32_t budget, const TrainConfig& train_config,
                          std::uint64_t seed, std::optional<double> wall_budget_seconds) {
    return detail::search_loop(
        detail::Proposals::uniform, SearchSpace{}, constraint, budget, seed,
        wall_budget_seconds, [&](const ParamSet& params, std::uint64_t eval_seed) {
            return evaluate_on_dataset(dataset, params, train_config, eval_seed);
        });
}

TraceRecord evaluate_preset(const Dataset& dataset, std::string_view name,
                            const TrainConfig& train_config, std::uint64_t seed,
                            std::optional<std::int32_t> pixie_steps,
                            const BudgetConstraint* constraint) {
    const ParamSet params = preset(name, pixie_steps);
    const std::uint64_t eval_seed = mix_seed(seed, 0);
    const detail::EvalOutcome outcome =
        evaluate_on_dataset(dataset, params, train_config, eval_seed);
    if (outcome.failed) {
        throw TrainingError("preset \"" + std::string(name) + "\" failed to train");
    }

    TraceRecord rec;
    rec.iteration = 0;
    rec.params = params;
    rec.accuracy = outcome.accuracy;
    rec.inference_seconds = outcome.inference_seconds;
    rec.train_seconds = outcome.train_seconds;
    if (constraint) {
        const ObjectiveValue obj =
            evaluate_objective({outcome.accuracy, outcome.inference_seconds}, *constraint);
        rec.f_gm = obj.f_gm;
        rec.feasible = obj.feasible;
    }
    return rec;
}

std::optional<SweepParam> sweep_param_from_string(std::string_view name) {
    if (name == "d") return SweepParam::d;
    if (name == "k") return SweepParam::k;
    if (name == "w") return SweepParam::w;
    if (name == "l") return SweepParam::l;
    if (name == "a") return SweepParam::a;
    return std::nullopt;
}

std::vector<SweepPoint> sweep_parameter(const Dataset& dataset, const ParamSet& base,
                                        SweepParam which, std::span<const std::string> values,
                                        const TrainConfig& train_config, std::uint64_t seed) {
    auto parse_int = [](const std::string& s) {
        std::int32_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw std::invalid_argument("sweep: bad integer value \"" + s + "\"");
        }
        return v;
    };
    auto parse_bool = [](const std::string& s) {
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw std::invalid_argument("sweep: bad boolean value \"" + s + "\"");
    };
    auto parse_strategy = [&parse_int](const std::string& s) {
        if (auto a = strategy_from_string(s)) return *a;
        if (auto a = strategy_from_code(parse_int(s))) return *a;
        throw std::invalid_argument("sweep: bad aggregation value \"" + s + "\"");
    };

    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (const auto& value : values) {
        ParamSet params = base;
        switch (which) {
            case SweepParam::d: params.dim = parse_int(value); break;
            case SweepParam::k: params.steps = parse_int(value); break;
            case SweepParam::w: params.width = parse_int(value); break;
            case SweepParam::l: params.nonlinear = parse_bool(value); break;
            case SweepParam::a: params.aggregation = parse_strategy(value); break;
        }
        params.validate();
        // One shared evaluation seed isolates the effect of the swept value.
        const detail::EvalOutcome outcome =
            evaluate_on_dataset(dataset, params, train_config, mix_seed(seed, 0));
        if (outcome.failed) {
            throw TrainingError("sweep: training failed at value \"" + value + "\"");
        }
        out.push_back({value, outcome.accuracy, outcome.inference_seconds});
    }
    return out;
}

std::string record_to_json(const TraceRecord& record) {
    return record_json(record).dump(2);
}

std::string trace_to_json(const SearchTrace& trace, const BudgetConstraint& constraint,
                          std::int32_t budget, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(constraint.mode);
    j["bound"] = constraint.bound;
    j["lambda"] = constraint.lambda;
    j["budget"] = budget;
    j["seed"] = seed;
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : trace.records) j["records"].push_back(record_json(r));
    j["best_index"] = trace.best_index;
    j["search_s"] = trace.total_search_seconds;
    return j.dump(2);
}

}  // namespace autogm
