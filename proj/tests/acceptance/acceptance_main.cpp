// Acceptance suite. Runs each numbered criterion at its pinned tolerance and
// prints exactly one PASS/FAIL/SKIP line per criterion.
//
//   acceptance               runs everything
//   acceptance --criterion N runs one criterion
//
// Exit code: 0 when every executed criterion passes (skips count as pass),
// 77 when a single requested criterion was skipped, 1 otherwise.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "autogm/bayesopt.hpp"
#include "autogm/graph.hpp"
#include "autogm/objective.hpp"
#include "autogm/rng.hpp"
#include "autogm/search.hpp"
#include "autogm/trainer.hpp"

#include "../gradcheck.hpp"
#include "../oracles.hpp"

namespace {

using namespace autogm;

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict = Verdict::pass;
    std::string detail;
};

struct Checker {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& label) {
        if (!condition) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << "FAILED: " << label;
        }
    }
    void note(const std::string& text) {
        if (detail.tellp() > 0) detail << "; ";
        detail << text;
    }
};

// The shared desk-scale fixture: one seed-pinned stochastic-block-model
// dataset on which the search criteria run.
Dataset acceptance_fixture() {
    return generate_sbm(400, 4, 0.15, 0.002, 16, 1.0, 424242);
}

// Robust per-model timing for comparisons between configurations: the
// minimum over repeated protocol measurements approaches the unloaded
// machine's time, which is what the comparisons are about.
double floor_time(const TrainedModel& model, const Dataset& dataset, int reps,
                  std::uint64_t seed) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < reps; ++r) {
        auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        best = std::min(best, measure_inference_time(model, dataset, rng));
    }
    return best;
}

// --- criterion 1 ---------------------------------------------------------

Outcome dense_oracle_equivalence() {
    Checker c;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const std::int64_t n = 5 + static_cast<std::int64_t>(seed % 16);  // up to 20
        const std::int32_t steps = 1 + static_cast<std::int32_t>(seed % 3);
        Dataset d = testing::random_dataset(n, 3, 2, 0.35, seed);
        for (auto a : kAllStrategies) {
            for (bool nonlinear : {false, true}) {
                ParamSet params{2, steps, -1, nonlinear, a};
                WeightStack w = init_weights(3, 2, steps, 2, seed + 1);
                auto rng = make_rng(0);
                const Eigen::MatrixXd sparse = forward(d, params, w.layers, rng, false);
                const Eigen::MatrixXd oracle =
                    testing::dense_forward(d.graph, d.features, params, w.layers);
                worst = std::max(worst, (sparse - oracle).cwiseAbs().maxCoeff());
            }
        }
    }
    c.require(worst < 1e-10, "max |sparse - dense| >= 1e-10");
    c.note("50 graphs x 6 strategies x {linear,relu}, max |delta| = " + std::to_string(worst));
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 2 ---------------------------------------------------------

Outcome gradient_correctness() {
    Checker c;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const std::int64_t n = 7 + i % 4;                       // <= 10
        const std::int64_t d0 = 2 + i % 4;                      // up to 5
        const std::int32_t dim = (i % 5 == 0) ? 1 : 2 + i % 3;  // includes d=1, d0>1
        const std::int32_t steps = 1 + i % 3;
        const auto a = kAllStrategies[i % 6];
        const bool nonlinear = i % 2 == 1;
        Dataset d = testing::random_dataset(n, d0, 2, 0.4, 1000 + i);
        ParamSet params{dim, steps, -1, nonlinear, a};
        WeightStack w = init_weights(d0, dim, steps, 2, 51 + i);
        worst = std::max(worst, testing::max_gradient_error(d, params, w, 1e-5));
    }
    c.require(worst < 1e-4, "max relative gradient error >= 1e-4");
    c.note("20 instances, max relative error = " + std::to_string(worst));
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 3 ---------------------------------------------------------

Outcome pagerank_reproduction() {
    Checker c;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const std::int64_t n = 30 + 15 * static_cast<std::int64_t>(seed);  // up to 90
        SparseGraph g = testing::random_graph(n, 0.08, seed);
        Dataset d;
        d.graph = g;
        d.features = Eigen::MatrixXd::Constant(n, 1, 1.0 / static_cast<double>(n));
        d.labels.assign(n, 0);
        d.labels[0] = 1;
        d.class_count = 2;
        d.split.assign(n, Split::test);
        d.split[0] = Split::train;
        d.split[1] = Split::val;

        const ParamSet params = preset("pagerank");
        std::vector<Eigen::MatrixXd> frozen(params.steps, Eigen::MatrixXd::Constant(1, 1, 0.85));
        auto rng = make_rng(0);
        const Eigen::MatrixXd scores = forward(d, params, frozen, rng, false);
        const Eigen::VectorXd oracle = testing::power_iteration(g, 0.85, params.steps);
        worst = std::max(worst, (scores.col(0) - oracle).cwiseAbs().maxCoeff());
    }
    c.require(worst < 1e-8, "per-node deviation from power iteration >= 1e-8");
    c.note("5 graphs (n 30..90), 30 steps, max |delta| = " + std::to_string(worst));
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 4 ---------------------------------------------------------

std::filesystem::path find_cora() {
    if (const char* env = std::getenv("AUTOGM_CORA_DIR"); env && *env) return env;
    for (const char* candidate : {"data/cora", "../data/cora", "../../data/cora"}) {
        if (std::filesystem::exists(std::filesystem::path(candidate) / "graph.tsv")) {
            return candidate;
        }
    }
    return {};
}

Outcome cora_gcn_baseline() {
    const auto dir = find_cora();
    if (dir.empty()) {
        return {Verdict::skip,
                "Cora not found (set AUTOGM_CORA_DIR or place data/cora); criterion 5 stands in"};
    }
    Checker c;
    Dataset cora = load_dataset(dir);
    TrainConfig config;  // published hyperparameters are the defaults
    config.seed = 0;
    TrainedModel model = train(cora, preset("gcn"), config);
    auto rng = make_rng(0);
    const double test_acc = evaluate_accuracy(model, cora, Split::test, rng);
    c.require(test_acc >= 0.75, "GCN test accuracy < 0.75");
    c.note("GCN test accuracy = " + std::to_string(test_acc));
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criteria 5 and 6 ----------------------------------------------------

Outcome constraint_satisfaction() {
    Checker c;
    Dataset fixture = acceptance_fixture();
    TrainConfig config;

    const TraceRecord gcn = evaluate_preset(fixture, "gcn", config, 0);
    BudgetConstraint constraint{ConstraintMode::min_time_given_acc, gcn.accuracy - 0.05, 1e-19,
                                1e-12};
    // One stable reference time for the comparison half of the criterion.
    TrainConfig gcn_config = config;
    gcn_config.seed = mix_seed(0, 0);
    TrainedModel gcn_model = train(fixture, preset("gcn"), gcn_config);
    const double gcn_time = floor_time(gcn_model, fixture, 9, 7);

    int feasible = 0, not_slower = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SearchTrace trace = autogm_search(fixture, constraint, 20, config, seed);
        const TraceRecord& best = trace.records[trace.best_index];
        if (best.feasible && *best.feasible) ++feasible;
        // Same floor estimator on both sides of the comparison. Retraining
        // with the trace's derived seed reproduces the evaluated model.
        TrainConfig best_config = config;
        best_config.seed = mix_seed(seed, static_cast<std::uint64_t>(best.iteration));
        const TrainedModel best_model = train(fixture, best.params, best_config);
        if (floor_time(best_model, fixture, 9, seed) <= gcn_time) ++not_slower;
    }
    c.require(feasible >= 9, "feasible best in fewer than 9/10 seeds");
    c.require(not_slower >= 7, "best inference time beat the wide preset in fewer than 7/10");
    c.note("acc_min = " + std::to_string(constraint.bound) + ", feasible " +
           std::to_string(feasible) + "/10, not slower " + std::to_string(not_slower) + "/10");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

Outcome beats_random_search() {
    Checker c;
    Dataset fixture = acceptance_fixture();
    TrainConfig config;

    const TraceRecord gcn = evaluate_preset(fixture, "gcn", config, 0);
    BudgetConstraint constraint{ConstraintMode::min_time_given_acc, gcn.accuracy - 0.05, 1e-19,
                                1e-12};

    // Best feasible record per trace, re-timed with one shared floor
    // estimator so both methods' times carry the same measurement quality.
    auto best_feasible_time = [&](const SearchTrace& trace, std::uint64_t seed) {
        const TraceRecord* best = nullptr;
        for (const auto& r : trace.records) {
            if (r.feasible && *r.feasible &&
                (!best || r.inference_seconds < best->inference_seconds)) {
                best = &r;
            }
        }
        if (!best) return std::numeric_limits<double>::infinity();
        TrainConfig rerun = config;
        rerun.seed = mix_seed(seed, static_cast<std::uint64_t>(best->iteration));
        return floor_time(train(fixture, best->params, rerun), fixture, 9, seed);
    };

    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double bo = best_feasible_time(autogm_search(fixture, constraint, 20, config, seed),
                                             seed);
        const double rs = best_feasible_time(random_search(fixture, constraint, 20, config, seed),
                                             seed);
        if (bo <= rs) ++wins;
    }
    c.require(wins >= 7, "paired wins below 7/10");
    c.note("equal budget 20, paired seeds: " + std::to_string(wins) + "/10 not slower");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 7 ---------------------------------------------------------

Outcome objective_suite() {
    Checker c;
    const BudgetConstraint constraint{ConstraintMode::min_time_given_acc, 0.3, 1e-19, 1e-12};

    // Barrier monotonicity in slack at a visible lambda.
    const BudgetConstraint visible{ConstraintMode::min_time_given_acc, 0.3, 0.05, 1e-12};
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double slack = 0.01; slack <= 0.7; slack += 0.01) {
        const double f = evaluate_objective({0.3 + slack, 1.0}, visible).f_gm;
        monotone = monotone && f < prev;
        prev = f;
    }
    c.require(monotone, "f_GM not strictly decreasing in slack");

    // Infeasible penalty dominates every feasible score up to the cap.
    const double penalty = evaluate_objective({0.29, 0.001}, constraint).f_gm;
    bool dominated = true;
    for (double t : {1e-9, 1e-3, 1.0, 100.0, 999.9}) {
        dominated = dominated && evaluate_objective({0.9, t}, constraint).f_gm < penalty;
    }
    c.require(dominated, "a feasible point scored worse than the penalty");

    // Negligible barrier at the published lambda.
    bool negligible = true;
    for (double slack : {1e-12, 1e-9, 1e-3, 0.5}) {
        const auto v = evaluate_objective({0.3 + slack, 0.123}, constraint);
        negligible = negligible && v.feasible && std::fabs(v.f_gm - 0.123) < 1e-17;
    }
    c.require(negligible, "|f_GM - g| >= 1e-17 for a feasible point");

    c.note("barrier monotone, penalty dominant, |f_GM - g| < 1e-17 at lambda = 1e-19");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 8 ---------------------------------------------------------

Outcome gp_identities() {
    Checker c;

    std::vector<Observation> obs;
    auto rng = make_rng(21);
    SearchSpace space;
    for (int i = 0; i < 8; ++i) {
        const EncodedPoint x = space.sample(rng);
        obs.push_back({x, std::sin(x[0] / 50.0) + 0.01 * x[1]});
    }

    GpState noiseless = gp_fit(obs, space, GpConfig::noiseless());
    double worst_interp = 0.0;
    for (const auto& o : obs) {
        worst_interp = std::max(worst_interp, std::fabs(gp_posterior(noiseless, o.x).mean - o.y));
    }
    c.require(worst_interp < 1e-8, "noiseless posterior does not interpolate");

    GpState fitted = gp_fit(obs, space);
    bool nonneg = true;
    for (int i = 0; i < 200; ++i) {
        nonneg = nonneg && gp_posterior(fitted, space.sample(rng)).variance >= 0.0;
    }
    c.require(nonneg, "negative posterior variance");

    GpConfig fixed;
    fixed.fixed = fitted.hyper;
    auto grown = obs;
    grown.push_back({space.sample(rng), 0.2});
    GpState updated = gp_fit(grown, space, fixed);
    bool non_increasing = true;
    for (int i = 0; i < 100; ++i) {
        const EncodedPoint x = space.sample(rng);
        non_increasing = non_increasing && gp_posterior(updated, x).variance <=
                                               gp_posterior(fitted, x).variance + 1e-10;
    }
    c.require(non_increasing, "posterior variance grew after adding an observation");

    c.note("interpolation max |mu - y| = " + std::to_string(worst_interp) +
           ", variance nonnegative at 200 probes, non-increasing at 100 probes");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 9 ---------------------------------------------------------

Outcome encoding_fidelity() {
    Checker c;
    const std::int32_t dims[] = {1, 34, 67, 100, 133, 166, 199, 232, 265, 300};
    const std::int32_t steps[] = {1, 4, 7, 10, 13, 16, 19, 22, 25, 30};
    const std::int32_t widths[] = {1, 13, 25, 37, 50};
    const AggregationStrategy strategies[] = {AggregationStrategy::NA, AggregationStrategy::SS};

    int count = 0;
    bool all_ok = true;
    for (auto d : dims) {
        for (auto k : steps) {
            for (auto w : widths) {
                for (bool l : {false, true}) {
                    for (auto a : strategies) {
                        const ParamSet p{d, k, w, l, a};
                        all_ok = all_ok && decode(encode(p)) == p;
                        ++count;
                    }
                }
            }
        }
    }
    c.require(all_ok, "decode(encode(p)) != p somewhere on the grid");
    c.require(count == 2000, "grid size drifted from 2000");

    // The published worked mapping: 0.7 rounds to True, 4 maps to SS.
    const ParamSet worked = decode({70.4, 4.2, 25.0, 0.7, 4.3});
    c.require(worked == ParamSet{70, 4, 25, true, AggregationStrategy::SS},
              "worked decode mapping mismatch");
    c.note("2000-point grid round-trips; worked mapping decodes to (70,4,25,True,SS)");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

// --- criterion 10 --------------------------------------------------------

// Allow at most one adjacent inversion no deeper than 10%.
bool mostly_monotone(const std::vector<double>& t, int* inversions, double* worst_depth) {
    *inversions = 0;
    *worst_depth = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] < t[i - 1]) {
            ++*inversions;
            *worst_depth = std::max(*worst_depth, 1.0 - t[i] / t[i - 1]);
        }
    }
    return *inversions <= 1 && *worst_depth <= 0.10;
}

Outcome sweep_sanity() {
    Checker c;
    Dataset fixture = acceptance_fixture();
    TrainConfig config;
    config.seed = 3;

    // Per-value timing: train every model first, then measure round-robin
    // and keep each value's floor, so machine drift lands on all points
    // equally instead of inverting the small-work neighbors.
    auto series = [&](SweepParam which, const std::vector<std::int32_t>& values,
                      std::vector<double>& accs) {
        ParamSet base{64, 2, -1, true, AggregationStrategy::SS};
        std::vector<TrainedModel> models;
        for (auto v : values) {
            ParamSet p = base;
            if (which == SweepParam::d) p.dim = v;
            if (which == SweepParam::k) p.steps = v;
            models.push_back(train(fixture, p, config));
            auto rng = make_rng(v);
            accs.push_back(evaluate_accuracy(models.back(), fixture, Split::val, rng));
        }
        std::vector<double> times(values.size(), std::numeric_limits<double>::infinity());
        for (int r = 0; r < 15; ++r) {
            for (std::size_t i = 0; i < models.size(); ++i) {
                auto rng = make_rng(mix_seed(static_cast<std::uint64_t>(r), i));
                times[i] = std::min(times[i], measure_inference_time(models[i], fixture, rng));
            }
        }
        return times;
    };

    int inversions = 0;
    double depth = 0.0;
    std::vector<double> acc_d, acc_k;
    const auto t_d = series(SweepParam::d, {1, 4, 16, 64, 128}, acc_d);
    const bool d_ok = mostly_monotone(t_d, &inversions, &depth);
    c.require(d_ok, "inference time not non-decreasing in d (" + std::to_string(inversions) +
                        " inversions, worst " + std::to_string(depth) + ")");

    const auto t_k = series(SweepParam::k, {1, 2, 4, 8}, acc_k);
    const bool k_ok = mostly_monotone(t_k, &inversions, &depth);
    c.require(k_ok, "inference time not non-decreasing in k (" + std::to_string(inversions) +
                        " inversions, worst " + std::to_string(depth) + ")");

    // Nonlinearity cost: measured where the activation pass is a resolvable
    // share of the forward (d = 16, k = 16), with interleaved repeated
    // measurement per side.
    int slower = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TrainConfig pair_config = config;
        pair_config.seed = seed;
        ParamSet with{16, 16, -1, true, AggregationStrategy::SS};
        ParamSet without{16, 16, -1, false, AggregationStrategy::SS};
        TrainedModel m_with = train(fixture, with, pair_config);
        TrainedModel m_without = train(fixture, without, pair_config);
        double t_with = std::numeric_limits<double>::infinity();
        double t_without = std::numeric_limits<double>::infinity();
        for (int r = 0; r < 15; ++r) {
            auto r1 = make_rng(mix_seed(seed, 2 * r));
            auto r2 = make_rng(mix_seed(seed, 2 * r + 1));
            if (r % 2 == 0) {
                t_with = std::min(t_with, measure_inference_time(m_with, fixture, r1));
                t_without = std::min(t_without, measure_inference_time(m_without, fixture, r2));
            } else {
                t_without = std::min(t_without, measure_inference_time(m_without, fixture, r2));
                t_with = std::min(t_with, measure_inference_time(m_with, fixture, r1));
            }
        }
        if (t_with > t_without) ++slower;
    }
    c.require(slower >= 8, "nonlinearity slower in only " + std::to_string(slower) + "/10 seeds");

    // Accuracy-side effects are observed and reported, not asserted.
    std::ostringstream acc_report;
    acc_report << "observed acc over d {1,4,16,64,128}: ";
    for (double a : acc_d) acc_report << a << " ";
    acc_report << "| over k {1,2,4,8}: ";
    for (double a : acc_k) acc_report << a << " ";
    c.note(acc_report.str() + "| nonlinearity slower " + std::to_string(slower) + "/10");
    return {c.ok ? Verdict::pass : Verdict::fail, c.detail.str()};
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

const Criterion kCriteria[] = {
    {1, "dense-oracle equivalence", dense_oracle_equivalence},
    {2, "gradient correctness", gradient_correctness},
    {3, "score-propagation reproduction", pagerank_reproduction},
    {4, "Cora GCN baseline", cora_gcn_baseline},
    {5, "constraint satisfaction on synthetic data", constraint_satisfaction},
    {6, "search beats the random baseline", beats_random_search},
    {7, "objective unit suite", objective_suite},
    {8, "GP identities", gp_identities},
    {9, "encoding fidelity", encoding_fidelity},
    {10, "sweep sanity", sweep_sanity},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
        }
    }

    bool any_fail = false;
    bool single_skip = false;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.number != only) continue;
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = {Verdict::fail, std::string("exception: ") + e.what()};
        }
        const char* verdict = outcome.verdict == Verdict::pass
                                  ? "PASS"
                                  : (outcome.verdict == Verdict::fail ? "FAIL" : "SKIP");
        std::printf("criterion %02d [%s]: %s%s%s\n", criterion.number, criterion.name, verdict,
                    outcome.detail.empty() ? "" : " - ", outcome.detail.c_str());
        std::fflush(stdout);
        if (outcome.verdict == Verdict::fail) any_fail = true;
        if (outcome.verdict == Verdict::skip && only != 0) single_skip = true;
    }
    if (any_fail) return 1;
    if (single_skip) return 77;
    return 0;
}
