#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "autogm/engine.hpp"

namespace autogm {

// One point in the 5-D search space, encoded as (d, k, w, l, a-code). Stored
// unscaled; the kernel min-max scales each coordinate to [0, 1].
using EncodedPoint = std::array<double, 5>;

// Real-valued bounds of the search space, open at zero: d in (0, 300],
// k in (0, 30], w in (0, 50], l in (0, 1), a in (0, 6).
struct SearchSpace {
    std::array<double, 5> upper = {300.0, 30.0, 50.0, 1.0, 6.0};

    bool contains(const EncodedPoint& x) const;
    EncodedPoint sample(std::mt19937_64& rng) const;
    EncodedPoint to_unit(const EncodedPoint& x) const;
};

// (d, k, w, l ? 1 : 0, code(a)). Requires in-range parameters; width == -1 is
// reachable by presets only, not by the search space.
EncodedPoint encode(const ParamSet& params, const SearchSpace& space = {});

// d, k, w rounded to nearest integer (minimum 1); l = (round == 1); a from
// round-to-nearest over {0..5} after clamping.
ParamSet decode(const EncodedPoint& x, const SearchSpace& space = {});

struct Observation {
    EncodedPoint x;
    double y;  // f_GM
};

// Matern-5/2 kernel with per-dimension length-scales over unit-scaled
// coordinates, plus observation noise.
struct GpHyperparams {
    double signal_variance = 1.0;
    std::array<double, 5> length_scales = {0.5, 0.5, 0.5, 0.5, 0.5};
    double noise_variance = 1e-6;
};

struct GpConfig {
    // Log-space bounds for maximum-likelihood hyperparameter search. The
    // length-scale cap keeps some structure expressible over the unit cube,
    // and the noise cap stops the fit from explaining the infeasibility
    // cliff away as observation noise.
    double signal_lower = 1e-3, signal_upper = 1e3;
    double length_lower = 5e-2, length_upper = 3.0;
    double noise_lower = 1e-8, noise_upper = 1e-2;
    std::int32_t starts = 24;
    // When set, skips the likelihood search entirely.
    std::optional<GpHyperparams> fixed;

    // Pins the noise variance at 1e-10 so the posterior interpolates the data.
    static GpConfig noiseless();
};

// Fitted surrogate: training points, hyperparameters, and the cached Cholesky
// factorization of K + sigma_n^2 I (+ jitter). Targets are standardized
// internally; posteriors are reported on the original scale.
struct GpState {
    SearchSpace space;
    std::vector<Observation> observations;
    GpHyperparams hyper;
    double y_mean = 0.0;
    double y_scale = 1.0;
    double jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> factorization;
    Eigen::VectorXd alpha;  // (K + sigma_n^2 I)^{-1} y_std

    double best_observed() const;
};

double matern52(const GpHyperparams& h, const EncodedPoint& unit_a, const EncodedPoint& unit_b);

// Hyperparameters by multi-start bounded maximization of the log marginal
// likelihood (deterministic); Gram factorization cached with jitter
// escalation 1e-10 -> 1e-6. Throws std::runtime_error if the factorization
// still fails at maximum jitter.
GpState gp_fit(std::span<const Observation> observations, const SearchSpace& space = {},
               const GpConfig& config = {});

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;  // clamped at 0 from below
};

Posterior gp_posterior(const GpState& gp, const EncodedPoint& x);

// Expected Improvement for minimization with exploration margin xi = 0.01:
// EI = (best - mu - xi) Phi(z) + sigma phi(z), z = (best - mu - xi) / sigma,
// and max(0, best - mu - xi) when sigma = 0.
double expected_improvement(double mean, double sigma, double best_y);

double acquisition(const GpState& gp, const EncodedPoint& x, double best_y);

// Maximizes EI over 10,000 uniform candidates plus coordinate refinement of
// the top 10; never re-proposes an already-evaluated encoded point.
ParamSet propose_next(const GpState& gp, const SearchSpace& space, std::mt19937_64& rng);

}  // namespace autogm
