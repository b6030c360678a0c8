#include "autogm/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "autogm/rng.hpp"

namespace autogm {

namespace {

constexpr double kXi = 0.01;           // EI exploration margin
constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-6;
constexpr std::uint64_t kFitSeed = 0x6770666974ULL;  // fixed: gp_fit takes no rng

double norm_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Eigen::MatrixXd gram(const GpHyperparams& h, const std::vector<EncodedPoint>& unit) {
    const auto t = static_cast<Eigen::Index>(unit.size());
    Eigen::MatrixXd k(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            k(i, j) = k(j, i) = matern52(h, unit[i], unit[j]);
        }
    }
    return k;
}

// Cholesky of K + noise I + jitter I with escalating jitter. Returns the
// jitter that succeeded, or nullopt.
std::optional<double> factorize(Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& k,
                                double noise_variance) {
    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd m = k;
        m.diagonal().array() += noise_variance + jitter;
        llt.compute(m);
        if (llt.info() == Eigen::Success) return jitter;
    }
    return std::nullopt;
}

// Log marginal likelihood of standardized targets under hyperparams theta.
double log_marginal_likelihood(const GpHyperparams& h, const std::vector<EncodedPoint>& unit,
                               const Eigen::VectorXd& y) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    const auto jitter = factorize(llt, gram(h, unit), h.noise_variance);
    if (!jitter) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * log_det -
           0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

// theta = log([signal, l_1..l_5, noise]).
GpHyperparams unpack(const Eigen::Matrix<double, 7, 1>& theta) {
    GpHyperparams h;
    h.signal_variance = std::exp(theta(0));
    for (int i = 0; i < 5; ++i) h.length_scales[i] = std::exp(theta(1 + i));
    h.noise_variance = std::exp(theta(6));
    return h;
}

}  // namespace

bool SearchSpace::contains(const EncodedPoint& x) const {
    // Closure of the open lower bounds: encode maps l = False and a = NN to
    // exactly 0, and decode handles boundary reals.
    for (int i = 0; i < 5; ++i) {
        if (!(x[i] >= 0.0 && x[i] <= upper[i])) return false;
    }
    return true;
}

EncodedPoint SearchSpace::sample(std::mt19937_64& rng) const {
    EncodedPoint x;
    for (int i = 0; i < 5; ++i) {
        std::uniform_real_distribution<double> u(0.0, upper[i]);
        x[i] = u(rng);
    }
    return x;
}

EncodedPoint SearchSpace::to_unit(const EncodedPoint& x) const {
    EncodedPoint u;
    for (int i = 0; i < 5; ++i) u[i] = x[i] / upper[i];
    return u;
}

EncodedPoint encode(const ParamSet& params, const SearchSpace& space) {
    params.validate();
    if (params.width == -1) {
        throw std::invalid_argument("encode: width -1 is not representable in the search space");
    }
    EncodedPoint x = {static_cast<double>(params.dim), static_cast<double>(params.steps),
                      static_cast<double>(params.width), params.nonlinear ? 1.0 : 0.0,
                      static_cast<double>(params.aggregation)};
    if (!space.contains(x)) throw std::invalid_argument("encode: parameters out of range");
    return x;
}

ParamSet decode(const EncodedPoint& x, const SearchSpace& space) {
    auto round_at_least_one = [](double v, double hi) {
        const auto r = std::lround(std::min(v, hi));
        return static_cast<std::int32_t>(std::max<long>(1, r));
    };
    ParamSet p;
    p.dim = round_at_least_one(x[0], space.upper[0]);
    p.steps = round_at_least_one(x[1], space.upper[1]);
    p.width = round_at_least_one(x[2], space.upper[2]);
    p.nonlinear = std::lround(std::clamp(x[3], 0.0, 1.0)) == 1;
    p.aggregation = *strategy_from_code(std::lround(std::clamp(x[4], 0.0, 5.0)));
    return p;
}

GpConfig GpConfig::noiseless() {
    GpConfig c;
    c.noise_lower = 1e-10;
    c.noise_upper = 1e-10;
    return c;
}

double matern52(const GpHyperparams& h, const EncodedPoint& unit_a, const EncodedPoint& unit_b) {
    double r2 = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double d = (unit_a[i] - unit_b[i]) / h.length_scales[i];
        r2 += d * d;
    }
    const double r = std::sqrt(r2);
    const double s = std::sqrt(5.0) * r;
    return h.signal_variance * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

double GpState::best_observed() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : observations) best = std::min(best, o.y);
    return best;
}

GpState gp_fit(std::span<const Observation> observations, const SearchSpace& space,
               const GpConfig& config) {
    if (observations.empty()) throw std::invalid_argument("gp_fit: need at least 1 observation");

    GpState gp;
    gp.space = space;
    gp.observations.assign(observations.begin(), observations.end());

    const auto t = static_cast<Eigen::Index>(observations.size());
    Eigen::VectorXd y_raw(t);
    std::vector<EncodedPoint> unit(observations.size());
    for (Eigen::Index i = 0; i < t; ++i) {
        y_raw(i) = observations[i].y;
        unit[i] = space.to_unit(observations[i].x);
    }

    gp.y_mean = y_raw.mean();
    const double var = (y_raw.array() - gp.y_mean).square().sum() / static_cast<double>(t);
    gp.y_scale = std::sqrt(var);
    if (!(gp.y_scale > 1e-12)) gp.y_scale = 1.0;
    const Eigen::VectorXd y = (y_raw.array() - gp.y_mean) / gp.y_scale;

    if (config.fixed) {
        gp.hyper = *config.fixed;
    } else {
        using Theta = Eigen::Matrix<double, 7, 1>;
        Theta lo, hi;
        lo(0) = std::log(config.signal_lower);
        hi(0) = std::log(config.signal_upper);
        for (int i = 1; i <= 5; ++i) {
            lo(i) = std::log(config.length_lower);
            hi(i) = std::log(config.length_upper);
        }
        lo(6) = std::log(config.noise_lower);
        hi(6) = std::log(config.noise_upper);

        auto objective = [&](const Theta& theta) {
            return log_marginal_likelihood(unpack(theta), unit, y);
        };

        // Compass search from each start: cycle coordinates with +-step in
        // log-space, halve the step when no move improves.
        auto refine = [&](Theta theta, double value) {
            double step = 0.8;
            while (step > 1e-3) {
                bool improved = false;
                for (int j = 0; j < 7; ++j) {
                    if (lo(j) == hi(j)) continue;  // pinned (e.g. fixed noise)
                    for (double sign : {1.0, -1.0}) {
                        Theta probe = theta;
                        probe(j) = std::clamp(theta(j) + sign * step, lo(j), hi(j));
                        if (probe(j) == theta(j)) continue;
                        const double v = objective(probe);
                        if (v > value) {
                            value = v;
                            theta = probe;
                            improved = true;
                        }
                    }
                }
                if (!improved) step *= 0.5;
            }
            return std::make_pair(theta, value);
        };

        auto rng = make_rng(mix_seed(kFitSeed, static_cast<std::uint64_t>(t)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        Theta center;
        center(0) = 0.0;  // signal variance 1 on standardized targets
        for (int i = 1; i <= 5; ++i) center(i) = std::log(0.5);
        center(6) = std::clamp(std::log(1e-4), lo(6), hi(6));

        Theta best_theta = center;
        double best_value = objective(center);
        for (std::int32_t s = 0; s < config.starts; ++s) {
            Theta start;
            for (int j = 0; j < 7; ++j) start(j) = lo(j) + u01(rng) * (hi(j) - lo(j));
            auto [theta, value] = refine(start, objective(start));
            if (value > best_value) {
                best_value = value;
                best_theta = theta;
            }
        }
        auto [theta, value] = refine(best_theta, best_value);
        gp.hyper = unpack(theta);
    }

    const auto jitter = factorize(gp.factorization, gram(gp.hyper, unit), gp.hyper.noise_variance);
    if (!jitter) {
        throw std::runtime_error("gp_fit: Gram factorization failed at maximum jitter");
    }
    gp.jitter = *jitter;
    gp.alpha = gp.factorization.solve(y);
    return gp;
}

Posterior gp_posterior(const GpState& gp, const EncodedPoint& x) {
    const auto t = static_cast<Eigen::Index>(gp.observations.size());
    const EncodedPoint unit_x = gp.space.to_unit(x);
    Eigen::VectorXd k_star(t);
    for (Eigen::Index i = 0; i < t; ++i) {
        k_star(i) = matern52(gp.hyper, unit_x, gp.space.to_unit(gp.observations[i].x));
    }
    const double mean_std = k_star.dot(gp.alpha);
    const Eigen::VectorXd v = gp.factorization.matrixL().solve(k_star);
    const double var_std =
        std::max(0.0, matern52(gp.hyper, unit_x, unit_x) - v.squaredNorm());
    return {gp.y_mean + gp.y_scale * mean_std, gp.y_scale * gp.y_scale * var_std};
}

double expected_improvement(double mean, double sigma, double best_y) {
    const double improvement = best_y - mean - kXi;
    if (sigma <= 0.0) return std::max(0.0, improvement);
    const double z = improvement / sigma;
    return improvement * norm_cdf(z) + sigma * norm_pdf(z);
}

double acquisition(const GpState& gp, const EncodedPoint& x, double best_y) {
    const Posterior post = gp_posterior(gp, x);
    return expected_improvement(post.mean, std::sqrt(post.variance), best_y);
}

ParamSet propose_next(const GpState& gp, const SearchSpace& space, std::mt19937_64& rng) {
    constexpr int kCandidates = 10000;
    constexpr int kRefined = 10;

    const double best_y = gp.best_observed();

    std::set<std::array<long, 5>> evaluated;
    auto key_of = [&](const EncodedPoint& x) {
        const EncodedPoint canon = encode(decode(x, space), space);
        std::array<long, 5> key;
        for (int i = 0; i < 5; ++i) key[i] = std::lround(canon[i]);
        return key;
    };
    for (const auto& o : gp.observations) evaluated.insert(key_of(o.x));

    std::vector<std::pair<double, EncodedPoint>> pool;
    pool.reserve(kCandidates + kRefined);
    for (int i = 0; i < kCandidates; ++i) {
        EncodedPoint x = space.sample(rng);
        pool.emplace_back(acquisition(gp, x, best_y), x);
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    // Coordinate refinement of the strongest candidates.
    std::vector<std::pair<double, EncodedPoint>> refined;
    for (int c = 0; c < kRefined && c < static_cast<int>(pool.size()); ++c) {
        EncodedPoint x = pool[c].second;
        double value = pool[c].first;
        std::array<double, 5> step;
        for (int j = 0; j < 5; ++j) step[j] = space.upper[j] / 20.0;
        for (int round = 0; round < 40; ++round) {
            bool improved = false;
            for (int j = 0; j < 5; ++j) {
                for (double sign : {1.0, -1.0}) {
                    EncodedPoint probe = x;
                    probe[j] = std::clamp(x[j] + sign * step[j], 0.0, space.upper[j]);
                    const double v = acquisition(gp, probe, best_y);
                    if (v > value) {
                        value = v;
                        x = probe;
                        improved = true;
                    }
                }
            }
            if (!improved) {
                for (auto& s : step) s *= 0.5;
            }
        }
        refined.emplace_back(value, x);
    }
    std::stable_sort(refined.begin(), refined.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    // Refined points first, then the ranked raw candidates; skip anything
    // already evaluated.
    for (const auto& group : {refined, pool}) {
        for (const auto& [value, x] : group) {
            if (!evaluated.count(key_of(x))) return decode(x, space);
        }
    }
    // Every candidate collided (vanishingly unlikely); rejection-sample.
    for (int i = 0; i < 100000; ++i) {
        EncodedPoint x = space.sample(rng);
        if (!evaluated.count(key_of(x))) return decode(x, space);
    }
    throw std::runtime_error("propose_next: search space exhausted");
}

}  // namespace autogm
