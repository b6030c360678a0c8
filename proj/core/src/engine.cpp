#include "autogm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace autogm {

const char* to_string(AggregationStrategy a) {
    switch (a) {
        case AggregationStrategy::NN: return "NN";
        case AggregationStrategy::NS: return "NS";
        case AggregationStrategy::NA: return "NA";
        case AggregationStrategy::SN: return "SN";
        case AggregationStrategy::SS: return "SS";
        case AggregationStrategy::SA: return "SA";
    }
    return "?";
}

std::optional<AggregationStrategy> strategy_from_string(std::string_view name) {
    for (auto a : kAllStrategies) {
        if (name == to_string(a)) return a;
    }
    return std::nullopt;
}

std::optional<AggregationStrategy> strategy_from_code(std::int64_t code) {
    if (code < 0 || code > 5) return std::nullopt;
    return static_cast<AggregationStrategy>(code);
}

void ParamSet::validate() const {
    if (dim < 1) throw std::invalid_argument("ParamSet: dim must be positive");
    if (steps < 1) throw std::invalid_argument("ParamSet: steps must be positive");
    if (width == 0 || width < -1) {
        throw std::invalid_argument("ParamSet: width must be -1 or positive");
    }
}

SampledAdjacency sample_neighbors(const SparseGraph& graph, std::int32_t width,
                                  std::mt19937_64& rng) {
    if (width == 0 || width < -1) {
        throw std::invalid_argument("sample_neighbors: width must be -1 or positive");
    }

    SampledAdjacency out;
    out.counts.n = graph.node_count;

    if (width == -1) {
        // Pass-through: every neighbor once.
        out.counts.row_offsets = graph.row_offsets;
        out.counts.col_indices = graph.col_indices;
        out.counts.values.assign(graph.col_indices.size(), 1);
        return out;
    }

    out.counts.row_offsets.assign(graph.node_count + 1, 0);
    std::vector<std::int32_t> draws(width);
    for (std::int64_t u = 0; u < graph.node_count; ++u) {
        const std::int64_t deg = graph.degree(u);
        if (deg == 0) {
            out.counts.row_offsets[u + 1] = out.counts.row_offsets[u];
            continue;
        }
        std::uniform_int_distribution<std::int64_t> pick(0, deg - 1);
        for (std::int32_t i = 0; i < width; ++i) {
            draws[i] = graph.col_indices[graph.row_offsets[u] + pick(rng)];
        }
        std::sort(draws.begin(), draws.end());
        for (std::int32_t i = 0; i < width;) {
            std::int32_t j = i;
            while (j < width && draws[j] == draws[i]) ++j;
            out.counts.col_indices.push_back(draws[i]);
            out.counts.values.push_back(j - i);
            i = j;
        }
        out.counts.row_offsets[u + 1] = static_cast<std::int64_t>(out.counts.col_indices.size());
    }
    return out;
}

AggregationOperator build_aggregation(const SampledAdjacency& sampled, AggregationStrategy a,
                                      DegreeMode degree_mode) {
    const auto& s = sampled.counts;
    const std::int64_t n = s.n;

    AggregationOperator op;
    op.n = n;
    op.row_offsets.assign(n + 1, 0);

    const bool self_loop = has_self_loop(a);

    // M = sampled (N*) or sampled + I (S*), rows kept sorted.
    std::vector<double> degrees(n, 0.0);
    for (std::int64_t u = 0; u < n; ++u) {
        double row_sum = 0.0;
        for (std::int64_t e = s.row_offsets[u]; e < s.row_offsets[u + 1]; ++e) {
            row_sum += s.values[e];
        }
        if (degree_mode == DegreeMode::adjacency_only) {
            degrees[u] = row_sum;
        } else {
            degrees[u] = row_sum + (self_loop ? 1.0 : 0.0);
        }
    }

    auto scale = [&](std::int64_t u, std::int64_t v) -> double {
        switch (normalization_of(a)) {
            case Normalization::none: return 1.0;
            case Normalization::asymmetric:
                return degrees[u] > 0.0 ? 1.0 / degrees[u] : 0.0;  // 0^{-1} = 0
            case Normalization::symmetric: {
                const double du = degrees[u] > 0.0 ? 1.0 / std::sqrt(degrees[u]) : 0.0;
                const double dv = degrees[v] > 0.0 ? 1.0 / std::sqrt(degrees[v]) : 0.0;
                return du * dv;
            }
        }
        return 1.0;
    };

    for (std::int64_t u = 0; u < n; ++u) {
        bool diag_written = !self_loop;
        for (std::int64_t e = s.row_offsets[u]; e < s.row_offsets[u + 1]; ++e) {
            const std::int32_t v = s.col_indices[e];
            if (!diag_written && v > u) {
                op.col_indices.push_back(static_cast<std::int32_t>(u));
                op.values.push_back(scale(u, u));
                diag_written = true;
            }
            op.col_indices.push_back(v);
            op.values.push_back(s.values[e] * scale(u, v));
        }
        if (!diag_written) {
            op.col_indices.push_back(static_cast<std::int32_t>(u));
            op.values.push_back(scale(u, u));
        }
        op.row_offsets[u + 1] = static_cast<std::int64_t>(op.col_indices.size());
    }
    return op;
}

Eigen::MatrixXd forward(const Dataset& dataset, const ParamSet& params,
                        std::span<const Eigen::MatrixXd> layer_weights, std::mt19937_64& rng,
                        bool train_mode, double dropout, DegreeMode degree_mode) {
    params.validate();
    if (static_cast<std::int64_t>(layer_weights.size()) != params.steps) {
        throw std::invalid_argument("forward: expected one weight matrix per step");
    }
    if (layer_weights[0].rows() != dataset.feature_dim()) {
        throw std::invalid_argument("forward: W_1 rows must equal feature dimension");
    }
    for (std::size_t i = 0; i < layer_weights.size(); ++i) {
        if (i > 0 && layer_weights[i].rows() != params.dim) {
            throw std::invalid_argument("forward: W_i rows must equal dim");
        }
        if (layer_weights[i].cols() != params.dim) {
            throw std::invalid_argument("forward: W_i cols must equal dim");
        }
    }

    const bool use_dropout = train_mode && dropout > 0.0;
    std::bernoulli_distribution keep(1.0 - dropout);

    // With width == -1 the operator is sampling-free and identical each step.
    AggregationOperator shared_op;
    if (params.width == -1) {
        shared_op = build_aggregation(sample_neighbors(dataset.graph, -1, rng),
                                      params.aggregation, degree_mode);
    }

    Eigen::MatrixXd x = dataset.features;
    for (std::int32_t step = 0; step < params.steps; ++step) {
        if (use_dropout) {
            const double inv_keep = 1.0 / (1.0 - dropout);
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    x(i, j) = keep(rng) ? x(i, j) * inv_keep : 0.0;
                }
            }
        }
        const AggregationOperator& op =
            params.width == -1
                ? shared_op
                : build_aggregation(sample_neighbors(dataset.graph, params.width, rng),
                                    params.aggregation, degree_mode);
        x = spmm(op, x);
        x = x * layer_weights[step];
        if (params.nonlinear) x = x.cwiseMax(0.0);
    }
    return x;
}

std::int32_t pixie_width(std::int32_t steps, std::int32_t budget) {
    if (steps < 1 || budget < steps) {
        throw std::invalid_argument("pixie_width: need steps >= 1 and budget >= steps");
    }
    return budget / steps;
}

ParamSet preset(std::string_view name, std::optional<std::int32_t> pixie_steps) {
    if (name == "pagerank") return {1, 30, -1, false, AggregationStrategy::NA};
    if (name == "gcn") return {64, 2, -1, true, AggregationStrategy::SS};
    if (name == "graphsage") return {64, 2, 25, true, AggregationStrategy::SA};
    if (name == "sgcn") return {64, 2, -1, false, AggregationStrategy::SS};
    if (name == "pixie") {
        if (!pixie_steps) throw std::invalid_argument("preset: pixie requires pixie_steps");
        return {1, *pixie_steps, pixie_width(*pixie_steps), false, AggregationStrategy::NA};
    }
    throw std::invalid_argument("preset: unknown name \"" + std::string(name) + "\"");
}

}  // namespace autogm
