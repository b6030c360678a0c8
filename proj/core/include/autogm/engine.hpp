#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <random>
#include <span>
#include <string_view>

#include "autogm/csr.hpp"
#include "autogm/graph.hpp"

namespace autogm {

// First letter: self-loop (S) or not (N). Second: Asymmetric, Symmetric, or
// No-normalization. Integer codes are part of the search-space encoding and
// must stay stable.
enum class AggregationStrategy : std::int32_t {
    NN = 0,
    NS = 1,
    NA = 2,
    SN = 3,
    SS = 4,
    SA = 5,
};

inline constexpr std::array<AggregationStrategy, 6> kAllStrategies = {
    AggregationStrategy::NN, AggregationStrategy::NS, AggregationStrategy::NA,
    AggregationStrategy::SN, AggregationStrategy::SS, AggregationStrategy::SA};

const char* to_string(AggregationStrategy a);
std::optional<AggregationStrategy> strategy_from_string(std::string_view name);
std::optional<AggregationStrategy> strategy_from_code(std::int64_t code);

inline bool has_self_loop(AggregationStrategy a) {
    return static_cast<std::int32_t>(a) >= 3;
}

enum class Normalization { none, asymmetric, symmetric };

inline Normalization normalization_of(AggregationStrategy a) {
    switch (static_cast<std::int32_t>(a) % 3) {
        case 0: return Normalization::none;
        case 1: return Normalization::symmetric;
        default: return Normalization::asymmetric;
    }
}

// The five parameters that define one message-passing algorithm.
struct ParamSet {
    std::int32_t dim = 1;       // d: message dimension
    std::int32_t steps = 1;     // k: message-passing steps
    std::int32_t width = -1;    // w: sampled neighbors per node; -1 = all
    bool nonlinear = false;     // l: ReLU between steps
    AggregationStrategy aggregation = AggregationStrategy::NN;  // a

    void validate() const;
    bool operator==(const ParamSet&) const = default;
};

// Multiplicity matrix of one sampling round: entry (u,v) counts how many of
// u's w draws hit v. With width == -1 it is the binary adjacency.
struct SampledAdjacency {
    CountCsr counts;
};

using AggregationOperator = RealCsr;

// Whether normalization degrees are row sums of the operand M (self-loop
// included for S*), or of the sampled adjacency alone. The former is the
// default; the latter is the literal normalization-table variant, exposed
// only for comparison.
enum class DegreeMode { operand_row_sums, adjacency_only };

SampledAdjacency sample_neighbors(const SparseGraph& graph, std::int32_t width,
                                  std::mt19937_64& rng);

AggregationOperator build_aggregation(const SampledAdjacency& sampled, AggregationStrategy a,
                                      DegreeMode degree_mode = DegreeMode::operand_row_sums);

// k steps of aggregate -> transform -> nonlinearity, starting from the
// dataset features. layer_weights holds W_1 (d0 x d) .. W_k (d x d). With
// train_mode and dropout > 0, inverted dropout is applied to each layer
// input. Neighbors are resampled at every step when width > 0.
Eigen::MatrixXd forward(const Dataset& dataset, const ParamSet& params,
                        std::span<const Eigen::MatrixXd> layer_weights, std::mt19937_64& rng,
                        bool train_mode, double dropout = 0.0,
                        DegreeMode degree_mode = DegreeMode::operand_row_sums);

// Fixed product of steps and width: width = floor(budget / steps).
std::int32_t pixie_width(std::int32_t steps, std::int32_t budget = 2000);

// Named parameter sets reproducing existing algorithms. pixie_steps is
// required for (and only for) "pixie".
ParamSet preset(std::string_view name, std::optional<std::int32_t> pixie_steps = std::nullopt);

inline constexpr std::array<std::string_view, 5> kPresetNames = {"pagerank", "pixie", "gcn",
                                                                 "graphsage", "sgcn"};

}  // namespace autogm
